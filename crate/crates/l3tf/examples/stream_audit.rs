//! Parse a stream and report its prediction-unit structure: the quadtree
//! leaf sizes, chosen modes, and where the adaptive 3-bit candidate flags
//! appear (only on PUs of 16 pixels and larger).
//!
//! ```text
//! cargo run --release -p l3tf --example stream_audit
//! ```

use std::collections::BTreeMap;

use l3tf::codec::{audit_stream, encode_frame, EncoderConfig, Method};
use l3tf::synth;
use l3tf::trainer::default_init_weights;

fn main() {
    let plane = synth::photo_like(192, 192, 11);
    let config = EncoderConfig::new(Method::ThreeTapAdaptive, default_init_weights());
    let bytes = encode_frame(&plane, &config).expect("encode");
    let (decoded, pus) = audit_stream(&bytes).expect("audit");
    assert_eq!(decoded, plane);

    println!(
        "stream: {} bytes for {}x{} adaptive\n",
        bytes.len(),
        plane.width(),
        plane.height()
    );

    let mut by_size: BTreeMap<u32, (usize, usize, usize)> = BTreeMap::new();
    for pu in &pus {
        let entry = by_size.entry(pu.size).or_default();
        entry.0 += 1;
        if pu.flagged {
            entry.1 += 1;
        }
        if pu.candidate_index != 0 {
            entry.2 += 1;
        }
    }

    println!("{:>6} {:>7} {:>9} {:>14}", "size", "count", "flagged", "refined (!=0)");
    for (size, (count, flagged, refined)) in &by_size {
        println!("{size:>6} {count:>7} {flagged:>9} {refined:>14}");
        let expect = if *size >= 16 { *count } else { 0 };
        assert_eq!(*flagged, expect, "flags appear exactly on PUs >= 16");
    }

    let mut mode_histogram: BTreeMap<u8, usize> = BTreeMap::new();
    for pu in &pus {
        *mode_histogram.entry(pu.mode).or_default() += 1;
    }
    let mut popular: Vec<_> = mode_histogram.into_iter().collect();
    popular.sort_by_key(|&(mode, count)| (std::cmp::Reverse(count), mode));
    println!("\nmost used intra modes:");
    for (mode, count) in popular.iter().take(8) {
        println!("  mode {mode:>2}: {count} PUs");
    }
}
