//! In-memory benchmark of the four methods over a synthetic corpus, with
//! round-trip verification baked into every measurement. Mirrors the
//! `l3tf bench` command.
//!
//! ```text
//! cargo run --release -p l3tf --example bench_methods
//! ```

use l3tf::codec::{decode_frame, encode_frame, EncoderConfig, Method};
use l3tf::synth;
use l3tf::trainer::default_init_weights;

fn main() {
    let corpus: Vec<_> = (0..6)
        .map(|i| (format!("synth{i:02}"), synth::photo_like(160, 160, 3000 + i)))
        .collect();
    let weights = default_init_weights();

    println!("{:<8} {:>9} {:>9} {:>9} {:>9}   (bpp)", "image", "block", "sap", "3tap", "adaptive");
    let mut avg = [0.0f64; 4];
    for (name, plane) in &corpus {
        let pixels = plane.width() as f64 * plane.height() as f64;
        let mut row = [0.0f64; 4];
        for (i, method) in Method::ALL.into_iter().enumerate() {
            let config = EncoderConfig::new(method, weights.clone());
            let bytes = encode_frame(plane, &config).expect("encode");
            assert_eq!(
                decode_frame(&bytes).expect("decode"),
                *plane,
                "round trip is a gate, not a warning"
            );
            row[i] = bytes.len() as f64 * 8.0 / pixels;
            avg[i] += row[i] / corpus.len() as f64;
        }
        println!(
            "{:<8} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            name, row[0], row[1], row[2], row[3]
        );
    }
    println!(
        "{:<8} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
        "average", avg[0], avg[1], avg[2], avg[3]
    );

    println!("\nreduction vs block baseline:");
    for (i, method) in Method::ALL.into_iter().enumerate().skip(1) {
        println!(
            "  {:>9}: {:+.2}%",
            method.name(),
            100.0 * (1.0 - avg[i] / avg[0])
        );
    }
}
