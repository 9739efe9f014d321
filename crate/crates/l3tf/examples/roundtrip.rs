//! Encode and decode one image with all four methods and verify the
//! reconstruction is bit-exact.
//!
//! ```text
//! cargo run --release -p l3tf --example roundtrip
//! ```

use l3tf::codec::{decode_frame, encode_frame, EncoderConfig, Method};
use l3tf::synth;
use l3tf::trainer::default_init_weights;

fn main() {
    let plane = synth::photo_like(192, 160, 42);
    let pixels = plane.width() as f64 * plane.height() as f64;
    let weights = default_init_weights();

    println!(
        "image: {}x{} synthetic photo-like\n",
        plane.width(),
        plane.height()
    );
    println!("{:>9} {:>10} {:>7}  round trip", "method", "bits", "bpp");
    for method in Method::ALL {
        let config = EncoderConfig::new(method, weights.clone());
        let bytes = encode_frame(&plane, &config).expect("encode");
        let decoded = decode_frame(&bytes).expect("decode");
        assert_eq!(decoded, plane, "reconstruction must be bit-exact");
        let bits = bytes.len() as u64 * 8;
        println!(
            "{:>9} {:>10} {:>7.4}  ok",
            method.name(),
            bits,
            bits as f64 / pixels
        );
    }
    println!("\nevery stream decoded back to the exact source samples");
}
