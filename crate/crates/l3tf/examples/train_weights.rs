//! Two-stage offline weight training on a synthetic corpus: iterative
//! least-squares fitting (stage 1) followed by greedy bitrate descent over
//! single-step weight perturbations (stage 2).
//!
//! ```text
//! cargo run --release -p l3tf --example train_weights
//! ```

use l3tf::synth;
use l3tf::trainer::{corpus_payload_bits, default_init_weights, stage1_train, stage2_search};

fn main() {
    let corpus: Vec<_> = (0..4).map(|i| synth::photo_like(64, 64, 900 + i)).collect();
    let init = default_init_weights();
    let init_bits = corpus_payload_bits(&corpus, &init).unwrap();
    println!("corpus: 4 synthetic 64x64 images");
    println!("initial table bitrate: {init_bits} bits\n");

    let (stage1_weights, report1) = stage1_train(&corpus, &init, 8).unwrap();
    print!("{}", report1.to_text());

    let (final_weights, report2) = stage2_search(&corpus, &stage1_weights).unwrap();
    print!("{}", report2.to_text());

    let total_gain = 100.0 * (1.0 - report2.final_bits as f64 / init_bits as f64);
    println!("\ntotal training gain: {total_gain:.2}% of the initial bitrate");

    println!("\nmodes whose weights moved in stage 2:");
    for mode in 0..35u8 {
        let a = stage1_weights.get(mode);
        let b = final_weights.get(mode);
        if a != b {
            println!(
                "  mode {mode:>2}: {:?} -> {:?}",
                a.components(),
                b.components()
            );
        }
    }

    println!("\nfinal table:\n{}", final_weights.to_text());
}
