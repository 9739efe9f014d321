//! The per-PU weight candidate machinery of the adaptive method: one offline
//! set, six single-step perturbations, and one pseudo-random candidate that
//! the decoder re-derives from the PU's coordinates alone.
//!
//! ```text
//! cargo run --release -p l3tf --example candidate_weights
//! ```

use l3tf::codec::candidate_set;
use l3tf::modes::IntraMode;
use l3tf::rng::prng_for_pu;
use l3tf::weights::WeightSet;

fn main() {
    let offline = WeightSet::new(20, 30, 14);
    let mode = IntraMode::new(22);
    let (frame, x, y) = (0u32, 64u32, 32u32);

    println!("offline weights for mode {}: {:?}/64\n", mode.id(), offline.components());
    println!("candidates for the PU at ({x}, {y}) of frame {frame}:");
    let mut rng = prng_for_pu(frame, x, y, mode);
    let cands = candidate_set(offline, &mut rng);
    for (i, w) in cands.sets.iter().enumerate() {
        let kind = match i {
            0 => "offline",
            7 => "pseudo-random",
            _ => "perturbation",
        };
        println!(
            "  flag={i} ({kind:>13}): ({:>3}, {:>3}, {:>3})  sum={}",
            w.rho1,
            w.rho2,
            w.rho3,
            w.sum()
        );
    }

    // The decoder rebuilds the same set without side information: the
    // generator is seeded purely from (frame, x, y, mode).
    let mut decoder_rng = prng_for_pu(frame, x, y, mode);
    let rebuilt = candidate_set(offline, &mut decoder_rng);
    for i in 0..8 {
        assert_eq!(cands.sets[i].components(), rebuilt.sets[i].components());
    }
    println!("\ndecoder re-derived all 8 candidates identically");

    // A different PU position draws a different random candidate.
    let mut other = prng_for_pu(frame, x + 16, y, mode);
    let shifted = candidate_set(offline, &mut other);
    println!(
        "neighboring PU's random candidate: {:?} (this PU: {:?})",
        shifted.sets[7].components(),
        cands.sets[7].components()
    );
}
