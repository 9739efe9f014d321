//! Deterministic PRNG shared by encoder and decoder.
//!
//! The eighth candidate weight set of a prediction unit is drawn from a
//! generator seeded purely from the PU's coordinates, so the decoder derives
//! the identical candidate without side information.

use crate::modes::IntraMode;

/// splitmix64 generator. The output sequence is a pure function of the seed.
#[derive(Debug, Clone)]
pub struct Prng64 {
    state: u64,
}

impl Prng64 {
    pub fn new(seed: u64) -> Prng64 {
        Prng64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, n)` by modulo. Bias is irrelevant for the tiny
    /// ranges used here (6 and 2).
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

/// Generator for one PU's random weight candidate. The seed mixes frame
/// index, PU position, and mode id so repeated encodes and the decoder
/// always agree.
pub fn prng_for_pu(frame_index: u32, pu_x: u32, pu_y: u32, mode: IntraMode) -> Prng64 {
    let seed = ((frame_index as u64) << 48)
        ^ ((pu_x as u64) << 28)
        ^ ((pu_y as u64) << 8)
        ^ mode.id() as u64;
    Prng64::new(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent one-shot splitmix64 evaluation used as the oracle.
    fn splitmix64_once(seed: u64) -> u64 {
        let s = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = s;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    #[test]
    fn matches_reference_constant() {
        // Widely published first output of splitmix64 for seed 0.
        assert_eq!(Prng64::new(0).next_u64(), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn same_pu_same_stream() {
        let mut a = prng_for_pu(3, 16, 32, IntraMode::new(20));
        let mut b = prng_for_pu(3, 16, 32, IntraMode::new(20));
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn mode_changes_stream() {
        let a = prng_for_pu(0, 0, 0, IntraMode::new(0)).next_u64();
        let b = prng_for_pu(0, 0, 0, IntraMode::new(1)).next_u64();
        assert_eq!(a, splitmix64_once(0));
        assert_eq!(b, splitmix64_once(1));
        assert_ne!(a, b);
    }

    #[test]
    fn seed_formula_drives_first_output() {
        let seed = (1u64 << 48) ^ (16u64 << 28) ^ (32u64 << 8) ^ 10;
        assert_eq!(
            prng_for_pu(1, 16, 32, IntraMode::new(10)).next_u64(),
            splitmix64_once(seed)
        );
    }
}
