//! Seed derivation. Each (repetition, slot) gets its own seed and each
//! node a separate ChaCha stream under it, so adding a node never shifts
//! another node's draws.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn repetition_seed(seed: u64, repetition: u64) -> u64 {
    mix(mix(seed) ^ repetition)
}

pub fn slot_seed(repetition_seed: u64, slot: u64) -> u64 {
    mix(repetition_seed ^ mix(slot.wrapping_add(1)))
}

pub fn node_rng(slot_seed: u64, node: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(slot_seed);
    rng.set_stream(node as u64);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_core::RngCore;

    #[test]
    fn streams_are_independent_and_reproducible() {
        let s = slot_seed(repetition_seed(7, 0), 3);
        assert_eq!(node_rng(s, 1).next_u64(), node_rng(s, 1).next_u64());
        assert_ne!(node_rng(s, 1).next_u64(), node_rng(s, 2).next_u64());
        assert_ne!(slot_seed(repetition_seed(7, 0), 3), slot_seed(repetition_seed(7, 1), 3));
    }
}
