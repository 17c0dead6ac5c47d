//! Deterministic derivation of independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Hashes a base seed, a textual stream label and a counter into a 256-bit
/// ChaCha key. Streams with different labels or counters are independent.
pub fn stream_key(base_seed: u64, label: &str, counter: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(base_seed.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(counter.to_le_bytes());
    hasher.finalize().into()
}

pub fn stream_rng(base_seed: u64, label: &str, counter: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(stream_key(base_seed, label, counter))
}

/// 64-bit seed derived the same way, for APIs that take a plain integer seed.
pub fn derive_seed(base_seed: u64, label: &str, counter: u64) -> u64 {
    let key = stream_key(base_seed, label, counter);
    u64::from_le_bytes(key[..8].try_into().expect("8 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream_rng(7, "g", 0).random();
        let b: u64 = stream_rng(7, "g", 0).random();
        let c: u64 = stream_rng(7, "g", 1).random();
        let d: u64 = stream_rng(7, "h", 0).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn label_boundaries_are_unambiguous() {
        assert_ne!(stream_key(1, "ab", 0), stream_key(1, "a", 0));
    }
}
