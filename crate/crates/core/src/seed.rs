//! Fan-out of one top-level seed into named, independent sub-seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a sub-seed from a parent seed and a path of labels.
///
/// `sub_seed(7, &["fold", "3"])` is stable across platforms and releases.
pub fn sub_seed(seed: u64, path: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for part in path {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

pub fn rng(seed: u64, path: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(seed, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_paths_give_distinct_seeds() {
        assert_ne!(sub_seed(1, &["init"]), sub_seed(1, &["dropout"]));
        assert_ne!(sub_seed(1, &["ab", "c"]), sub_seed(1, &["a", "bc"]));
        assert_eq!(sub_seed(9, &["folds"]), sub_seed(9, &["folds"]));
    }
}
