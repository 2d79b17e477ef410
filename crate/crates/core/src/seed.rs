//! Named random substreams derived from a single root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CLUSTERING: &str = "clustering";
pub const TREE: &str = "tree";
pub const CV: &str = "cv";
pub const SEARCH: &str = "search";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the substream `name` under `root`. Stable across platforms and releases.
pub fn substream(root: u64, name: &str) -> u64 {
    // FNV-1a over the name, then mixed with the root
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    splitmix64(splitmix64(root) ^ h)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_differ_by_name_and_root() {
        assert_ne!(substream(1, CLUSTERING), substream(1, TREE));
        assert_ne!(substream(1, TREE), substream(2, TREE));
        assert_eq!(substream(7, CV), substream(7, CV));
    }
}
