//! Deterministic derivation of independent seeds from one master seed.

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream called `name` under `seed`, e.g. `substream(7, "shuffle")`.
pub fn substream(seed: u64, name: &str) -> u64 {
    name.bytes().fold(splitmix64(seed), |h, b| splitmix64(h ^ b as u64))
}

/// Seed of the `index`-th member of a family of streams.
pub fn indexed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_separate_streams() {
        assert_ne!(substream(1, "init"), substream(1, "shuffle"));
        assert_ne!(substream(1, "init"), substream(2, "init"));
        assert_eq!(substream(3, "dropout"), substream(3, "dropout"));
        assert_ne!(indexed(3, 0), indexed(3, 1));
    }
}
