//! Derivation of independent per-stage seeds from one master seed.

/// Pipeline stages that consume randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    PrimStart,
    Sampler,
    Clustering,
    Representatives,
}

impl Stage {
    fn tag(self) -> u64 {
        match self {
            Stage::PrimStart => 1,
            Stage::Sampler => 2,
            Stage::Clustering => 3,
            Stage::Representatives => 4,
        }
    }
}

// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stage_seed(master: u64, stage: Stage) -> u64 {
    mix(mix(master) ^ stage.tag())
}

/// Seed for the `index`-th independent stream under `seed` (restarts, sweep cells).
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    mix(seed ^ mix(index.wrapping_add(0x5EED)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stages_differ() {
        let s: Vec<u64> = [
            Stage::PrimStart,
            Stage::Sampler,
            Stage::Clustering,
            Stage::Representatives,
        ]
        .iter()
        .map(|&st| stage_seed(42, st))
        .collect();
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                assert_ne!(s[i], s[j]);
            }
        }
        assert_eq!(
            stage_seed(42, Stage::Sampler),
            stage_seed(42, Stage::Sampler)
        );
        assert_ne!(stream_seed(1, 0), stream_seed(1, 1));
    }
}
