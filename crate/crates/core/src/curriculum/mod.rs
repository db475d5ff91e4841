//! Dataset splitting, noisy/clean example construction and SNR-phased training.

mod examples;
mod split;
mod train;

pub use examples::{materialize_examples, MaterializeConfig, NoisyExample};
pub use split::{build_split, Combo, DatasetSplit, NoiseSubset};
pub use train::{
    train_curriculum, train_curriculum_with, ConvergenceLog, IterationState, LogRecord, PhasePlan, TrainConfig,
    TrainOutcome,
};

/// Derives an independent stream seed from a base seed and a path of indices.
pub(crate) fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    path.iter().fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p)))
}
