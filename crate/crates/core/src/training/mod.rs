//! Offline training of reversible models from logged motion.

pub mod adam;
pub mod dataset;
pub mod filter;
pub mod loss;
pub mod trainer;

pub use adam::{Adam, AdamConfig};
pub use dataset::{
    preprocess, split_episodes, Dataset, DatasetMeta, DatasetStats, EpisodeLog, LogRow,
    PreprocessConfig, Sample, LOG_HEADER,
};
pub use filter::{derivative, Biquad};
pub use loss::{loss_and_gradient, losses, Gradients, LossConfig, Losses};
pub use trainer::{
    holdout_losses, normalization_for, train, train_from, write_loss_records, LossRecord,
    TrainConfig,
};
