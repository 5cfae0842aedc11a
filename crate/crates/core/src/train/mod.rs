//! Loss, learning-rate schedule, optimizer, sample preparation and the
//! training loop.

mod data;
mod loss;
mod optim;
mod schedule;
mod trainer;

pub use data::{ExperimentConfig, PreparedData, Sample, SampleSet};
pub use loss::{sample_loss_grad, weighted_loss};
pub use optim::{Adam, AdamConfig};
pub use schedule::{CosineSchedule, HoldPolicy};
pub use trainer::{evaluate_loss, train, EpochRecord, TrainConfig, TrainHooks, TrainOutcome};
