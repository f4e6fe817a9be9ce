//! Adam optimisation with early stopping on validation accuracy.

mod adam;
mod fit;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use fit::{
    evaluate, fit, init_network, repeated_runs, Dataset, EpochMetrics, Evaluation, FitOutcome, RunSummary, SplitData,
    TrainConfig,
};
