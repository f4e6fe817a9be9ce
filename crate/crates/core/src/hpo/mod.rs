//! Bayesian hyperparameter search.

mod gp;
mod optimizer;
mod space;

pub use gp::{expected_improvement, GaussianProcess, KernelParams};
pub use optimizer::{run_hpo, BayesOpt, History, HpoOutcome, Trial, TrialStatus};
pub use space::{cnn_from_config, Config, Dimension, Domain, ParamValue, SearchSpace};
