//! Desk-scale benchmark: regress box orientation from corner features with
//! a naive angle head, a single-frequency code head, or a dual-frequency
//! code head, and compare symmetry-aware angular errors.

pub mod dataset;
pub mod eval;
pub mod model;
pub mod train;

pub use dataset::{generate_dataset, DatasetConfig, OrientedBox, Sample, FEATURE_DIM};
pub use eval::{evaluate, evaluate_with, ErrorSummary, EvalReport, SampleError};
pub use model::{Head, Regressor};
pub use train::{train, EpochLoss, TrainConfig, TrainOutcome};
