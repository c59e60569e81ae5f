//! Mini-batch training with seeded shuffling, dev-MAP early stopping and
//! best-checkpoint tracking.

mod audit;
mod config;
mod optim;
mod train;

pub use audit::{finite_diff_audit, AuditConfig, AuditReport};
pub use config::{OptimizerKind, TrainConfig};
pub use optim::Optimizer;
pub use train::{
    evaluate_map, multi_seed_run, train, training_loss, Clock, EvalRecord, NoClock, StepRecord,
    TrainHistory, TrainOutcome,
};
