//! Small dense classifier, data splitting, scaling and evaluation metrics.

pub mod metrics;
pub mod mlp;
pub mod scaler;
pub mod split;
pub mod train;

pub use metrics::{ClassMetrics, EvalReport};
pub use mlp::{AdamState, MlpModel};
pub use scaler::Scaler;
pub use split::{stratified_split, SplitIndices};
pub use train::{train, EpochStats, TrainConfig, TrainReport};

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("class {class} has only {size} samples")]
    ClassTooSmall { class: usize, size: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}
