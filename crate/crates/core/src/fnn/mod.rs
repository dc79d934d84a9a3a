//! Feed-forward network trained from scratch: dense layers, ReLU/softmax,
//! inverted dropout, cross-entropy losses and Adam.

pub mod config;
pub mod gradcheck;
pub mod io;
pub mod loss;
pub mod network;
pub mod train;

use thiserror::Error;

pub use config::{Activation, AdamConfig, LayerConfig, LossKind, NetworkConfig};
pub use gradcheck::{
    analytic_gradients, check_gradients, gradient_check, GradCheckOptions, GradCheckReport,
};
pub use io::{WeightsFile, WeightsMeta};
pub use loss::loss;
pub use network::{Gradients, Network};
pub use train::{Batchable, TrainHistory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FnnError {
    #[error("bad network dimensions: {0}")]
    BadDimensions(String),
    #[error("bad training configuration: {0}")]
    BadConfig(String),
    #[error("expected {expected} values, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("input contains a non-finite value")]
    NonFiniteInput,
    #[error("non-finite activation in layer {layer}")]
    NonFiniteActivation { layer: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("loss diverged to {loss} in epoch {epoch}")]
    DivergedLoss { epoch: usize, loss: f64 },
    #[error("weights file: {0}")]
    Format(String),
}
