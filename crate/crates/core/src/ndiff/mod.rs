//! Small dense reverse-mode autodiff: exactly the operators the argument and
//! event networks need, plus SGD and a checkpoint format.

mod checkpoint;
pub mod gradcheck;
mod layers;
mod optim;
mod tape;
mod tensor;

pub use checkpoint::{read_params, write_params, CHECKPOINT_VERSION};
pub use layers::{Bound, Dense, LstmCell, ParamId, ParamSet};
pub use optim::Sgd;
pub use tape::{Gradients, Tape, Var, PROB_EPSILON};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum NdError {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("loss must be a scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("empty input sequence")]
    EmptySequence,
    #[error("non-finite gradient for parameter {param}")]
    NonFinite { param: String },
    #[error("{0}")]
    Invalid(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
