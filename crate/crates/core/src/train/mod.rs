//! Training: node selection, self-training with confidence weighting,
//! loss, optimizer and the epoch loop.

pub mod confidence;
pub mod engine;
pub mod loss;
pub mod optim;
pub mod selection;

pub use confidence::{gate_pseudo_labels, training_confidence, ConfidenceVariant, PseudoLabel, PseudoState};
pub use engine::{infer, infer_with, train, EpochRecord, Inference, TrainConfig, TrainOutcome};
pub use loss::{composite_loss, cross_entropy};
pub use optim::{cosine_lr, Adam};
pub use selection::{select_training_nodes, Selection};
