//! Graph neural networks with labels as graph vertices, built on a small
//! reverse-mode autodiff engine over dense and CSR tensors.

pub mod autodiff;
pub mod error;
pub mod experiment;
pub mod gradcheck;
pub mod graph;
pub mod hetero;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod sparse;
pub mod synthetic;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
