//! Sluice networks for multi-task sequence tagging.
//!
//! Several stacked bidirectional LSTM taggers, one per task, exchange
//! information through trainable mixing matrices (α) between layers and
//! combine their layer outputs through trainable mixture weights (β).
//! Fixing or tying those weights recovers hard parameter sharing, group
//! lasso style block sharing, frustratingly easy domain adaptation, low
//! supervision and cross-stitch networks.
//!
//! The numeric code is generic over [`Scalar`]; the aliases below fix it
//! to `f64`, which is what the trainers and gradient checks use.

pub mod data;
pub mod diffcore;
pub mod encoder;
mod error;
mod scalar;
pub mod sluice;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor = diffcore::Tensor<f64>;
pub type ParamStore = diffcore::ParamStore<f64>;

pub type SluiceModel = sluice::SluiceModel<f64>;
