//! Reverse-mode differentiation substrate: dense tensors, a recording
//! tape, parameter storage with SGD, and the seeded generator.

mod params;
mod rng;
mod tape;
mod tensor;

pub use params::{Gradients, ParamId, ParamStore, Parameter};
pub use rng::Rng;
pub use tape::{log_sum_exp, sigmoid, softmax, Axis, ElementwiseOp, Entry, Tape, Var};
pub use tensor::Tensor;

use crate::scalar::Scalar;

/// Glorot-uniform matrix, entries in `±√(6 / (fan_in + fan_out))`.
pub fn glorot<T: Scalar>(rows: usize, cols: usize, rng: &mut Rng) -> Tensor<T> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    uniform(rows, cols, bound, rng)
}

/// Matrix with entries drawn uniformly from `[-bound, bound)`.
pub fn uniform<T: Scalar>(rows: usize, cols: usize, bound: f64, rng: &mut Rng) -> Tensor<T> {
    let data = (0..rows * cols)
        .map(|_| T::lit(rng.uniform(-bound, bound)))
        .collect();
    Tensor::from_vec(rows, cols, data).expect("shape matches data")
}
