use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Index of a trainable parameter inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Clone, Debug)]
pub struct Parameter<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Option<Tensor<T>>,
}

/// Owns every trainable leaf of a model, in registration order.
#[derive(Clone, Debug, Default)]
pub struct ParamStore<T> {
    params: Vec<Parameter<T>>,
    by_name: HashMap<String, ParamId>,
    pending_grads: bool,
}

/// Per-parameter gradients produced by one backward pass.
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub(crate) fn new(n: usize) -> Self {
        Gradients {
            grads: vec![None; n],
        }
    }

    pub(crate) fn accumulate(&mut self, id: ParamId, g: Tensor<T>) {
        match &mut self.grads[id.0] {
            Some(existing) => existing
                .add_assign(&g)
                .expect("parameter gradient keeps its shape"),
            slot => *slot = Some(g),
        }
    }

    pub fn get(&self, id: ParamId) -> Option<&Tensor<T>> {
        self.grads.get(id.0).and_then(Option::as_ref)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor<T>)> {
        self.grads
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.as_ref().map(|g| (ParamId(i), g)))
    }
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore {
            params: Vec::new(),
            by_name: HashMap::new(),
            pending_grads: false,
        }
    }

    /// Registers a parameter. Names must be unique.
    pub fn add(&mut self, name: impl Into<String>, value: Tensor<T>) -> ParamId {
        let name = name.into();
        assert!(
            !self.by_name.contains_key(&name),
            "duplicate parameter name {name}"
        );
        let id = ParamId(self.params.len());
        self.by_name.insert(name.clone(), id);
        self.params.push(Parameter {
            name,
            value,
            grad: None,
        });
        id
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, id: ParamId) -> &Parameter<T> {
        &self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor<T> {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.params[id.0].value
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Parameter<T>)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    /// Total number of scalar entries across all parameters.
    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Adds a backward pass's gradients into the stored gradient slots.
    ///
    /// Parameters that did not take part in the pass receive zeros, so
    /// after this call every parameter has a populated gradient.
    pub fn accumulate(&mut self, grads: &Gradients<T>) -> Result<()> {
        if grads.grads.len() != self.params.len() {
            return Err(Error::Contract(format!(
                "gradient set covers {} parameters, store has {}",
                grads.grads.len(),
                self.params.len()
            )));
        }
        for (p, g) in self.params.iter_mut().zip(&grads.grads) {
            let slot = p
                .grad
                .get_or_insert_with(|| Tensor::zeros(p.value.rows(), p.value.cols()));
            if let Some(g) = g {
                slot.add_assign(g)?;
            }
        }
        self.pending_grads = true;
        Ok(())
    }

    pub fn has_pending_grads(&self) -> bool {
        self.pending_grads
    }

    /// Drops all accumulated gradients.
    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad = None;
        }
        self.pending_grads = false;
    }

    /// Plain gradient descent: `p ← p − lr·grad(p)`, then clears gradients.
    pub fn sgd_step(&mut self, lr: T) -> Result<()> {
        if !self.pending_grads {
            return Err(Error::Contract(
                "sgd_step called without gradients from a backward pass".into(),
            ));
        }
        if !(lr >= T::zero()) {
            return Err(Error::Contract(format!(
                "learning rate must be >= 0, got {lr}"
            )));
        }
        for p in &mut self.params {
            if let Some(g) = p.grad.take() {
                if lr == T::zero() {
                    continue;
                }
                for (w, &d) in p.value.data_mut().iter_mut().zip(g.data()) {
                    *w = *w - lr * d;
                }
            }
        }
        self.pending_grads = false;
        Ok(())
    }

    /// Squared L2 norm of the stored gradients of the given parameters.
    pub fn grad_norm_sq(&self, ids: &[ParamId]) -> T {
        ids.iter()
            .filter_map(|id| self.params[id.0].grad.as_ref())
            .map(Tensor::norm_sq)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with(value: f64) -> (ParamStore<f64>, ParamId) {
        let mut s = ParamStore::new();
        let id = s.add("p", Tensor::scalar(value));
        (s, id)
    }

    #[test]
    fn sgd_step_hand_example() {
        let (mut s, id) = store_with(1.0);
        let mut g = Gradients::new(1);
        g.accumulate(id, Tensor::scalar(2.0));
        s.accumulate(&g).unwrap();
        s.sgd_step(0.1).unwrap();
        assert!((s.value(id).item().unwrap() - 0.8).abs() < 1e-15);
        assert!(s.get(id).grad.is_none());
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let (mut s, id) = store_with(1.25);
        let mut g = Gradients::new(1);
        g.accumulate(id, Tensor::scalar(-7.0));
        s.accumulate(&g).unwrap();
        s.sgd_step(0.0).unwrap();
        assert_eq!(s.value(id).item().unwrap().to_bits(), 1.25f64.to_bits());
    }

    #[test]
    fn step_without_backward_is_a_contract_error() {
        let (mut s, _) = store_with(1.0);
        assert!(matches!(s.sgd_step(0.1), Err(Error::Contract(_))));
    }
}
