//! α units (linear mixing across all tasks' subspaces) and β mixers
//! (per-task weighting of layer outputs).

use super::preset::{
    alpha_entries, beta_entries, free_count, AlphaInit, AlphaPattern, BetaPattern,
};
use crate::diffcore::{Axis, Entry, ParamId, ParamStore, Tape, Tensor, Var};
use crate::encoder::SUBSPACES;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `(MS) × (MS)` mixing matrix applied after layer `layer`.
///
/// Rows are outputs and columns inputs, both ordered task A subspace 1,
/// task A subspace 2, task B subspace 1, ... The matrix is assembled from
/// `entries` over the raw parameter `raw` (`1 × (MS)²`): fixed entries are
/// constants and tied entries read the same raw element.
#[derive(Clone, Debug)]
pub struct AlphaUnit<T> {
    pub layer: usize,
    pub size: usize,
    pub raw: ParamId,
    pub entries: Vec<Entry<T>>,
}

impl<T: Scalar> AlphaUnit<T> {
    pub fn new(
        store: &mut ParamStore<T>,
        layer: usize,
        tasks: usize,
        pattern: AlphaPattern,
        init: AlphaInit,
    ) -> Self {
        let (entries, raw) = alpha_entries(pattern, layer, tasks, init);
        let size = tasks * SUBSPACES;
        let raw = store.add(
            format!("alpha.{layer}"),
            Tensor::from_f64(1, size * size, &raw).expect("square"),
        );
        AlphaUnit {
            layer,
            size,
            raw,
            entries,
        }
    }

    /// Replaces the constraint pattern and resets the raw values.
    pub fn reset(&mut self, store: &mut ParamStore<T>, pattern: AlphaPattern, init: AlphaInit) {
        let (entries, raw) = alpha_entries(pattern, self.layer, self.size / SUBSPACES, init);
        self.entries = entries;
        *store.value_mut(self.raw) = Tensor::from_f64(1, raw.len(), &raw).expect("row");
    }

    pub fn matrix(&self, tape: &mut Tape<'_, T>) -> Result<Var> {
        let raw = tape.param(self.raw);
        tape.assemble(Some(raw), self.size, self.size, &self.entries)
    }

    /// Current matrix values without a tape.
    pub fn values(&self, store: &ParamStore<T>) -> Tensor<T> {
        let raw = store.value(self.raw).data();
        let data = self.entries.iter().map(|e| resolve(e, raw)).collect();
        Tensor::from_vec(self.size, self.size, data).expect("square")
    }

    pub fn trainable(&self) -> usize {
        free_count(&self.entries)
    }
}

/// Task `task`'s `K` layer weights, assembled like [`AlphaUnit`].
#[derive(Clone, Debug)]
pub struct BetaMixer<T> {
    pub task: usize,
    pub raw: ParamId,
    pub entries: Vec<Entry<T>>,
}

impl<T: Scalar> BetaMixer<T> {
    pub fn new(
        store: &mut ParamStore<T>,
        task: usize,
        main_task: usize,
        layers: usize,
        pattern: BetaPattern,
    ) -> Self {
        let (entries, raw) = beta_entries(pattern, task, main_task, layers);
        let raw = store.add(
            format!("beta.{task}"),
            Tensor::from_f64(1, layers, &raw).expect("row"),
        );
        BetaMixer { task, raw, entries }
    }

    pub fn reset(&mut self, store: &mut ParamStore<T>, pattern: BetaPattern, main_task: usize) {
        let (entries, raw) = beta_entries(pattern, self.task, main_task, self.entries.len());
        self.entries = entries;
        *store.value_mut(self.raw) = Tensor::from_f64(1, raw.len(), &raw).expect("row");
    }

    pub fn layers(&self) -> usize {
        self.entries.len()
    }

    pub fn weights(&self, tape: &mut Tape<'_, T>) -> Result<Var> {
        let raw = tape.param(self.raw);
        tape.assemble(Some(raw), 1, self.entries.len(), &self.entries)
    }

    pub fn values(&self, store: &ParamStore<T>) -> Vec<T> {
        let raw = store.value(self.raw).data();
        self.entries.iter().map(|e| resolve(e, raw)).collect()
    }

    pub fn trainable(&self) -> usize {
        free_count(&self.entries)
    }
}

fn resolve<T: Scalar>(entry: &Entry<T>, raw: &[T]) -> T {
    match *entry {
        Entry::Fixed(v) => v,
        Entry::Free(i) => raw[i],
    }
}

/// Stacks equally shaped tensors as rows of one `n × (rows·cols)` matrix.
fn stack_flat<T: Scalar>(tape: &mut Tape<'_, T>, parts: &[Var], op: &'static str) -> Result<Var> {
    let shape = tape.shape(parts[0]);
    let mut rows = Vec::with_capacity(parts.len());
    for &p in parts {
        if tape.shape(p) != shape {
            return Err(Error::Dimension {
                op,
                lhs: shape,
                rhs: tape.shape(p),
            });
        }
        rows.push(tape.reshape(p, 1, shape.0 * shape.1)?);
    }
    tape.concat(&rows, Axis::Rows)
}

/// Output `i` is `Σ_j alpha[i][j] · inputs[j]`, position by position.
pub fn alpha_combine<T: Scalar>(
    tape: &mut Tape<'_, T>,
    alpha: Var,
    inputs: &[Var],
) -> Result<Vec<Var>> {
    let (n, cols) = tape.shape(alpha);
    if n != cols || inputs.len() != n {
        return Err(Error::Config(format!(
            "alpha unit of shape {n}x{cols} cannot combine {} subspace outputs",
            inputs.len()
        )));
    }
    let shape = tape.shape(inputs[0]);
    let stacked = stack_flat(tape, inputs, "alpha_combine")?;
    let mixed = tape.matmul(alpha, stacked)?;
    (0..n)
        .map(|i| {
            let row = tape.slice(mixed, Axis::Rows, i, 1)?;
            tape.reshape(row, shape.0, shape.1)
        })
        .collect()
}

/// `Σ_k beta[k] · layers[k]` for a `1 × K` weight row.
pub fn beta_mix<T: Scalar>(tape: &mut Tape<'_, T>, beta: Var, layers: &[Var]) -> Result<Var> {
    if layers.is_empty() || tape.shape(beta) != (1, layers.len()) {
        return Err(Error::Config(format!(
            "beta weights of shape {:?} cannot mix {} layer outputs",
            tape.shape(beta),
            layers.len()
        )));
    }
    let shape = tape.shape(layers[0]);
    let stacked = stack_flat(tape, layers, "beta_mix")?;
    let mixed = tape.matmul(beta, stacked)?;
    tape.reshape(mixed, shape.0, shape.1)
}

/// Number of α and β entries in a model with `tasks` task networks of
/// `layers` layers and `subspaces` subspaces per layer.
pub fn count_extra_params(tasks: usize, layers: usize, subspaces: usize) -> (usize, usize) {
    let n = subspaces * tasks;
    (n * n * layers, layers * tasks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::Rng;

    fn random(rows: usize, cols: usize, rng: &mut Rng) -> Tensor<f64> {
        crate::diffcore::uniform(rows, cols, 1.0, rng)
    }

    fn combine(alpha: &Tensor<f64>, inputs: &[Tensor<f64>]) -> Vec<Tensor<f64>> {
        let store = ParamStore::<f64>::new();
        let mut tape = Tape::new(&store);
        let a = tape.constant(alpha.clone());
        let xs: Vec<Var> = inputs.iter().map(|x| tape.constant(x.clone())).collect();
        let out = alpha_combine(&mut tape, a, &xs).unwrap();
        out.iter().map(|&v| tape.value(v).clone()).collect()
    }

    #[test]
    fn identity_alpha_returns_inputs() {
        let mut rng = Rng::new(1);
        let xs: Vec<_> = (0..4).map(|_| random(3, 2, &mut rng)).collect();
        let out = combine(&Tensor::identity(4), &xs);
        assert_eq!(out, xs);
    }

    #[test]
    fn constant_quarter_averages() {
        let mut rng = Rng::new(2);
        let xs: Vec<_> = (0..4).map(|_| random(3, 2, &mut rng)).collect();
        let out = combine(&Tensor::filled(4, 4, 0.25), &xs);
        for o in &out {
            for (idx, v) in o.data().iter().enumerate() {
                let expect = 0.25 * xs.iter().map(|x| x.data()[idx]).sum::<f64>();
                assert!((v - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn random_alpha_matches_double_loop() {
        let mut rng = Rng::new(3);
        let alpha = random(4, 4, &mut rng);
        let xs: Vec<_> = (0..4).map(|_| random(5, 3, &mut rng)).collect();
        let out = combine(&alpha, &xs);
        for i in 0..4 {
            for r in 0..5 {
                for c in 0..3 {
                    let mut acc = 0.0;
                    for j in 0..4 {
                        acc += alpha.get(i, j) * xs[j].get(r, c);
                    }
                    assert!((out[i].get(r, c) - acc).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn alpha_count_mismatch_is_config_error() {
        let store = ParamStore::<f64>::new();
        let mut tape = Tape::new(&store);
        let a = tape.constant(Tensor::identity(4));
        let x = tape.constant(Tensor::zeros(2, 2));
        assert!(matches!(
            alpha_combine(&mut tape, a, &[x, x, x]),
            Err(Error::Config(_))
        ));
    }

    fn mix(beta: &[f64], layers: &[Tensor<f64>]) -> Result<Tensor<f64>> {
        let store = ParamStore::<f64>::new();
        let mut tape = Tape::new(&store);
        let b = tape.constant(Tensor::from_vec(1, beta.len(), beta.to_vec()).unwrap());
        let xs: Vec<Var> = layers.iter().map(|x| tape.constant(x.clone())).collect();
        let out = beta_mix(&mut tape, b, &xs)?;
        Ok(tape.value(out).clone())
    }

    #[test]
    fn beta_examples() {
        let mut rng = Rng::new(4);
        let xs: Vec<_> = (0..3).map(|_| random(4, 6, &mut rng)).collect();
        assert_eq!(mix(&[0.0, 0.0, 1.0], &xs).unwrap(), xs[2]);
        assert_eq!(mix(&[0.0, 0.0, 0.0], &xs).unwrap(), Tensor::zeros(4, 6));
        let mean = mix(&[1.0 / 3.0; 3], &xs).unwrap();
        for (idx, v) in mean.data().iter().enumerate() {
            let expect = xs.iter().map(|x| x.data()[idx]).sum::<f64>() / 3.0;
            assert!((v - expect).abs() < 1e-15);
        }
        let odd = vec![xs[0].clone(), Tensor::zeros(4, 5)];
        assert!(matches!(
            mix(&[0.5, 0.5], &odd),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(mix(&[1.0], &xs), Err(Error::Config(_))));
    }

    #[test]
    fn extra_param_counts() {
        assert_eq!(count_extra_params(1, 1, 2), (4, 1));
        assert_eq!(count_extra_params(2, 3, 2), (48, 6));
        assert_eq!(count_extra_params(4, 3, 2), (192, 12));
    }
}
