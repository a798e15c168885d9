//! Recorded computation graph with exact reverse-mode gradients.
//!
//! A [`Tape`] is built fresh for every forward pass. Operations append
//! nodes in evaluation order, so the node list is always topologically
//! sorted and `backward` simply walks it in reverse. Parameter leaves
//! are read in place from the borrowed [`ParamStore`]; their gradients
//! come back as a [`Gradients`] set.

use std::collections::HashMap;

use super::params::{Gradients, ParamId, ParamStore};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementwiseOp {
    Add,
    Mul,
    Tanh,
    Sigmoid,
}

/// One entry of a matrix assembled from a free parameter vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Entry<T> {
    /// Constant, receives no gradient.
    Fixed(T),
    /// Reads element `i` of the free vector; several entries may share one index.
    Free(usize),
}

#[derive(Debug)]
enum Op<T> {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Tanh(Var),
    Sigmoid(Var),
    Concat(Vec<Var>, Axis),
    Slice {
        input: Var,
        axis: Axis,
        start: usize,
    },
    Reshape(Var),
    GatherRows {
        table: Var,
        ids: Vec<usize>,
    },
    Assemble {
        free: Option<Var>,
        entries: Vec<Entry<T>>,
    },
    SoftmaxCrossEntropy {
        logits: Var,
        gold: Vec<usize>,
        probs: Tensor<T>,
    },
    FrobeniusSq(Var),
    Sum(Var),
}

enum Value<T> {
    Owned(Tensor<T>),
    Param(ParamId),
}

struct Node<T> {
    op: Op<T>,
    value: Value<T>,
}

pub struct Tape<'p, T: Scalar> {
    store: &'p ParamStore<T>,
    nodes: Vec<Node<T>>,
    param_vars: HashMap<ParamId, Var>,
    consumed: bool,
}

impl<'p, T: Scalar> Tape<'p, T> {
    pub fn new(store: &'p ParamStore<T>) -> Self {
        Tape {
            store,
            nodes: Vec::new(),
            param_vars: HashMap::new(),
            consumed: false,
        }
    }

    pub fn store(&self) -> &'p ParamStore<T> {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        match &self.nodes[v.0].value {
            Value::Owned(t) => t,
            Value::Param(id) => self.store.value(*id),
        }
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.value(v).shape()
    }

    fn push(&mut self, op: Op<T>, value: Tensor<T>, name: &'static str) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite { op: name });
        }
        self.nodes.push(Node {
            op,
            value: Value::Owned(value),
        });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Records a constant (no gradient flows into it).
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.nodes.push(Node {
            op: Op::Constant,
            value: Value::Owned(value),
        });
        Var(self.nodes.len() - 1)
    }

    /// Leaf for a stored parameter; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.param_vars.get(&id) {
            return v;
        }
        self.nodes.push(Node {
            op: Op::Param(id),
            value: Value::Param(id),
        });
        let v = Var(self.nodes.len() - 1);
        self.param_vars.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        self.push(Op::MatMul(a, b), out, "matmul")
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).transpose();
        self.push(Op::Transpose(a), out, "transpose")
    }

    pub fn elementwise(&mut self, op: ElementwiseOp, args: &[Var]) -> Result<Var> {
        match (op, args) {
            (ElementwiseOp::Add, &[a, b]) => self.add(a, b),
            (ElementwiseOp::Mul, &[a, b]) => self.mul(a, b),
            (ElementwiseOp::Tanh, &[a]) => self.tanh(a),
            (ElementwiseOp::Sigmoid, &[a]) => self.sigmoid(a),
            _ => Err(Error::Contract(format!(
                "{op:?} called with {} operands",
                args.len()
            ))),
        }
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::Dimension {
                op,
                lhs: sa,
                rhs: sb,
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let (x, y) = (self.value(a), self.value(b));
        let data = x
            .data()
            .iter()
            .zip(y.data())
            .map(|(&p, &q)| p + q)
            .collect();
        let out = Tensor::from_vec(x.rows(), x.cols(), data)?;
        self.push(Op::Add(a, b), out, "add")
    }

    /// Adds the `1 × m` row `bias` to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(bias));
        if sb.0 != 1 || sb.1 != sa.1 {
            return Err(Error::Dimension {
                op: "add_row",
                lhs: sa,
                rhs: sb,
            });
        }
        let (x, b) = (self.value(a), self.value(bias));
        let mut data = x.data().to_vec();
        for row in data.chunks_mut(sa.1) {
            for (v, &d) in row.iter_mut().zip(b.data()) {
                *v = *v + d;
            }
        }
        let out = Tensor::from_vec(sa.0, sa.1, data)?;
        self.push(Op::AddRow(a, bias), out, "add_row")
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let (x, y) = (self.value(a), self.value(b));
        let data = x
            .data()
            .iter()
            .zip(y.data())
            .map(|(&p, &q)| p * q)
            .collect();
        let out = Tensor::from_vec(x.rows(), x.cols(), data)?;
        self.push(Op::Mul(a, b), out, "mul")
    }

    /// Multiplies by a constant factor.
    pub fn scale(&mut self, a: Var, factor: T) -> Result<Var> {
        let out = self.value(a).map(|x| x * factor);
        self.push(Op::Scale(a, factor), out, "scale")
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(T::tanh);
        self.push(Op::Tanh(a), out, "tanh")
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(sigmoid);
        self.push(Op::Sigmoid(a), out, "sigmoid")
    }

    pub fn concat(&mut self, parts: &[Var], axis: Axis) -> Result<Var> {
        let first = *parts
            .first()
            .ok_or_else(|| Error::Contract("concat of zero tensors".into()))?;
        if parts.len() == 1 {
            return Ok(first);
        }
        let (r0, c0) = self.shape(first);
        let out = match axis {
            Axis::Rows => {
                let mut data = Vec::new();
                let mut rows = 0;
                for &p in parts {
                    let t = self.value(p);
                    if t.cols() != c0 {
                        return Err(Error::Dimension {
                            op: "concat",
                            lhs: (r0, c0),
                            rhs: t.shape(),
                        });
                    }
                    rows += t.rows();
                    data.extend_from_slice(t.data());
                }
                Tensor::from_vec(rows, c0, data)?
            }
            Axis::Cols => {
                let mut cols = 0;
                for &p in parts {
                    let t = self.value(p);
                    if t.rows() != r0 {
                        return Err(Error::Dimension {
                            op: "concat",
                            lhs: (r0, c0),
                            rhs: t.shape(),
                        });
                    }
                    cols += t.cols();
                }
                let mut data = Vec::with_capacity(r0 * cols);
                for r in 0..r0 {
                    for &p in parts {
                        data.extend_from_slice(self.value(p).row_slice(r));
                    }
                }
                Tensor::from_vec(r0, cols, data)?
            }
        };
        self.push(Op::Concat(parts.to_vec(), axis), out, "concat")
    }

    /// Contiguous range `[start, start + len)` along `axis`.
    pub fn slice(&mut self, a: Var, axis: Axis, start: usize, len: usize) -> Result<Var> {
        let x = self.value(a);
        let (rows, cols) = x.shape();
        let extent = if axis == Axis::Rows { rows } else { cols };
        if len == 0 || start + len > extent {
            return Err(Error::Dimension {
                op: "slice",
                lhs: (rows, cols),
                rhs: (start, len),
            });
        }
        if start == 0 && len == extent {
            return Ok(a);
        }
        let out = match axis {
            Axis::Rows => Tensor::from_vec(
                len,
                cols,
                x.data()[start * cols..(start + len) * cols].to_vec(),
            )?,
            Axis::Cols => {
                let mut data = Vec::with_capacity(rows * len);
                for r in 0..rows {
                    data.extend_from_slice(&x.row_slice(r)[start..start + len]);
                }
                Tensor::from_vec(rows, len, data)?
            }
        };
        self.push(
            Op::Slice {
                input: a,
                axis,
                start,
            },
            out,
            "slice",
        )
    }

    /// Row-major reinterpretation with a new shape of equal size.
    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Result<Var> {
        let x = self.value(a);
        if x.rows() == rows && x.cols() == cols {
            return Ok(a);
        }
        if x.len() != rows * cols {
            return Err(Error::Dimension {
                op: "reshape",
                lhs: x.shape(),
                rhs: (rows, cols),
            });
        }
        let out = Tensor::from_vec(rows, cols, x.data().to_vec())?;
        self.push(Op::Reshape(a), out, "reshape")
    }

    /// Stacks the rows `table[ids[0]], table[ids[1]], ...`.
    pub fn gather_rows(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let t = self.value(table);
        if ids.is_empty() {
            return Err(Error::Contract("gather_rows with no ids".into()));
        }
        let mut data = Vec::with_capacity(ids.len() * t.cols());
        for &i in ids {
            if i >= t.rows() {
                return Err(Error::Dimension {
                    op: "gather_rows",
                    lhs: t.shape(),
                    rhs: (i, 1),
                });
            }
            data.extend_from_slice(t.row_slice(i));
        }
        let out = Tensor::from_vec(ids.len(), t.cols(), data)?;
        self.push(
            Op::GatherRows {
                table,
                ids: ids.to_vec(),
            },
            out,
            "gather_rows",
        )
    }

    /// Builds a `rows × cols` matrix whose entries are constants or elements
    /// of the `1 × n` free vector `free`.
    pub fn assemble(
        &mut self,
        free: Option<Var>,
        rows: usize,
        cols: usize,
        entries: &[Entry<T>],
    ) -> Result<Var> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension {
                op: "assemble",
                lhs: (rows, cols),
                rhs: (entries.len(), 1),
            });
        }
        let free_vals = free.map(|f| self.value(f).data());
        let mut data = Vec::with_capacity(entries.len());
        for e in entries {
            data.push(match *e {
                Entry::Fixed(v) => v,
                Entry::Free(i) => {
                    let vals = free_vals.ok_or_else(|| {
                        Error::Contract("assemble entry references a missing free vector".into())
                    })?;
                    *vals.get(i).ok_or_else(|| {
                        Error::Contract(format!("free index {i} out of range {}", vals.len()))
                    })?
                }
            });
        }
        let out = Tensor::from_vec(rows, cols, data)?;
        self.push(
            Op::Assemble {
                free,
                entries: entries.to_vec(),
            },
            out,
            "assemble",
        )
    }

    /// Summed token cross-entropy `Σ_r −log softmax(logits_r)[gold_r]`.
    ///
    /// Each row of `logits` is one prediction; `gold` holds one label per row.
    pub fn softmax_cross_entropy(&mut self, logits: Var, gold: &[usize]) -> Result<Var> {
        let x = self.value(logits);
        let (rows, classes) = x.shape();
        if classes < 2 {
            return Err(Error::Contract(format!(
                "softmax cross-entropy needs at least 2 classes, got {classes}"
            )));
        }
        if gold.len() != rows {
            return Err(Error::Dimension {
                op: "softmax_cross_entropy",
                lhs: (rows, classes),
                rhs: (gold.len(), 1),
            });
        }
        let mut probs = Vec::with_capacity(rows * classes);
        let mut loss = T::zero();
        for (r, &g) in gold.iter().enumerate() {
            if g >= classes {
                return Err(Error::Label { label: g, classes });
            }
            let row = x.row_slice(r);
            let p = softmax(row);
            let lse = log_sum_exp(row);
            loss = loss + (lse - row[g]);
            probs.extend(p);
        }
        let probs = Tensor::from_vec(rows, classes, probs)?;
        self.push(
            Op::SoftmaxCrossEntropy {
                logits,
                gold: gold.to_vec(),
                probs,
            },
            Tensor::scalar(loss),
            "softmax_cross_entropy",
        )
    }

    /// Squared Frobenius norm of a matrix.
    pub fn frobenius_sq(&mut self, m: Var) -> Result<Var> {
        let out = Tensor::scalar(self.value(m).norm_sq());
        self.push(Op::FrobeniusSq(m), out, "frobenius_sq")
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let out = Tensor::scalar(self.value(a).sum());
        self.push(Op::Sum(a), out, "sum")
    }

    /// Sum of several equally shaped tensors.
    pub fn add_all(&mut self, parts: &[Var]) -> Result<Var> {
        let mut iter = parts.iter();
        let mut acc = *iter
            .next()
            .ok_or_else(|| Error::Contract("add_all of zero tensors".into()))?;
        for &p in iter {
            acc = self.add(acc, p)?;
        }
        Ok(acc)
    }

    /// Reverse sweep from the scalar `loss`.
    ///
    /// A tape can be differentiated once; a second call is an error so
    /// gradients are never silently double counted.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients<T>> {
        if self.consumed {
            return Err(Error::Contract(
                "backward called twice on the same tape".into(),
            ));
        }
        if self.value(loss).shape() != (1, 1) {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got {:?}",
                self.value(loss).shape()
            )));
        }
        self.consumed = true;

        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        let mut out = Gradients::new(self.store.len());
        grads[loss.0] = Some(Tensor::scalar(T::one()));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else {
                if let Op::Param(id) = self.nodes[idx].op {
                    let (r, c) = self.store.value(id).shape();
                    out.accumulate(id, Tensor::zeros(r, c));
                }
                continue;
            };
            self.propagate(idx, g, &mut grads, &mut out)?;
        }
        Ok(out)
    }

    fn grad_slot<'g>(&self, grads: &'g mut [Option<Tensor<T>>], v: Var) -> &'g mut Tensor<T> {
        let (r, c) = self.shape(v);
        grads[v.0].get_or_insert_with(|| Tensor::zeros(r, c))
    }

    fn accumulate(&self, grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) -> Result<()> {
        match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&g),
            slot => {
                *slot = Some(g);
                Ok(())
            }
        }
    }

    fn propagate(
        &self,
        idx: usize,
        g: Tensor<T>,
        grads: &mut [Option<Tensor<T>>],
        out: &mut Gradients<T>,
    ) -> Result<()> {
        match &self.nodes[idx].op {
            Op::Constant => {}
            Op::Param(id) => out.accumulate(*id, g),
            Op::MatMul(a, b) => {
                let da = g.matmul_t(self.value(*b))?;
                let db = self.value(*a).t_matmul(&g)?;
                self.accumulate(grads, *a, da)?;
                self.accumulate(grads, *b, db)?;
            }
            Op::Transpose(a) => self.accumulate(grads, *a, g.transpose())?,
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone())?;
                self.accumulate(grads, *b, g)?;
            }
            Op::AddRow(a, bias) => {
                let cols = g.cols();
                let slot = self.grad_slot(grads, *bias);
                for row in g.data().chunks(cols) {
                    for (s, &d) in slot.data_mut().iter_mut().zip(row) {
                        *s = *s + d;
                    }
                }
                self.accumulate(grads, *a, g)?;
            }
            Op::Mul(a, b) => {
                let (x, y) = (self.value(*a), self.value(*b));
                let da = zip_map(&g, y, |d, q| d * q);
                let db = zip_map(&g, x, |d, p| d * p);
                self.accumulate(grads, *a, da)?;
                self.accumulate(grads, *b, db)?;
            }
            Op::Scale(a, f) => {
                let f = *f;
                self.accumulate(grads, *a, g.map(|d| d * f))?;
            }
            Op::Tanh(a) => {
                let y = self.own_value(idx);
                let da = zip_map(&g, y, |d, t| d * (T::one() - t * t));
                self.accumulate(grads, *a, da)?;
            }
            Op::Sigmoid(a) => {
                let y = self.own_value(idx);
                let da = zip_map(&g, y, |d, s| d * s * (T::one() - s));
                self.accumulate(grads, *a, da)?;
            }
            Op::Concat(parts, axis) => {
                let mut offset = 0;
                for &p in parts {
                    let (pr, pc) = self.shape(p);
                    let slot = self.grad_slot(grads, p);
                    match axis {
                        Axis::Rows => {
                            let src = &g.data()[offset * pc..(offset + pr) * pc];
                            add_into(slot.data_mut(), src);
                            offset += pr;
                        }
                        Axis::Cols => {
                            for r in 0..pr {
                                let src = &g.row_slice(r)[offset..offset + pc];
                                add_into(&mut slot.data_mut()[r * pc..(r + 1) * pc], src);
                            }
                            offset += pc;
                        }
                    }
                }
            }
            Op::Slice { input, axis, start } => {
                let (_, ic) = self.shape(*input);
                let start = *start;
                let slot = self.grad_slot(grads, *input);
                match axis {
                    Axis::Rows => add_into(
                        &mut slot.data_mut()[start * ic..start * ic + g.len()],
                        g.data(),
                    ),
                    Axis::Cols => {
                        let w = g.cols();
                        for r in 0..g.rows() {
                            let dst = &mut slot.data_mut()[r * ic + start..r * ic + start + w];
                            add_into(dst, g.row_slice(r));
                        }
                    }
                }
            }
            Op::Reshape(a) => {
                let (r, c) = self.shape(*a);
                self.accumulate(grads, *a, Tensor::from_vec(r, c, g.into_vec())?)?;
            }
            Op::GatherRows { table, ids } => {
                let cols = g.cols();
                let slot = self.grad_slot(grads, *table);
                for (r, &i) in ids.iter().enumerate() {
                    add_into(
                        &mut slot.data_mut()[i * cols..(i + 1) * cols],
                        g.row_slice(r),
                    );
                }
            }
            Op::Assemble { free, entries } => {
                if let Some(f) = free {
                    let slot = self.grad_slot(grads, *f);
                    for (e, &d) in entries.iter().zip(g.data()) {
                        if let Entry::Free(i) = e {
                            let s = &mut slot.data_mut()[*i];
                            *s = *s + d;
                        }
                    }
                }
            }
            Op::SoftmaxCrossEntropy {
                logits,
                gold,
                probs,
            } => {
                let d = g.item()?;
                let classes = probs.cols();
                let mut dl = probs.map(|p| p * d);
                for (r, &y) in gold.iter().enumerate() {
                    let s = &mut dl.data_mut()[r * classes + y];
                    *s = *s - d;
                }
                self.accumulate(grads, *logits, dl)?;
            }
            Op::FrobeniusSq(m) => {
                let d = g.item()?;
                let two = T::lit(2.0);
                let dm = self.value(*m).map(|x| two * d * x);
                self.accumulate(grads, *m, dm)?;
            }
            Op::Sum(a) => {
                let d = g.item()?;
                let (r, c) = self.shape(*a);
                self.accumulate(grads, *a, Tensor::filled(r, c, d))?;
            }
        }
        Ok(())
    }

    fn own_value(&self, idx: usize) -> &Tensor<T> {
        match &self.nodes[idx].value {
            Value::Owned(t) => t,
            Value::Param(id) => self.store.value(*id),
        }
    }
}

fn zip_map<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| f(x, y))
        .collect();
    Tensor::from_vec(a.rows(), a.cols(), data).expect("shapes already checked")
}

fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = *d + s;
    }
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Numerically stable softmax of one row.
pub fn softmax<T: Scalar>(row: &[T]) -> Vec<T> {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = row.iter().map(|&x| (x - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn log_sum_exp<T: Scalar>(row: &[T]) -> T {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    max + row.iter().map(|&x| (x - max).exp()).sum::<T>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> ParamStore<f64> {
        ParamStore::new()
    }

    #[test]
    fn identity_matmul_is_a_no_op() {
        let s = store();
        let mut tape = Tape::new(&s);
        let i3 = tape.constant(Tensor::identity(3));
        let x = tape.constant(Tensor::from_f64(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap());
        let y = tape.matmul(i3, x).unwrap();
        assert_eq!(tape.value(y), tape.value(x));
    }

    #[test]
    fn activations_at_zero() {
        let s = store();
        let mut tape = Tape::new(&s);
        let z = tape.constant(Tensor::scalar(0.0));
        let t = tape.tanh(z).unwrap();
        let sg = tape.sigmoid(z).unwrap();
        assert_eq!(tape.value(t).item().unwrap(), 0.0);
        assert_eq!(tape.value(sg).item().unwrap(), 0.5);
        let zero = tape.constant(Tensor::zeros(1, 3));
        let x = tape.constant(Tensor::row(vec![1.0, -2.0, 3.5]));
        let y = tape.add(x, zero).unwrap();
        assert_eq!(tape.value(y), tape.value(x));
    }

    #[test]
    fn concat_examples() {
        let s = store();
        let mut tape = Tape::new(&s);
        let a = tape.constant(Tensor::row(vec![1.0, 2.0]));
        let b = tape.constant(Tensor::row(vec![3.0]));
        let c = tape.concat(&[a, b], Axis::Cols).unwrap();
        assert_eq!(tape.value(c).data(), &[1.0, 2.0, 3.0]);
        assert_eq!(tape.concat(&[a], Axis::Cols).unwrap(), a);
        assert!(tape.concat(&[a, b], Axis::Rows).is_err());
    }

    #[test]
    fn concat_backward_splits_ones() {
        let mut s = store();
        let pa = s.add("a", Tensor::row(vec![1.0, 2.0]));
        let pb = s.add("b", Tensor::row(vec![3.0]));
        let mut tape = Tape::new(&s);
        let (a, b) = (tape.param(pa), tape.param(pb));
        let c = tape.concat(&[a, b], Axis::Cols).unwrap();
        let l = tape.sum(c).unwrap();
        let g = tape.backward(l).unwrap();
        assert_eq!(g.get(pa).unwrap().data(), &[1.0, 1.0]);
        assert_eq!(g.get(pb).unwrap().data(), &[1.0]);
    }

    #[test]
    fn cross_entropy_examples() {
        let s = store();
        let mut tape = Tape::new(&s);
        let l = tape.constant(Tensor::row(vec![0.0, 0.0]));
        let ce = tape.softmax_cross_entropy(l, &[0]).unwrap();
        assert!((tape.value(ce).item().unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        let l = tape.constant(Tensor::row(vec![40.0, -40.0]));
        let ce = tape.softmax_cross_entropy(l, &[0]).unwrap();
        let v = tape.value(ce).item().unwrap();
        assert!(v.is_finite() && (0.0..1e-30).contains(&v), "{v}");
        assert!(matches!(
            tape.softmax_cross_entropy(l, &[2]),
            Err(Error::Label {
                label: 2,
                classes: 2
            })
        ));
    }

    #[test]
    fn frobenius_examples() {
        let s = store();
        let mut tape = Tape::new(&s);
        let i2 = tape.constant(Tensor::identity(2));
        let f = tape.frobenius_sq(i2).unwrap();
        assert_eq!(tape.value(f).item().unwrap(), 2.0);
        let z = tape.constant(Tensor::zeros(3, 2));
        let f = tape.frobenius_sq(z).unwrap();
        assert_eq!(tape.value(f).item().unwrap(), 0.0);
    }

    #[test]
    fn backward_of_sum_and_of_unrelated_loss() {
        let mut s = store();
        let p = s.add("p", Tensor::from_f64(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap());
        let q = s.add("q", Tensor::row(vec![5.0]));
        let mut tape = Tape::new(&s);
        let pv = tape.param(p);
        let qv = tape.param(q);
        let l = tape.sum(pv).unwrap();
        let _ = qv;
        let g = tape.backward(l).unwrap();
        assert_eq!(g.get(p).unwrap().data(), &[1.0; 4]);
        assert_eq!(g.get(q).unwrap().data(), &[0.0]);
    }

    #[test]
    fn backward_twice_is_an_error() {
        let mut s = store();
        let p = s.add("p", Tensor::scalar(1.0));
        let mut tape = Tape::new(&s);
        let v = tape.param(p);
        let l = tape.sum(v).unwrap();
        tape.backward(l).unwrap();
        assert!(matches!(tape.backward(l), Err(Error::Contract(_))));
    }

    #[test]
    fn backward_rejects_non_scalar_loss() {
        let s = store();
        let mut tape = Tape::new(&s);
        let v = tape.constant(Tensor::zeros(1, 2));
        assert!(matches!(tape.backward(v), Err(Error::Contract(_))));
    }

    #[test]
    fn overflow_is_reported() {
        let s = store();
        let mut tape = Tape::new(&s);
        let big = tape.constant(Tensor::row(vec![1e300]));
        assert!(matches!(
            tape.mul(big, big),
            Err(Error::NonFinite { op: "mul" })
        ));
    }

    #[test]
    fn assemble_ties_and_freezes() {
        let mut s = store();
        let p = s.add("theta", Tensor::row(vec![2.0, 3.0]));
        let mut tape = Tape::new(&s);
        let f = tape.param(p);
        let m = tape
            .assemble(
                Some(f),
                2,
                2,
                &[
                    Entry::Free(0),
                    Entry::Fixed(0.5),
                    Entry::Free(1),
                    Entry::Free(0),
                ],
            )
            .unwrap();
        assert_eq!(tape.value(m).data(), &[2.0, 0.5, 3.0, 2.0]);
        let l = tape.sum(m).unwrap();
        let g = tape.backward(l).unwrap();
        assert_eq!(g.get(p).unwrap().data(), &[2.0, 1.0]);
    }
}
