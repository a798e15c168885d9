use crate::diffcore::{glorot, ParamId, ParamStore, Rng, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Tagging head: one tanh hidden layer, then a linear map to label logits.
#[derive(Clone, Debug)]
pub struct OutputHead {
    pub w_hidden: ParamId,
    pub b_hidden: ParamId,
    pub w_out: ParamId,
    pub b_out: ParamId,
    pub input_dim: usize,
    pub labels: usize,
}

impl OutputHead {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        rng: &mut Rng,
        name: &str,
        input_dim: usize,
        mlp_dim: usize,
        labels: usize,
    ) -> Self {
        OutputHead {
            w_hidden: store.add(format!("{name}.w_hidden"), glorot(input_dim, mlp_dim, rng)),
            b_hidden: store.add(format!("{name}.b_hidden"), Tensor::zeros(1, mlp_dim)),
            w_out: store.add(format!("{name}.w_out"), glorot(mlp_dim, labels, rng)),
            b_out: store.add(format!("{name}.b_out"), Tensor::zeros(1, labels)),
            input_dim,
            labels,
        }
    }

    /// `T × input_dim` → `T × labels`.
    pub fn logits<T: Scalar>(&self, tape: &mut Tape<'_, T>, h: Var) -> Result<Var> {
        if tape.shape(h).1 != self.input_dim {
            return Err(Error::Dimension {
                op: "output_logits",
                lhs: tape.shape(h),
                rhs: (tape.shape(h).0, self.input_dim),
            });
        }
        let w1 = tape.param(self.w_hidden);
        let b1 = tape.param(self.b_hidden);
        let w2 = tape.param(self.w_out);
        let b2 = tape.param(self.b_out);
        let z = tape.matmul(h, w1)?;
        let z = tape.add_row(z, b1)?;
        let hidden = tape.tanh(z)?;
        let out = tape.matmul(hidden, w2)?;
        tape.add_row(out, b2)
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}
