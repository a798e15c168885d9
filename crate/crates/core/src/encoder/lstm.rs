use crate::diffcore::{glorot, Axis, ParamId, ParamStore, Rng, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of equal partitions of every recurrent hidden state.
pub const SUBSPACES: usize = 2;

pub const FORGET_BIAS: f64 = 1.0;

/// One direction of an LSTM.
///
/// `w_ih` is `input × 4H`, `w_hh` is `H × 4H` and `bias` is `1 × 4H`,
/// with gate blocks ordered input, forget, candidate, output. Inside each
/// gate block the H units are ordered subspace 1 first, then subspace 2,
/// so hidden-state subspaces are contiguous halves of `h`.
#[derive(Clone, Debug)]
pub struct LstmCell {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub bias: ParamId,
    pub input_dim: usize,
    pub hidden: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
}

impl LstmCell {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        rng: &mut Rng,
        name: &str,
        input_dim: usize,
        hidden: usize,
    ) -> Self {
        let w_ih = store.add(format!("{name}.w_ih"), glorot(input_dim, 4 * hidden, rng));
        let w_hh = store.add(format!("{name}.w_hh"), glorot(hidden, 4 * hidden, rng));
        // Forget gates start open so that cell contents persist early on.
        let mut b = Tensor::zeros(1, 4 * hidden);
        b.data_mut()[hidden..2 * hidden].fill(T::lit(FORGET_BIAS));
        let bias = store.add(format!("{name}.bias"), b);
        LstmCell {
            w_ih,
            w_hh,
            bias,
            input_dim,
            hidden,
        }
    }

    pub fn zero_state<T: Scalar>(&self, tape: &mut Tape<'_, T>) -> LstmState {
        let h = tape.constant(Tensor::zeros(1, self.hidden));
        let c = tape.constant(Tensor::zeros(1, self.hidden));
        LstmState { h, c }
    }

    /// One recurrence step on the `1 × input` row `x_t`.
    pub fn step<T: Scalar>(
        &self,
        tape: &mut Tape<'_, T>,
        x_t: Var,
        state: LstmState,
    ) -> Result<LstmState> {
        if tape.shape(x_t) != (1, self.input_dim) {
            return Err(Error::Dimension {
                op: "recurrent_step",
                lhs: tape.shape(x_t),
                rhs: (1, self.input_dim),
            });
        }
        let w = tape.param(self.w_ih);
        let b = tape.param(self.bias);
        let xw = tape.matmul(x_t, w)?;
        let projected = tape.add_row(xw, b)?;
        self.step_projected(tape, projected, state)
    }

    /// Recurrence step given the precomputed `x_t·W_ih + b` row.
    fn step_projected<T: Scalar>(
        &self,
        tape: &mut Tape<'_, T>,
        projected: Var,
        state: LstmState,
    ) -> Result<LstmState> {
        let hd = self.hidden;
        let u = tape.param(self.w_hh);
        let hu = tape.matmul(state.h, u)?;
        let z = tape.add(projected, hu)?;
        let zi = tape.slice(z, Axis::Cols, 0, hd)?;
        let zf = tape.slice(z, Axis::Cols, hd, hd)?;
        let zg = tape.slice(z, Axis::Cols, 2 * hd, hd)?;
        let zo = tape.slice(z, Axis::Cols, 3 * hd, hd)?;
        let i = tape.sigmoid(zi)?;
        let f = tape.sigmoid(zf)?;
        let g = tape.tanh(zg)?;
        let o = tape.sigmoid(zo)?;
        let keep = tape.mul(f, state.c)?;
        let write = tape.mul(i, g)?;
        let c = tape.add(keep, write)?;
        let tc = tape.tanh(c)?;
        let h = tape.mul(o, tc)?;
        Ok(LstmState { h, c })
    }

    /// Runs the cell over the rows of `inputs` (`T × input`), left to right
    /// or right to left. Returns the `T × H` hidden states in input order
    /// together with the state after the last processed position.
    pub fn run<T: Scalar>(
        &self,
        tape: &mut Tape<'_, T>,
        inputs: Var,
        reverse: bool,
    ) -> Result<(Var, LstmState)> {
        let (len, dim) = tape.shape(inputs);
        if dim != self.input_dim {
            return Err(Error::Dimension {
                op: "lstm_run",
                lhs: (len, dim),
                rhs: (len, self.input_dim),
            });
        }
        let w = tape.param(self.w_ih);
        let b = tape.param(self.bias);
        let xw = tape.matmul(inputs, w)?;
        let projected = tape.add_row(xw, b)?;
        let mut state = self.zero_state(tape);
        let mut hs = vec![state.h; len];
        let order: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new((0..len).rev())
        } else {
            Box::new(0..len)
        };
        for t in order {
            let row = tape.slice(projected, Axis::Rows, t, 1)?;
            state = self.step_projected(tape, row, state)?;
            hs[t] = state.h;
        }
        let out = tape.concat(&hs, Axis::Rows)?;
        Ok((out, state))
    }

    /// Columns of `w_ih` belonging to hidden subspace `s` across all four
    /// gates, as an `input × 2H` matrix.
    pub fn input_subspace<T: Scalar>(
        &self,
        tape: &mut Tape<'_, T>,
        subspace: usize,
    ) -> Result<Var> {
        let half = self.hidden / SUBSPACES;
        let w = tape.param(self.w_ih);
        let mut parts = Vec::with_capacity(4);
        for gate in 0..4 {
            parts.push(tape.slice(w, Axis::Cols, gate * self.hidden + subspace * half, half)?);
        }
        tape.concat(&parts, Axis::Cols)
    }
}

/// Bidirectional LSTM layer; output rows are `[forward h | backward h]`.
#[derive(Clone, Debug)]
pub struct RecurrentLayer {
    pub index: usize,
    pub forward: LstmCell,
    pub backward: LstmCell,
}

impl RecurrentLayer {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        rng: &mut Rng,
        name: &str,
        index: usize,
        input_dim: usize,
        hidden: usize,
    ) -> Self {
        assert!(
            hidden % SUBSPACES == 0 && hidden > 0,
            "hidden size {hidden} must split into {SUBSPACES} equal subspaces"
        );
        RecurrentLayer {
            index,
            forward: LstmCell::new(store, rng, &format!("{name}.fwd"), input_dim, hidden),
            backward: LstmCell::new(store, rng, &format!("{name}.bwd"), input_dim, hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden
    }

    pub fn output_dim(&self) -> usize {
        2 * self.hidden()
    }

    /// `T × input` → `T × 2H`.
    pub fn forward<T: Scalar>(&self, tape: &mut Tape<'_, T>, inputs: Var) -> Result<Var> {
        if tape.shape(inputs).0 == 0 {
            return Err(Error::Input("empty sequence".into()));
        }
        let (fwd, _) = self.forward.run(tape, inputs, false)?;
        let (bwd, _) = self.backward.run(tape, inputs, true)?;
        tape.concat(&[fwd, bwd], Axis::Cols)
    }

    pub fn cells(&self) -> [&LstmCell; 2] {
        [&self.forward, &self.backward]
    }
}

/// Splits a `T × 2H` bidirectional output into its subspaces.
///
/// Subspace `s` is `[forward half s | backward half s]`, a `T × H` matrix,
/// so that mixing acts on matching halves of both directions.
pub fn split_subspaces<T: Scalar>(tape: &mut Tape<'_, T>, output: Var) -> Result<Vec<Var>> {
    let width = tape.shape(output).1;
    if width % (2 * SUBSPACES) != 0 {
        return Err(Error::Dimension {
            op: "split_subspaces",
            lhs: tape.shape(output),
            rhs: (0, 2 * SUBSPACES),
        });
    }
    let hidden = width / 2;
    let half = hidden / SUBSPACES;
    (0..SUBSPACES)
        .map(|s| {
            let f = tape.slice(output, Axis::Cols, s * half, half)?;
            let b = tape.slice(output, Axis::Cols, hidden + s * half, half)?;
            tape.concat(&[f, b], Axis::Cols)
        })
        .collect()
}

/// Inverse of [`split_subspaces`]: restores the `[forward | backward]` layout.
pub fn merge_subspaces<T: Scalar>(tape: &mut Tape<'_, T>, parts: &[Var]) -> Result<Var> {
    if parts.len() != SUBSPACES {
        return Err(Error::Config(format!(
            "expected {SUBSPACES} subspaces, got {}",
            parts.len()
        )));
    }
    let half = tape.shape(parts[0]).1 / 2;
    let mut fwd = Vec::with_capacity(SUBSPACES);
    let mut bwd = Vec::with_capacity(SUBSPACES);
    for &p in parts {
        fwd.push(tape.slice(p, Axis::Cols, 0, half)?);
        bwd.push(tape.slice(p, Axis::Cols, half, half)?);
    }
    fwd.extend(bwd);
    tape.concat(&fwd, Axis::Cols)
}
