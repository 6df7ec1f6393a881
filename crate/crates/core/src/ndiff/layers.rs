use rand::Rng;

use super::tape::{Gradients, Tape, Var};
use super::tensor::Tensor;
use super::NdError;

/// Index of a tensor inside a [`ParamSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamId(pub(crate) usize);

/// Named, ordered collection of trainable tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

/// Parameters of a [`ParamSet`] recorded on a tape.
#[derive(Clone, Debug)]
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    /// Binds tape variables that already hold the parameters, in set order.
    pub fn from_vars(vars: Vec<Var>) -> Self {
        Bound { vars }
    }

    pub fn var(&self, id: ParamId) -> Var {
        self.vars[id.0]
    }

    /// Gradients aligned with the bound [`ParamSet`].
    pub fn collect(&self, grads: &mut Gradients) -> Vec<Tensor> {
        self.vars.iter().map(|&v| grads.take(v)).collect()
    }
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.names.push(name.into());
        self.tensors.push(value);
        ParamId(self.tensors.len() - 1)
    }

    /// Uniform `(-s, s)` with `s = sqrt(6 / (fan_in + fan_out))`.
    pub fn push_glorot<R: Rng + ?Sized>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> ParamId {
        let s = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols).map(|_| rng.random_range(-s..s)).collect();
        self.push(name, Tensor::new(vec![rows, cols], data).expect("sized"))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub(crate) fn tensors_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.names.iter().map(String::as_str).zip(self.tensors.iter_mut())
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Records every tensor as a leaf; `trainable` decides whether the
    /// backward pass produces gradients for them.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Bound {
        let vars = self
            .tensors
            .iter()
            .map(|t| {
                if trainable {
                    tape.var(t.clone())
                } else {
                    tape.constant(t.clone())
                }
            })
            .collect();
        Bound { vars }
    }

    /// Sets every value to zero; mostly useful for tests.
    pub fn zero_all(&mut self) {
        for t in &mut self.tensors {
            t.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

/// Fully connected layer `y = A·x + b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dense {
    pub weight: ParamId,
    pub bias: ParamId,
    pub inputs: usize,
    pub outputs: usize,
}

impl Dense {
    pub fn init<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        inputs: usize,
        outputs: usize,
        rng: &mut R,
    ) -> Self {
        let weight = params.push_glorot(format!("{}.weight", name), outputs, inputs, rng);
        let bias = params.push(format!("{}.bias", name), Tensor::zeros(&[outputs]));
        Dense {
            weight,
            bias,
            inputs,
            outputs,
        }
    }

    /// Looks the layer up by name in a loaded parameter set.
    pub fn locate(params: &ParamSet, name: &str) -> Result<Self, NdError> {
        let weight = lookup(params, &format!("{}.weight", name))?;
        let bias = lookup(params, &format!("{}.bias", name))?;
        let (outputs, inputs) = params.get(weight).dims2();
        if params.get(bias).len() != outputs {
            return Err(NdError::Shape {
                op: "dense",
                detail: format!("{} bias does not match weight rows", name),
            });
        }
        Ok(Dense {
            weight,
            bias,
            inputs,
            outputs,
        })
    }

    pub fn forward(&self, tape: &mut Tape, bound: &Bound, x: Var) -> Result<Var, NdError> {
        tape.affine(x, bound.var(self.weight), bound.var(self.bias))
    }
}

/// Forget-gate LSTM cell. Gate blocks inside the stacked weight are ordered
/// input, forget, candidate, output.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LstmCell {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input_size: usize,
    pub hidden: usize,
}

impl LstmCell {
    pub fn init<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        input_size: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let weight = params.push_glorot(
            format!("{}.weight", name),
            4 * hidden,
            input_size + hidden,
            rng,
        );
        let mut bias = Tensor::zeros(&[4 * hidden]);
        bias.data_mut()[hidden..2 * hidden].fill(1.0);
        let bias = params.push(format!("{}.bias", name), bias);
        LstmCell {
            weight,
            bias,
            input_size,
            hidden,
        }
    }

    pub fn locate(params: &ParamSet, name: &str) -> Result<Self, NdError> {
        let weight = lookup(params, &format!("{}.weight", name))?;
        let bias = lookup(params, &format!("{}.bias", name))?;
        let (rows, cols) = params.get(weight).dims2();
        if rows % 4 != 0 || cols < rows / 4 || params.get(bias).len() != rows {
            return Err(NdError::Shape {
                op: "lstm",
                detail: format!("{} has inconsistent gate shapes", name),
            });
        }
        let hidden = rows / 4;
        Ok(LstmCell {
            weight,
            bias,
            input_size: cols - hidden,
            hidden,
        })
    }

    /// One step: returns `(h', c')`.
    pub fn step(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        x: Var,
        h: Var,
        c: Var,
    ) -> Result<(Var, Var), NdError> {
        let hd = self.hidden;
        let xh = tape.concat(&[x, h])?;
        let gates = tape.affine(xh, bound.var(self.weight), bound.var(self.bias))?;
        let i = tape.slice_cols(gates, 0, hd)?;
        let f = tape.slice_cols(gates, hd, 2 * hd)?;
        let g = tape.slice_cols(gates, 2 * hd, 3 * hd)?;
        let o = tape.slice_cols(gates, 3 * hd, 4 * hd)?;
        let i = tape.sigmoid(i);
        let f = tape.sigmoid(f);
        let g = tape.tanh(g);
        let o = tape.sigmoid(o);
        let kept = tape.mul(f, c)?;
        let written = tape.mul(i, g)?;
        let c_next = tape.add(kept, written)?;
        let squashed = tape.tanh(c_next);
        let h_next = tape.mul(o, squashed)?;
        Ok((h_next, c_next))
    }

    /// Folds [`LstmCell::step`] over `inputs` from a zero state and returns the
    /// final hidden state. Every input is `[batch, input_size]`.
    pub fn last(&self, tape: &mut Tape, bound: &Bound, inputs: &[Var]) -> Result<Var, NdError> {
        let first = *inputs.first().ok_or(NdError::EmptySequence)?;
        let batch = tape.value(first).dims2().0;
        let mut h = tape.constant(Tensor::zeros(&[batch, self.hidden]));
        let mut c = tape.constant(Tensor::zeros(&[batch, self.hidden]));
        for &x in inputs {
            let (h2, c2) = self.step(tape, bound, x, h, c)?;
            h = h2;
            c = c2;
        }
        Ok(h)
    }
}

fn lookup(params: &ParamSet, name: &str) -> Result<ParamId, NdError> {
    params
        .find(name)
        .ok_or_else(|| NdError::Invalid(format!("missing parameter {}", name)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sig(v: f64) -> f64 {
        1.0 / (1.0 + (-v).exp())
    }

    /// Straight-line reference step over plain slices, gate order i, f, g, o.
    fn reference_step(
        w: &[f64],
        b: &[f64],
        x: &[f64],
        h: &[f64],
        c: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let hd = h.len();
        let cols = x.len() + hd;
        let xh: Vec<f64> = x.iter().chain(h).copied().collect();
        let pre: Vec<f64> = (0..4 * hd)
            .map(|r| b[r] + (0..cols).map(|k| w[r * cols + k] * xh[k]).sum::<f64>())
            .collect();
        let mut h2 = vec![0.0; hd];
        let mut c2 = vec![0.0; hd];
        for j in 0..hd {
            let i = sig(pre[j]);
            let f = sig(pre[hd + j]);
            let g = pre[2 * hd + j].tanh();
            let o = sig(pre[3 * hd + j]);
            c2[j] = f * c[j] + i * g;
            h2[j] = o * c2[j].tanh();
        }
        (h2, c2)
    }

    fn zero_cell(input: usize, hidden: usize) -> (ParamSet, LstmCell) {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut params = ParamSet::new();
        let cell = LstmCell::init(&mut params, "cell", input, hidden, &mut rng);
        params.zero_all();
        (params, cell)
    }

    #[test]
    fn zero_cell_from_zero_state_stays_zero() {
        let (params, cell) = zero_cell(3, 2);
        let mut t = Tape::new();
        let bound = params.bind(&mut t, false);
        let x = t.constant(Tensor::row(&[0.4, -0.1, 2.0]));
        let h = t.constant(Tensor::zeros(&[1, 2]));
        let c = t.constant(Tensor::zeros(&[1, 2]));
        let (h2, c2) = cell.step(&mut t, &bound, x, h, c).unwrap();
        assert_eq!(t.value(h2).data(), &[0.0, 0.0]);
        assert_eq!(t.value(c2).data(), &[0.0, 0.0]);
    }

    #[test]
    fn zero_cell_halves_memory() {
        let (params, cell) = zero_cell(2, 1);
        let mut t = Tape::new();
        let bound = params.bind(&mut t, false);
        let x = t.constant(Tensor::row(&[0.0, 0.0]));
        let h = t.constant(Tensor::zeros(&[1, 1]));
        let c = t.constant(Tensor::row(&[1.0]));
        let (h2, c2) = cell.step(&mut t, &bound, x, h, c).unwrap();
        assert!((t.value(c2).data()[0] - 0.5).abs() < 1e-15);
        assert!((t.value(h2).data()[0] - 0.5 * 0.5f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn random_cell_matches_reference_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut params = ParamSet::new();
        let cell = LstmCell::init(&mut params, "cell", 3, 4, &mut rng);
        for v in params.get_mut(cell.bias).data_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (eh, ec) = reference_step(
            params.get(cell.weight).data(),
            params.get(cell.bias).data(),
            &x,
            &h,
            &c,
        );
        let mut t = Tape::new();
        let bound = params.bind(&mut t, false);
        let xv = t.constant(Tensor::row(&x));
        let hv = t.constant(Tensor::row(&h));
        let cv = t.constant(Tensor::row(&c));
        let (h2, c2) = cell.step(&mut t, &bound, xv, hv, cv).unwrap();
        for (a, b) in t.value(h2).data().iter().zip(&eh) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in t.value(c2).data().iter().zip(&ec) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn last_output_is_bounded_and_order_sensitive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut params = ParamSet::new();
        let cell = LstmCell::init(&mut params, "cell", 2, 3, &mut rng);
        let seq: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..2).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let mut t = Tape::new();
        let bound = params.bind(&mut t, false);
        let fwd: Vec<Var> = seq.iter().map(|v| t.constant(Tensor::row(v))).collect();
        let rev: Vec<Var> = fwd.iter().rev().copied().collect();
        let a = cell.last(&mut t, &bound, &fwd).unwrap();
        let b = cell.last(&mut t, &bound, &rev).unwrap();
        assert!(t.value(a).data().iter().all(|v| v.abs() < 1.0));
        assert_ne!(t.value(a).data(), t.value(b).data());

        let single = cell.last(&mut t, &bound, &fwd[..1]).unwrap();
        let h0 = t.constant(Tensor::zeros(&[1, 3]));
        let c0 = t.constant(Tensor::zeros(&[1, 3]));
        let (stepped, _) = cell.step(&mut t, &bound, fwd[0], h0, c0).unwrap();
        assert_eq!(t.value(single).data(), t.value(stepped).data());

        assert!(matches!(cell.last(&mut t, &bound, &[]), Err(NdError::EmptySequence)));
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut params = ParamSet::new();
        let cell = LstmCell::init(&mut params, "c", 2, 3, &mut rng);
        let b = params.get(cell.bias).data();
        assert_eq!(&b[0..3], &[0.0; 3]);
        assert_eq!(&b[3..6], &[1.0; 3]);
        assert_eq!(&b[6..12], &[0.0; 6]);
        let located = LstmCell::locate(&params, "c").unwrap();
        assert_eq!(located, cell);
    }
}
