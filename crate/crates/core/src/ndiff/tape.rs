use rand::Rng;

use super::tensor::{gemm, Tensor};
use super::NdError;

/// Clamp applied to probabilities before taking logs in the cross-entropy.
pub const PROB_EPSILON: f64 = 1e-7;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Affine { x: Var, w: Var, b: Var },
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Abs(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Concat(Vec<Var>),
    SliceCols { x: Var, start: usize },
    Mask { x: Var, mask: Vec<f64> },
    Sum(Var),
    CrossEntropy { yhat: Var, coef: Vec<f64> },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Records a forward computation so that [`Tape::backward`] can replay it in
/// reverse. Nodes are appended in evaluation order, which is already a
/// topological order of the graph.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar loss with respect to every leaf created by
/// [`Tape::var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient for `v`, or zeros shaped like it if the loss does not depend on it.
    pub fn get(&self, v: Var) -> Tensor {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(&self.shapes[v.0]),
        }
    }

    pub fn take(&mut self, v: Var) -> Tensor {
        self.grads[v.0]
            .take()
            .unwrap_or_else(|| Tensor::zeros(&self.shapes[v.0]))
    }
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> NdError {
    NdError::Shape {
        op,
        detail: format!("{:?} vs {:?}", a.shape(), b.shape()),
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// A leaf that receives a gradient.
    pub fn var(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A leaf treated as a constant.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// `y = x·Wᵀ + b` for `x: [n, in]`, `W: [out, in]`, `b: [out]`.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var, NdError> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        let (n, inp) = xv.dims2();
        let (out, w_in) = wv.dims2();
        if w_in != inp || bv.len() != out {
            return Err(NdError::Shape {
                op: "affine",
                detail: format!(
                    "x {:?}, W {:?}, b {:?}",
                    xv.shape(),
                    wv.shape(),
                    bv.shape()
                ),
            });
        }
        let mut y = Vec::with_capacity(n * out);
        for _ in 0..n {
            y.extend_from_slice(bv.data());
        }
        gemm(n, inp, out, xv.data(), false, wv.data(), true, &mut y, 1.0);
        let needs = self.needs(x) || self.needs(w) || self.needs(b);
        Ok(self.push(Tensor::new(vec![n, out], y)?, Op::Affine { x, w, b }, needs))
    }

    fn unary(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let y = self.value(x).map(f);
        let needs = self.needs(x);
        self.push(y, op, needs)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(x, f64::tanh, Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, sigmoid, Op::Sigmoid(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(x, |v| v.max(0.0), Op::Relu(x))
    }

    pub fn abs(&mut self, x: Var) -> Var {
        self.unary(x, f64::abs, Op::Abs(x))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        self.unary(x, |v| v * factor, Op::Scale(x, factor))
    }

    fn binary(
        &mut self,
        a: Var,
        b: Var,
        name: &'static str,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var, NdError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.dims2() != bv.dims2() {
            return Err(shape_err(name, av, bv));
        }
        let y = av.zip_map(bv, f);
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(y, op, needs))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NdError> {
        self.binary(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, NdError> {
        self.binary(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NdError> {
        self.binary(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    /// Joins along the column axis; all parts must have the same row count.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, NdError> {
        let first = *parts.first().ok_or(NdError::Shape {
            op: "concat",
            detail: "no operands".into(),
        })?;
        let rows = self.value(first).dims2().0;
        let mut total = 0;
        for &p in parts {
            let (r, c) = self.value(p).dims2();
            if r != rows {
                return Err(shape_err("concat", self.value(first), self.value(p)));
            }
            total += c;
        }
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row_slice(r));
            }
        }
        let needs = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(
            Tensor::new(vec![rows, total], data)?,
            Op::Concat(parts.to_vec()),
            needs,
        ))
    }

    /// Columns `start..end` of `x`.
    pub fn slice_cols(&mut self, x: Var, start: usize, end: usize) -> Result<Var, NdError> {
        let xv = self.value(x);
        let (rows, cols) = xv.dims2();
        if start > end || end > cols {
            return Err(NdError::Shape {
                op: "slice_cols",
                detail: format!("{}..{} of {:?}", start, end, xv.shape()),
            });
        }
        let mut data = Vec::with_capacity(rows * (end - start));
        for r in 0..rows {
            data.extend_from_slice(&xv.row_slice(r)[start..end]);
        }
        let needs = self.needs(x);
        Ok(self.push(
            Tensor::new(vec![rows, end - start], data)?,
            Op::SliceCols { x, start },
            needs,
        ))
    }

    /// Inverted dropout. Identity when `training` is false or `rate` is zero.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        x: Var,
        rate: f64,
        training: bool,
        rng: &mut R,
    ) -> Result<Var, NdError> {
        if !(0.0..1.0).contains(&rate) {
            return Err(NdError::Invalid(format!("dropout rate {} outside [0, 1)", rate)));
        }
        if !training || rate == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 / (1.0 - rate);
        let mask: Vec<f64> = (0..self.value(x).len())
            .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let y = {
            let xv = self.value(x);
            let mut y = xv.clone();
            for (v, m) in y.data_mut().iter_mut().zip(&mask) {
                *v *= m;
            }
            y
        };
        let needs = self.needs(x);
        Ok(self.push(y, Op::Mask { x, mask }, needs))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s: f64 = self.value(x).data().iter().sum();
        let needs = self.needs(x);
        self.push(Tensor::vector(vec![s]), Op::Sum(x), needs)
    }

    /// `-Σ_i [pos_i·y_i·ln ŷ_i + neg_i·(1-y_i)·ln(1-ŷ_i)]` with `ŷ` clamped
    /// to `[ε, 1-ε]`. A weight of zero removes the sample from the sum.
    pub fn cross_entropy(
        &mut self,
        labels: &[f64],
        yhat: Var,
        pos_weights: &[f64],
        neg_weights: &[f64],
    ) -> Result<Var, NdError> {
        let pv = self.value(yhat);
        if pv.len() != labels.len()
            || pos_weights.len() != labels.len()
            || neg_weights.len() != labels.len()
        {
            return Err(NdError::Shape {
                op: "cross_entropy",
                detail: format!(
                    "{} predictions, {} labels, {}/{} weights",
                    pv.len(),
                    labels.len(),
                    pos_weights.len(),
                    neg_weights.len()
                ),
            });
        }
        let mut loss = 0.0;
        // d loss / d ŷ, zero where the clamp is active
        let mut coef = Vec::with_capacity(labels.len());
        for (i, &p) in pv.data().iter().enumerate() {
            let y = labels[i];
            let pc = p.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON);
            let (wp, wn) = (pos_weights[i] * y, neg_weights[i] * (1.0 - y));
            loss -= wp * pc.ln() + wn * (1.0 - pc).ln();
            let clamped = p < PROB_EPSILON || p > 1.0 - PROB_EPSILON;
            coef.push(if clamped { 0.0 } else { -wp / pc + wn / (1.0 - pc) });
        }
        let needs = self.needs(yhat);
        Ok(self.push(
            Tensor::vector(vec![loss]),
            Op::CrossEntropy { yhat, coef },
            needs,
        ))
    }

    /// Weighted binary cross-entropy with positive-class weight `z`
    /// and negative-class weight `1 - z`.
    pub fn weighted_bce(&mut self, labels: &[f64], yhat: Var, z: f64) -> Result<Var, NdError> {
        if !(0.0..=1.0).contains(&z) {
            return Err(NdError::Invalid(format!("class weight {} outside [0, 1]", z)));
        }
        let pos = vec![z; labels.len()];
        let neg = vec![1.0 - z; labels.len()];
        self.cross_entropy(labels, yhat, &pos, &neg)
    }

    /// Reverse pass from a scalar `loss`. Consumes the tape.
    pub fn backward(self, loss: Var) -> Result<Gradients, NdError> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(NdError::NonScalarLoss(lv.shape().to_vec()));
        }
        let nodes = self.nodes;
        let shapes: Vec<Vec<usize>> = nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        let mut grads: Vec<Option<Tensor>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::filled(nodes[loss.0].value.shape(), 1.0));

        fn accumulate(grads: &mut [Option<Tensor>], nodes: &[Node], v: Var, g: Tensor) {
            if !nodes[v.0].needs_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&g),
                slot @ None => {
                    let shape = nodes[v.0].value.shape().to_vec();
                    *slot = Some(g.reshaped(shape).expect("gradient size matches value"));
                }
            }
        }

        for idx in (0..nodes.len()).rev() {
            let node = &nodes[idx];
            if matches!(node.op, Op::Leaf) || !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let y = &node.value;
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::Affine { x, w, b } => {
                    let (xv, wv) = (&nodes[x.0].value, &nodes[w.0].value);
                    let (n, inp) = xv.dims2();
                    let out = wv.dims2().0;
                    if nodes[x.0].needs_grad {
                        let mut dx = vec![0.0; n * inp];
                        gemm(n, out, inp, g.data(), false, wv.data(), false, &mut dx, 0.0);
                        accumulate(&mut grads, &nodes, *x, Tensor::new(vec![n, inp], dx)?);
                    }
                    if nodes[w.0].needs_grad {
                        let mut dw = vec![0.0; out * inp];
                        gemm(out, n, inp, g.data(), true, xv.data(), false, &mut dw, 0.0);
                        accumulate(&mut grads, &nodes, *w, Tensor::new(vec![out, inp], dw)?);
                    }
                    if nodes[b.0].needs_grad {
                        let mut db = vec![0.0; out];
                        for r in 0..n {
                            for (d, v) in db.iter_mut().zip(g.row_slice(r)) {
                                *d += v;
                            }
                        }
                        accumulate(&mut grads, &nodes, *b, Tensor::vector(db));
                    }
                }
                Op::Tanh(x) => {
                    let dx = g.zip_map(y, |gi, yi| gi * (1.0 - yi * yi));
                    accumulate(&mut grads, &nodes, *x, dx);
                }
                Op::Sigmoid(x) => {
                    let dx = g.zip_map(y, |gi, yi| gi * yi * (1.0 - yi));
                    accumulate(&mut grads, &nodes, *x, dx);
                }
                Op::Relu(x) => {
                    let dx = g.zip_map(&nodes[x.0].value, |gi, xi| if xi > 0.0 { gi } else { 0.0 });
                    accumulate(&mut grads, &nodes, *x, dx);
                }
                Op::Abs(x) => {
                    let dx = g.zip_map(&nodes[x.0].value, |gi, xi| {
                        if xi > 0.0 {
                            gi
                        } else if xi < 0.0 {
                            -gi
                        } else {
                            0.0
                        }
                    });
                    accumulate(&mut grads, &nodes, *x, dx);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, &nodes, *b, g.clone());
                    accumulate(&mut grads, &nodes, *a, g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, &nodes, *b, g.map(|v| -v));
                    accumulate(&mut grads, &nodes, *a, g);
                }
                Op::Mul(a, b) => {
                    if nodes[a.0].needs_grad {
                        let da = g.zip_map(&nodes[b.0].value, |gi, bi| gi * bi);
                        accumulate(&mut grads, &nodes, *a, da);
                    }
                    if nodes[b.0].needs_grad {
                        let db = g.zip_map(&nodes[a.0].value, |gi, ai| gi * ai);
                        accumulate(&mut grads, &nodes, *b, db);
                    }
                }
                Op::Scale(x, f) => {
                    let f = *f;
                    accumulate(&mut grads, &nodes, *x, g.map(|v| v * f));
                }
                Op::Concat(parts) => {
                    let (rows, total) = g.dims2();
                    let mut offset = 0;
                    for p in parts {
                        let c = nodes[p.0].value.dims2().1;
                        if nodes[p.0].needs_grad {
                            let mut d = Vec::with_capacity(rows * c);
                            for r in 0..rows {
                                let row = &g.data()[r * total..(r + 1) * total];
                                d.extend_from_slice(&row[offset..offset + c]);
                            }
                            accumulate(&mut grads, &nodes, *p, Tensor::new(vec![rows, c], d)?);
                        }
                        offset += c;
                    }
                }
                Op::SliceCols { x, start } => {
                    let (rows, cols) = nodes[x.0].value.dims2();
                    let width = g.dims2().1;
                    let mut d = vec![0.0; rows * cols];
                    for r in 0..rows {
                        d[r * cols + start..r * cols + start + width]
                            .copy_from_slice(g.row_slice(r));
                    }
                    accumulate(&mut grads, &nodes, *x, Tensor::new(vec![rows, cols], d)?);
                }
                Op::Mask { x, mask } => {
                    let mut d = g;
                    for (v, m) in d.data_mut().iter_mut().zip(mask) {
                        *v *= m;
                    }
                    accumulate(&mut grads, &nodes, *x, d);
                }
                Op::Sum(x) => {
                    let gv = g.data()[0];
                    accumulate(&mut grads, &nodes, *x, Tensor::filled(nodes[x.0].value.shape(), gv));
                }
                Op::CrossEntropy { yhat, coef } => {
                    let gv = g.data()[0];
                    let d: Vec<f64> = coef.iter().map(|c| c * gv).collect();
                    let shape = nodes[yhat.0].value.shape().to_vec();
                    accumulate(&mut grads, &nodes, *yhat, Tensor::new(shape, d)?);
                }
            }
        }

        // keep gradients only for leaves that asked for them
        for (i, n) in nodes.iter().enumerate() {
            if !(matches!(n.op, Op::Leaf) && n.needs_grad) {
                grads[i] = None;
            }
        }
        Ok(Gradients { grads, shapes })
    }
}
