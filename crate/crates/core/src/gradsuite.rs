//! Finite-difference checks of every tape operator and of the full argument
//! and event losses on small random instances.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ndiff::gradcheck::{check_gradients, GradCheck, FD_EPSILON};
use crate::ndiff::{Bound, LstmCell, NdError, ParamSet, Tape, Tensor, Var};
use crate::rng::{derived, seeded};
use crate::vecent::{ArgShape, ArgumentModel, ContextWindow, Slot};
use crate::vecom::{event_loss, EventModel, PairLabel};

/// Largest relative error accepted by the suite.
pub const TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub name: String,
    pub max_rel_error: f64,
    pub checked: usize,
}

impl SuiteEntry {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= TOLERANCE
    }
}

fn random<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::new(vec![rows, cols], data).expect("sized")
}

/// Entries bounded away from zero, for kinks at the origin.
fn away_from_zero<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Tensor {
    let data = (0..rows * cols)
        .map(|_| {
            let m = rng.random_range(0.1..1.0);
            if rng.random_bool(0.5) { m } else { -m }
        })
        .collect();
    Tensor::new(vec![rows, cols], data).expect("sized")
}

/// `sum(y ⊙ r)` for a fixed random `r`, so every output element gets its own
/// upstream weight.
fn project(tape: &mut Tape, y: Var, seed: u64) -> Result<Var, NdError> {
    let (rows, cols) = tape.value(y).dims2();
    let r = random(&mut seeded(seed), rows, cols).reshaped(tape.value(y).shape().to_vec())?;
    let r = tape.constant(r);
    let p = tape.mul(y, r)?;
    Ok(tape.sum(p))
}

fn entry(name: &str, g: GradCheck) -> SuiteEntry {
    SuiteEntry {
        name: name.to_string(),
        max_rel_error: g.max_rel_error,
        checked: g.checked,
    }
}

fn windows<R: Rng + ?Sized>(rng: &mut R, count: usize, u: usize, dim: usize) -> Vec<ContextWindow> {
    (0..count)
        .map(|_| {
            let vecs = |rng: &mut R| -> Vec<Vec<f64>> {
                (0..=u)
                    .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect()
            };
            ContextWindow {
                left: vec![Slot::Pad; u + 1],
                right: vec![Slot::Pad; u + 1],
                left_vectors: vecs(rng),
                right_vectors: vecs(rng),
            }
        })
        .collect()
}

fn params_as_inputs(params: &ParamSet) -> Vec<Tensor> {
    params.iter().map(|(_, t)| t.clone()).collect()
}

/// Runs every check with instances drawn from `seed`.
pub fn run_suite(seed: u64) -> Result<Vec<SuiteEntry>, NdError> {
    let mut rng = derived(seed, "gradsuite", 0);
    let mut out = Vec::new();
    let eps = FD_EPSILON;

    let x = random(&mut rng, 3, 4);
    let w = random(&mut rng, 5, 4);
    let b = Tensor::vector(random(&mut rng, 1, 5).into_data());
    out.push(entry(
        "affine",
        check_gradients(&[x.clone(), w, b], eps, |t, v| {
            let y = t.affine(v[0], v[1], v[2])?;
            project(t, y, 1)
        })?,
    ));

    type Unary = fn(&mut Tape, Var) -> Var;
    let unary: [(&str, Unary, bool); 5] = [
        ("tanh", |t, x| t.tanh(x), false),
        ("sigmoid", |t, x| t.sigmoid(x), false),
        ("relu", |t, x| t.relu(x), true),
        ("abs", |t, x| t.abs(x), true),
        ("scale", |t, x| t.scale(x, -1.7), false),
    ];
    for (name, op, kink) in unary {
        let x = if kink { away_from_zero(&mut rng, 3, 4) } else { random(&mut rng, 3, 4) };
        out.push(entry(
            name,
            check_gradients(&[x], eps, |t, v| {
                let y = op(t, v[0]);
                project(t, y, 2)
            })?,
        ));
    }

    type Binary = fn(&mut Tape, Var, Var) -> Result<Var, NdError>;
    let binary: [(&str, Binary); 3] = [
        ("add", |t, a, b| t.add(a, b)),
        ("sub", |t, a, b| t.sub(a, b)),
        ("mul", |t, a, b| t.mul(a, b)),
    ];
    for (name, op) in binary {
        let (a, b) = (random(&mut rng, 2, 3), random(&mut rng, 2, 3));
        out.push(entry(
            name,
            check_gradients(&[a, b], eps, |t, v| {
                let y = op(t, v[0], v[1])?;
                project(t, y, 3)
            })?,
        ));
    }

    let parts = [random(&mut rng, 2, 3), random(&mut rng, 2, 1), random(&mut rng, 2, 2)];
    out.push(entry(
        "concat",
        check_gradients(&parts, eps, |t, v| {
            let y = t.concat(v)?;
            project(t, y, 4)
        })?,
    ));
    out.push(entry(
        "slice_cols",
        check_gradients(&[random(&mut rng, 3, 5)], eps, |t, v| {
            let y = t.slice_cols(v[0], 1, 4)?;
            project(t, y, 5)
        })?,
    ));
    out.push(entry(
        "dropout",
        check_gradients(&[random(&mut rng, 4, 5)], eps, |t, v| {
            // same mask on every evaluation
            let y = t.dropout(v[0], 0.3, true, &mut seeded(6))?;
            project(t, y, 6)
        })?,
    ));
    out.push(entry(
        "sum",
        check_gradients(&[random(&mut rng, 3, 3)], eps, |t, v| {
            let s = t.sum(v[0]);
            let s2 = t.mul(s, s)?;
            Ok(s2)
        })?,
    ));

    let probs = Tensor::new(vec![6, 1], (0..6).map(|_| rng.random_range(0.05..0.95)).collect())?;
    let labels = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0];
    let pos_w = [1.0, 0.5, 0.0, 2.0, 1.0, 0.3];
    let neg_w = [0.7, 1.0, 0.0, 1.0, 0.2, 1.5];
    out.push(entry(
        "cross_entropy",
        check_gradients(&[probs.clone()], eps, |t, v| t.cross_entropy(&labels, v[0], &pos_w, &neg_w))?,
    ));
    out.push(entry(
        "weighted_bce",
        check_gradients(&[probs], eps, |t, v| t.weighted_bce(&labels, v[0], 0.8))?,
    ));

    let mut params = ParamSet::new();
    let cell = LstmCell::init(&mut params, "cell", 3, 4, &mut rng);
    let mut inputs = params_as_inputs(&params);
    let n_params = inputs.len();
    inputs.extend([random(&mut rng, 2, 3), random(&mut rng, 2, 4), random(&mut rng, 2, 4)]);
    out.push(entry(
        "lstm_step",
        check_gradients(&inputs, eps, |t, v| {
            let bound = Bound::from_vars(v[..n_params].to_vec());
            let (h, c) = cell.step(t, &bound, v[n_params], v[n_params + 1], v[n_params + 2])?;
            let both = t.concat(&[h, c])?;
            project(t, both, 7)
        })?,
    ));

    // full argument loss: BLSTM, MLP with dropout, weighted cross-entropy
    let shape = ArgShape {
        input_dim: 3,
        lstm_hidden: 4,
        mlp_hidden: 5,
        dropout: 0.2,
    };
    let model = ArgumentModel::new("Agent", shape, &mut rng);
    let ws = windows(&mut rng, 3, 3, 3);
    let refs: Vec<&ContextWindow> = ws.iter().collect();
    let y = [1.0, 0.0, 1.0];
    out.push(entry(
        "argument_loss",
        check_gradients(&params_as_inputs(&model.params), eps, |t, v| {
            let bound = Bound::from_vars(v.to_vec());
            let f = model.forward(t, &bound, &refs, true, &mut seeded(8))?;
            t.weighted_bce(&y, f.probabilities, 0.3)
        })?,
    ));

    // full event loss: subtraction, both heads, masked direction term
    let event = EventModel::new("Interaction", "Agent", "Target", 6, 5, &mut rng);
    let mut inputs = params_as_inputs(&event.params);
    let n_params = inputs.len();
    inputs.extend([random(&mut rng, 4, 6), random(&mut rng, 4, 6)]);
    let labels = [
        PairLabel { exists: true, forward: true },
        PairLabel { exists: true, forward: false },
        PairLabel::NONE,
        PairLabel::NONE,
    ];
    out.push(entry(
        "event_loss",
        check_gradients(&inputs, eps, |t, v| {
            let bound = Bound::from_vars(v[..n_params].to_vec());
            let f = event.forward(t, &bound, v[n_params], v[n_params + 1])?;
            event_loss(t, &f, &labels)
        })?,
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_passes() {
        for e in run_suite(1).unwrap() {
            assert!(e.passed(), "{} {}", e.name, e.max_rel_error);
            assert!(e.checked > 0);
        }
    }
}
