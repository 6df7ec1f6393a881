//! Central finite-difference check of tape gradients.

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use super::NdError;

/// Step used by the central differences.
pub const FD_EPSILON: f64 = 1e-5;

/// Gradients smaller than this in magnitude are compared absolutely: the
/// error denominator is `max(|analytic|, |numeric|, ERROR_FLOOR)`.
pub const ERROR_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// `(input index, element index)` of the largest error.
    pub worst: Option<(usize, usize)>,
    pub checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(ERROR_FLOOR)
}

fn evaluate<F>(f: &F, inputs: &[Tensor]) -> Result<f64, NdError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, NdError>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let v = tape.value(out);
    if v.len() != 1 {
        return Err(NdError::NonScalarLoss(v.shape().to_vec()));
    }
    Ok(v.data()[0])
}

/// Compares the backward pass of `f` against central differences with step
/// `eps` for every element of every input. `f` must be deterministic.
pub fn check_gradients<F>(inputs: &[Tensor], eps: f64, f: F) -> Result<GradCheck, NdError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, NdError>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.var(t.clone())).collect();
    let loss = f(&mut tape, &vars)?;
    let grads = tape.backward(loss)?;

    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
    };
    let mut probe = inputs.to_vec();
    for (i, &v) in vars.iter().enumerate() {
        let analytic = grads.get(v);
        for j in 0..inputs[i].len() {
            let orig = inputs[i].data()[j];
            probe[i].data_mut()[j] = orig + eps;
            let up = evaluate(&f, &probe)?;
            probe[i].data_mut()[j] = orig - eps;
            let down = evaluate(&f, &probe)?;
            probe[i].data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let err = relative_error(analytic.data()[j], numeric);
            report.checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(err);
                report.worst = Some((i, j));
            }
        }
    }
    Ok(report)
}
