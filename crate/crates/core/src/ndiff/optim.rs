use super::layers::ParamSet;
use super::tensor::Tensor;
use super::NdError;

/// Stochastic gradient descent with classical momentum:
/// `v ← μ·v − η·g`, `p ← p + v`.
#[derive(Clone, Debug)]
pub struct Sgd {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<Tensor>,
}

impl Sgd {
    pub fn new(learning_rate: f64, momentum: f64, params: &ParamSet) -> Result<Self, NdError> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(NdError::Invalid(format!("learning rate {}", learning_rate)));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(NdError::Invalid(format!("momentum {} outside [0, 1)", momentum)));
        }
        let velocity = params.iter().map(|(_, t)| Tensor::zeros(t.shape())).collect();
        Ok(Sgd {
            learning_rate,
            momentum,
            velocity,
        })
    }

    /// Applies one update. Nothing is modified if any gradient is non-finite.
    pub fn step(&mut self, params: &mut ParamSet, grads: &[Tensor]) -> Result<(), NdError> {
        if grads.len() != params.len() {
            return Err(NdError::Shape {
                op: "sgd",
                detail: format!("{} gradients for {} parameters", grads.len(), params.len()),
            });
        }
        for ((name, p), g) in params.iter().zip(grads) {
            if p.len() != g.len() {
                return Err(NdError::Shape {
                    op: "sgd",
                    detail: format!("{}: {:?} vs gradient {:?}", name, p.shape(), g.shape()),
                });
            }
            if !g.is_finite() {
                return Err(NdError::NonFinite {
                    param: name.to_string(),
                });
            }
        }
        let (lr, mu) = (self.learning_rate, self.momentum);
        for (((_, p), g), v) in params.tensors_mut().zip(grads).zip(&mut self.velocity) {
            for ((pi, gi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(v.data_mut()) {
                *vi = mu * *vi - lr * gi;
                *pi += *vi;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(value: f64) -> ParamSet {
        let mut p = ParamSet::new();
        p.push("p", Tensor::vector(vec![value]));
        p
    }

    #[test]
    fn plain_step_moves_against_gradient() {
        let mut params = single(3.0);
        let mut sgd = Sgd::new(1.0, 0.0, &params).unwrap();
        sgd.step(&mut params, &[Tensor::vector(vec![1.0])]).unwrap();
        assert_eq!(params.iter().next().unwrap().1.data(), &[2.0]);
        sgd.step(&mut params, &[Tensor::vector(vec![0.0])]).unwrap();
        assert_eq!(params.iter().next().unwrap().1.data(), &[2.0]);
    }

    #[test]
    fn quadratic_bowl_converges() {
        // f(p) = p²/2, gradient p
        let mut params = single(1.0);
        let mut sgd = Sgd::new(0.1, 0.0, &params).unwrap();
        for _ in 0..100 {
            let p = params.iter().next().unwrap().1.data()[0];
            sgd.step(&mut params, &[Tensor::vector(vec![p])]).unwrap();
        }
        assert!(params.iter().next().unwrap().1.data()[0].abs() < 1e-3);
    }

    #[test]
    fn non_finite_gradient_names_parameter_and_leaves_values() {
        let mut params = single(1.0);
        let mut sgd = Sgd::new(0.1, 0.9, &params).unwrap();
        let err = sgd
            .step(&mut params, &[Tensor::vector(vec![f64::NAN])])
            .unwrap_err();
        assert!(matches!(err, NdError::NonFinite { ref param } if param == "p"));
        assert_eq!(params.iter().next().unwrap().1.data(), &[1.0]);
    }

    #[test]
    fn rejects_bad_hyper_parameters() {
        let params = single(0.0);
        assert!(Sgd::new(0.0, 0.5, &params).is_err());
        assert!(Sgd::new(0.1, 1.0, &params).is_err());
    }
}
