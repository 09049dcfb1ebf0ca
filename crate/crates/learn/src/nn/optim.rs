// SPDX-License-Identifier: Apache-2.0

//! Parameter updates: plain gradient descent and RMSProp.

use placerl_core::Scalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Params;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("non-finite gradient in parameter {0}")]
pub struct NonFiniteGrad(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    RmsProp { alpha: f64, eps: f64 },
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::RmsProp { alpha: 0.99, eps: 1e-5 }
    }
}

#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    pub kind: OptimizerKind,
    square_avg: Option<Params<T>>,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind) -> Self {
        Optimizer { kind, square_avg: None }
    }

    /// `p -= lr * g` (SGD) or `p -= lr * g / (sqrt(v) + eps)` with
    /// `v <- alpha v + (1 - alpha) g^2` (RMSProp). Rejects non-finite
    /// gradients before touching any parameter.
    pub fn step(&mut self, params: &mut Params<T>, grads: &Params<T>, lr: T) -> Result<(), NonFiniteGrad> {
        assert!(params.same_layout(grads), "parameter and gradient layouts differ");
        if let Some(i) = grads.tensors.iter().position(|t| !t.is_finite()) {
            return Err(NonFiniteGrad(grads.names[i].clone()));
        }
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.tensors.iter_mut().zip(&grads.tensors) {
                    for (x, d) in p.data.iter_mut().zip(&g.data) {
                        *x -= lr * *d;
                    }
                }
            }
            OptimizerKind::RmsProp { alpha, eps } => {
                let (alpha, eps) = (T::of(alpha), T::of(eps));
                let sq = self.square_avg.get_or_insert_with(|| grads.zeros_like());
                for ((p, g), v) in params.tensors.iter_mut().zip(&grads.tensors).zip(&mut sq.tensors) {
                    for ((x, d), s) in p.data.iter_mut().zip(&g.data).zip(&mut v.data) {
                        *s = alpha * *s + (T::one() - alpha) * *d * *d;
                        *x -= lr * *d / (s.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    fn one(v: f64) -> Params<f64> {
        let mut p = Params::new();
        p.push("p", Tensor::from_vec(&[1], vec![v]).unwrap());
        p
    }

    #[test]
    fn sgd_arithmetic() {
        let mut p = one(1.0);
        Optimizer::new(OptimizerKind::Sgd).step(&mut p, &one(0.5), 0.1).unwrap();
        assert!((p.tensors[0].data[0] - 0.95).abs() < 1e-15);
    }

    #[test]
    fn zero_lr_is_identity() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::default()] {
            let mut p = one(1.25);
            Optimizer::new(kind).step(&mut p, &one(3.0), 0.0).unwrap();
            assert_eq!(p.tensors[0].data[0], 1.25);
        }
    }

    #[test]
    fn nan_gradient_is_rejected() {
        let mut p = one(1.0);
        let err = Optimizer::new(OptimizerKind::default()).step(&mut p, &one(f64::NAN), 0.1);
        assert_eq!(err, Err(NonFiniteGrad("p".into())));
        assert_eq!(p.tensors[0].data[0], 1.0);
    }
}
