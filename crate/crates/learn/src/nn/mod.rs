// SPDX-License-Identifier: Apache-2.0

//! Dense tensors, the handful of layers the policy network needs with
//! hand-written backward passes, gradient clipping, optimisers and the
//! binary checkpoint format.

pub mod checkpoint;
pub mod layers;
pub mod optim;

use placerl_core::Scalar;
use thiserror::Error;

/// Scalars with a matrix-multiply kernel.
pub trait Real: Scalar {
    /// `C = A B + beta C` for row-major `A: [m, k]`, `B: [k, n]`, `C: [m, n]`.
    /// `ta` / `tb` read `A` / `B` as stored transposed (`[k, m]` / `[n, k]`).
    #[allow(clippy::too_many_arguments)]
    fn gemm(m: usize, k: usize, n: usize, a: &[Self], ta: bool, b: &[Self], tb: bool, beta: Self, c: &mut [Self]);
}

fn strides(rows: usize, cols: usize, transposed: bool) -> (isize, isize) {
    if transposed {
        (1, rows as isize)
    } else {
        (cols as isize, 1)
    }
}

macro_rules! impl_real {
    ($t:ty, $f:path) => {
        impl Real for $t {
            fn gemm(m: usize, k: usize, n: usize, a: &[$t], ta: bool, b: &[$t], tb: bool, beta: $t, c: &mut [$t]) {
                assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n, "gemm operand too short");
                let (rsa, csa) = strides(m, k, ta);
                let (rsb, csb) = strides(k, n, tb);
                // SAFETY: the length checks above keep every strided access
                // in bounds, and `c` is a unique borrow.
                unsafe {
                    $f(m, k, n, 1.0, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta, c.as_mut_ptr(), n as isize, 1);
                }
            }
        }
    };
}

impl_real!(f32, matrixmultiply::sgemm);
impl_real!(f64, matrixmultiply::dgemm);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShapeError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    Mismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
}

pub(crate) fn mismatch(op: &'static str, left: &[usize], right: &[usize]) -> ShapeError {
    ShapeError::Mismatch {
        op,
        left: left.to_vec(),
        right: right.to_vec(),
    }
}

/// Row-major tensor of rank at most 4.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        assert!(shape.len() <= 4, "rank {} > 4", shape.len());
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self, ShapeError> {
        if shape.len() > 4 || shape.iter().product::<usize>() != data.len() {
            return Err(mismatch("from_vec", shape, &[data.len()]));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.shape)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

/// Ordered, uniquely named parameter tensors. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    pub names: Vec<String>,
    pub tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> Params<T> {
    pub fn new() -> Self {
        Params {
            names: Vec::new(),
            tensors: Vec::new(),
        }
    }

    /// Appends a tensor and returns its slot.
    pub fn push(&mut self, name: impl Into<String>, t: Tensor<T>) -> usize {
        let name = name.into();
        assert!(!self.names.contains(&name), "duplicate parameter {name}");
        self.names.push(name);
        self.tensors.push(t);
        self.tensors.len() - 1
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn zeros_like(&self) -> Self {
        Params {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::zeros_like).collect(),
        }
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.names == other.names && self.tensors.iter().zip(&other.tensors).all(|(a, b)| a.shape == b.shape)
    }

    /// `self += other`, tensor by tensor.
    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += *y;
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for t in &mut self.tensors {
            t.data.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn cast<U: Scalar>(&self) -> Params<U> {
        Params {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }
}

impl<T: Scalar> Default for Params<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Joint L2 norm over every gradient entry.
pub fn global_grad_norm<T: Scalar>(grads: &Params<T>) -> T {
    let sq: f64 = grads
        .tensors
        .iter()
        .flat_map(|t| t.data.iter())
        .map(|v| {
            let v = v.as_f64();
            v * v
        })
        .sum();
    T::of(sq.sqrt())
}

/// Rescales all gradients by `max_norm / norm` when the joint norm exceeds
/// `max_norm`. Returns the norm before clipping.
pub fn clip_grad_norm<T: Scalar>(grads: &mut Params<T>, max_norm: T) -> T {
    let norm = global_grad_norm(grads);
    if norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(v: Vec<f64>) -> Params<f64> {
        let mut p = Params::new();
        let n = v.len();
        p.push("g", Tensor::from_vec(&[n], v).unwrap());
        p
    }

    #[test]
    fn clip_examples() {
        let mut g = single(vec![30.0, 40.0]);
        assert_eq!(clip_grad_norm(&mut g, 8.0), 50.0);
        let d = &g.tensors[0].data;
        assert!((d[0] - 4.8).abs() < 1e-12 && (d[1] - 6.4).abs() < 1e-12);

        let mut small = single(vec![3.0, 4.0]);
        clip_grad_norm(&mut small, 8.0);
        assert_eq!(small.tensors[0].data, vec![3.0, 4.0]);

        let mut zero = single(vec![0.0; 3]);
        assert_eq!(clip_grad_norm(&mut zero, 8.0), 0.0);
        assert_eq!(zero.tensors[0].data, vec![0.0; 3]);
    }

    #[test]
    fn shape_errors_name_both_shapes() {
        let e = Tensor::<f64>::from_vec(&[2, 3], vec![0.0; 5]).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("[2, 3]") && msg.contains("[5]"), "{msg}");
    }
}
