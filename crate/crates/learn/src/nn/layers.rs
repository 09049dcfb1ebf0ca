// SPDX-License-Identifier: Apache-2.0

//! Layer kernels on single samples. Feature maps are `[C, H, W]`.
//! Convolutions are stride 1 with zero "same" padding and odd kernels.

use placerl_core::Scalar;

use super::{mismatch, Real, ShapeError, Tensor};

/// Gradients of one convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

fn conv_dims<T>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<(usize, usize, usize, usize, usize), ShapeError> {
    if x.shape.len() != 3 || w.shape.len() != 4 {
        return Err(mismatch("conv2d", &x.shape, &w.shape));
    }
    let (c, h, wd) = (x.shape[0], x.shape[1], x.shape[2]);
    let (o, ci, k, k2) = (w.shape[0], w.shape[1], w.shape[2], w.shape[3]);
    if ci != c || k != k2 || k % 2 == 0 {
        return Err(mismatch("conv2d", &x.shape, &w.shape));
    }
    if b.shape != [o] {
        return Err(mismatch("conv2d bias", &w.shape, &b.shape));
    }
    Ok((c, h, wd, o, k))
}

/// Unfolds `x` into `[C*K*K, H*W]` columns; out-of-bounds taps are zero.
fn im2col<T: Scalar>(x: &[T], c: usize, h: usize, wd: usize, k: usize) -> Vec<T> {
    let pad = (k / 2) as isize;
    let plane = h * wd;
    let mut col = vec![T::zero(); c * k * k * plane];
    for ic in 0..c {
        let src = &x[ic * plane..(ic + 1) * plane];
        for ky in 0..k {
            for kx in 0..k {
                let row = &mut col[((ic * k + ky) * k + kx) * plane..][..plane];
                let (dy, dx) = (ky as isize - pad, kx as isize - pad);
                for y in 0..h {
                    let sy = y as isize + dy;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let sy = sy as usize;
                    let x0 = (-dx).max(0) as usize;
                    let x1 = (wd as isize - dx.max(0)).max(x0 as isize) as usize;
                    let sx0 = (x0 as isize + dx) as usize;
                    row[y * wd + x0..y * wd + x1].copy_from_slice(&src[sy * wd + sx0..sy * wd + sx0 + (x1 - x0)]);
                }
            }
        }
    }
    col
}

/// Adds columns back onto an image; the adjoint of [`im2col`].
fn col2im<T: Scalar>(col: &[T], c: usize, h: usize, wd: usize, k: usize) -> Vec<T> {
    let pad = (k / 2) as isize;
    let plane = h * wd;
    let mut x = vec![T::zero(); c * plane];
    for ic in 0..c {
        let dst = &mut x[ic * plane..(ic + 1) * plane];
        for ky in 0..k {
            for kx in 0..k {
                let row = &col[((ic * k + ky) * k + kx) * plane..][..plane];
                let (dy, dx) = (ky as isize - pad, kx as isize - pad);
                for y in 0..h {
                    let sy = y as isize + dy;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let sy = sy as usize;
                    let x0 = (-dx).max(0) as usize;
                    let x1 = (wd as isize - dx.max(0)).max(x0 as isize) as usize;
                    let sx0 = (x0 as isize + dx) as usize;
                    let d = &mut dst[sy * wd + sx0..sy * wd + sx0 + (x1 - x0)];
                    for (a, b) in d.iter_mut().zip(&row[y * wd + x0..y * wd + x1]) {
                        *a += *b;
                    }
                }
            }
        }
    }
    x
}

pub fn conv2d_forward<T: Real>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, ShapeError> {
    let (c, h, wd, o, k) = conv_dims(x, w, b)?;
    let plane = h * wd;
    let ck = c * k * k;
    let col = if k == 1 { x.data.clone() } else { im2col(&x.data, c, h, wd, k) };
    let mut out = Tensor::zeros(&[o, h, wd]);
    for oc in 0..o {
        out.data[oc * plane..(oc + 1) * plane].fill(b.data[oc]);
    }
    T::gemm(o, ck, plane, &w.data, false, &col, false, T::one(), &mut out.data);
    Ok(out)
}

pub fn conv2d_backward<T: Real>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<ConvGrads<T>, ShapeError> {
    let (c, h, wd, o, k) = conv_dims(x, w, b)?;
    if grad_out.shape != [o, h, wd] {
        return Err(mismatch("conv2d backward", &[o, h, wd], &grad_out.shape));
    }
    let plane = h * wd;
    let ck = c * k * k;
    let col = if k == 1 { x.data.clone() } else { im2col(&x.data, c, h, wd, k) };
    let g = &grad_out.data;
    let mut gb = b.zeros_like();
    for oc in 0..o {
        gb.data[oc] = g[oc * plane..(oc + 1) * plane].iter().copied().sum();
    }
    let mut gw = w.zeros_like();
    T::gemm(o, plane, ck, g, false, &col, true, T::zero(), &mut gw.data);
    let mut gcol = vec![T::zero(); ck * plane];
    T::gemm(ck, o, plane, &w.data, true, g, false, T::zero(), &mut gcol);
    let gx = if k == 1 { gcol } else { col2im(&gcol, c, h, wd, k) };
    Ok(ConvGrads {
        input: Tensor {
            shape: x.shape.clone(),
            data: gx,
        },
        weight: gw,
        bias: gb,
    })
}

/// `y = W x + b` with `W: [m, n]`.
pub fn fc_forward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, ShapeError> {
    if w.shape.len() != 2 || w.shape[1] != x.len() {
        return Err(mismatch("fc", &x.shape, &w.shape));
    }
    let (m, n) = (w.shape[0], w.shape[1]);
    if b.shape != [m] {
        return Err(mismatch("fc bias", &w.shape, &b.shape));
    }
    let data = (0..m)
        .map(|r| {
            w.data[r * n..(r + 1) * n]
                .iter()
                .zip(&x.data)
                .fold(b.data[r], |acc, (a, v)| acc + *a * *v)
        })
        .collect();
    Ok(Tensor { shape: vec![m], data })
}

/// Returns `(grad_x, grad_w, grad_b)`.
pub fn fc_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>), ShapeError> {
    if w.shape.len() != 2 || w.shape[1] != x.len() || grad_out.shape != [w.shape[0]] {
        return Err(mismatch("fc backward", &w.shape, &grad_out.shape));
    }
    let (m, n) = (w.shape[0], w.shape[1]);
    let mut gx = x.zeros_like();
    let mut gw = w.zeros_like();
    for r in 0..m {
        let g = grad_out.data[r];
        for j in 0..n {
            gw.data[r * n + j] = g * x.data[j];
            gx.data[j] += g * w.data[r * n + j];
        }
    }
    Ok((gx, gw, grad_out.clone()))
}

pub fn relu_forward<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    Tensor {
        shape: x.shape.clone(),
        data: x.data.iter().map(|&v| v.max(T::zero())).collect(),
    }
}

/// Gradient through a ReLU given its output.
pub fn relu_backward<T: Scalar>(out: &Tensor<T>, grad_out: &Tensor<T>) -> Tensor<T> {
    Tensor {
        shape: out.shape.clone(),
        data: out
            .data
            .iter()
            .zip(&grad_out.data)
            .map(|(&o, &g)| if o > T::zero() { g } else { T::zero() })
            .collect(),
    }
}

pub fn residual_add<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, ShapeError> {
    if a.shape != b.shape {
        return Err(mismatch("residual_add", &a.shape, &b.shape));
    }
    Ok(Tensor {
        shape: a.shape.clone(),
        data: a.data.iter().zip(&b.data).map(|(x, y)| *x + *y).collect(),
    })
}

/// `[C, H, W] -> [C]`, spatial mean.
pub fn mean_pool_forward<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let c = x.shape[0];
    let plane = x.len() / c;
    let inv = T::one() / T::of_usize(plane);
    Tensor {
        shape: vec![c],
        data: x.data.chunks(plane).map(|p| p.iter().copied().sum::<T>() * inv).collect(),
    }
}

pub fn mean_pool_backward<T: Scalar>(shape: &[usize], grad_out: &Tensor<T>) -> Tensor<T> {
    let plane: usize = shape[1..].iter().product();
    let inv = T::one() / T::of_usize(plane);
    let mut g = Tensor::zeros(shape);
    for (chunk, &go) in g.data.chunks_mut(plane).zip(&grad_out.data) {
        chunk.fill(go * inv);
    }
    g
}

/// `[C, H, W] -> [C, a, a]` by averaging equal blocks; `a` must divide both
/// spatial sides.
pub fn avg_pool_forward<T: Scalar>(x: &Tensor<T>, a: usize) -> Result<Tensor<T>, ShapeError> {
    let (c, h, w) = (x.shape[0], x.shape[1], x.shape[2]);
    if a == 0 || h % a != 0 || w % a != 0 {
        return Err(mismatch("avg_pool", &x.shape, &[a, a]));
    }
    let (fy, fx) = (h / a, w / a);
    let inv = T::one() / T::of_usize(fy * fx);
    let mut out = Tensor::zeros(&[c, a, a]);
    for ch in 0..c {
        for y in 0..h {
            for xx in 0..w {
                out.data[(ch * a + y / fy) * a + xx / fx] += x.data[(ch * h + y) * w + xx] * inv;
            }
        }
    }
    Ok(out)
}

pub fn avg_pool_backward<T: Scalar>(shape: &[usize], a: usize, grad_out: &Tensor<T>) -> Tensor<T> {
    let (c, h, w) = (shape[0], shape[1], shape[2]);
    let (fy, fx) = (h / a, w / a);
    let inv = T::one() / T::of_usize(fy * fx);
    let mut g = Tensor::zeros(shape);
    for ch in 0..c {
        for y in 0..h {
            for xx in 0..w {
                g.data[(ch * h + y) * w + xx] = grad_out.data[(ch * a + y / fy) * a + xx / fx] * inv;
            }
        }
    }
    g
}
