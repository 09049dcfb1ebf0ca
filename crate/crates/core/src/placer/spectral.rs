// SPDX-License-Identifier: Apache-2.0

//! Cosine/sine transforms on a rectangular grid, computed with one complex
//! FFT of the same length per row or column.
//!
//! Grids are stored row-major with `ny` rows of `nx` values: `data[j * nx + i]`
//! is bin column `i`, row `j`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::num::Scalar;

/// Basis used along one axis when synthesising a grid from coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Cos,
    Sin,
}

struct Axis<T: Scalar> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    /// `exp(-i pi k / 2n)`
    twiddle: Vec<Complex<T>>,
}

impl<T: Scalar> Axis<T> {
    fn new(n: usize, planner: &mut FftPlanner<T>) -> Self {
        let twiddle = (0..n)
            .map(|k| {
                let a = -T::PI() * T::of_usize(k) / T::of_usize(2 * n);
                Complex::new(a.cos(), a.sin())
            })
            .collect();
        Axis {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            twiddle,
        }
    }

    /// `out[k] = sum_m x[m] cos(pi k (2m + 1) / 2n)`
    fn dct2(&self, x: &[T], out: &mut [T], buf: &mut [Complex<T>]) {
        let n = self.n;
        for m in 0..n.div_ceil(2) {
            buf[m] = Complex::new(x[2 * m], T::zero());
        }
        for m in 0..n / 2 {
            buf[n - 1 - m] = Complex::new(x[2 * m + 1], T::zero());
        }
        self.forward.process(buf);
        for k in 0..n {
            out[k] = (buf[k] * self.twiddle[k]).re;
        }
    }

    /// `out[m] = sum_k c[k] cos(pi k (2m + 1) / 2n)`
    fn cos_synth(&self, c: &[T], out: &mut [T], buf: &mut [Complex<T>]) {
        let n = self.n;
        for k in 0..n {
            buf[k] = self.twiddle[k].conj() * c[k];
        }
        self.inverse.process(buf);
        for m in 0..n.div_ceil(2) {
            out[2 * m] = buf[m].re;
        }
        for m in 0..n / 2 {
            out[2 * m + 1] = buf[n - 1 - m].re;
        }
    }

    /// `out[m] = sum_k c[k] sin(pi k (2m + 1) / 2n)`, via
    /// `sin(pi k (2m+1)/2n) = (-1)^m cos(pi (n-k) (2m+1)/2n)`.
    fn sin_synth(&self, c: &[T], out: &mut [T], buf: &mut [Complex<T>], tmp: &mut [T]) {
        let n = self.n;
        tmp[0] = T::zero();
        for k in 1..n {
            tmp[k] = c[n - k];
        }
        self.cos_synth(&tmp[..n], out, buf);
        for (m, v) in out.iter_mut().enumerate().take(n) {
            if m % 2 == 1 {
                *v = -*v;
            }
        }
    }

    fn synth(&self, basis: Basis, c: &[T], out: &mut [T], buf: &mut [Complex<T>], tmp: &mut [T]) {
        match basis {
            Basis::Cos => self.cos_synth(c, out, buf),
            Basis::Sin => self.sin_synth(c, out, buf, tmp),
        }
    }
}

/// Separable 2D transforms on an `nx` x `ny` grid.
pub struct Transform2d<T: Scalar> {
    nx: usize,
    ny: usize,
    x: Axis<T>,
    y: Axis<T>,
    buf: Vec<Complex<T>>,
    line_in: Vec<T>,
    line_out: Vec<T>,
    tmp: Vec<T>,
    work: Vec<T>,
}

impl<T: Scalar> Transform2d<T> {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        let n = nx.max(ny);
        Transform2d {
            nx,
            ny,
            x: Axis::new(nx, &mut planner),
            y: Axis::new(ny, &mut planner),
            buf: vec![Complex::new(T::zero(), T::zero()); n],
            line_in: vec![T::zero(); n],
            line_out: vec![T::zero(); n],
            tmp: vec![T::zero(); n],
            work: vec![T::zero(); nx * ny],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Unnormalised 2D DCT-II:
    /// `out[v][u] = sum_{i,j} input[j][i] cos(pi u (2i+1)/2nx) cos(pi v (2j+1)/2ny)`.
    pub fn dct2(&mut self, input: &[T], out: &mut [T]) {
        let (nx, ny) = (self.nx, self.ny);
        for j in 0..ny {
            let row = &input[j * nx..(j + 1) * nx];
            self.x.dct2(row, &mut self.work[j * nx..(j + 1) * nx], &mut self.buf[..nx]);
        }
        for u in 0..nx {
            for j in 0..ny {
                self.line_in[j] = self.work[j * nx + u];
            }
            self.y.dct2(&self.line_in[..ny], &mut self.line_out[..ny], &mut self.buf[..ny]);
            for v in 0..ny {
                out[v * nx + u] = self.line_out[v];
            }
        }
    }

    /// Evaluates `sum_{u,v} c[v][u] Bx(u, i) By(v, j)` at every bin center,
    /// where `B` is `cos(pi k (2m+1)/2n)` or the matching sine.
    pub fn synth(&mut self, coeffs: &[T], bx: Basis, by: Basis, out: &mut [T]) {
        let (nx, ny) = (self.nx, self.ny);
        for v in 0..ny {
            let row = &coeffs[v * nx..(v + 1) * nx];
            self.x.synth(
                bx,
                row,
                &mut self.work[v * nx..(v + 1) * nx],
                &mut self.buf[..nx],
                &mut self.tmp[..nx],
            );
        }
        for i in 0..nx {
            for v in 0..ny {
                self.line_in[v] = self.work[v * nx + i];
            }
            self.y.synth(
                by,
                &self.line_in[..ny],
                &mut self.line_out[..ny],
                &mut self.buf[..ny],
                &mut self.tmp[..ny],
            );
            for j in 0..ny {
                out[j * nx + i] = self.line_out[j];
            }
        }
    }
}
