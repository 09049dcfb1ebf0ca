// SPDX-License-Identifier: Apache-2.0

//! Nesterov's accelerated gradient with backtracking step control.
//!
//! The gradient is taken at the reference point `v`. A trial step
//! `u' = P(v - alpha d)` is accepted when the objective at `u'` is below the
//! quadratic model `f(v) + g.(u' - v) + |u' - v|^2 / (2 alpha)`; otherwise
//! `alpha` is halved. The first `alpha` of each iteration is the
//! Barzilai-Borwein estimate `|v_k - v_{k-1}| / |g_k - g_{k-1}|` of the
//! inverse Lipschitz constant. `d` is normally the gradient `g`; the spatial
//! control hook passes a rescaled copy.

use thiserror::Error;

use crate::num::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("non-finite gradient")]
pub struct NonFiniteGradient;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo<T> {
    pub step_size: T,
    pub backtracks: usize,
    pub cost: T,
}

#[derive(Debug, Clone)]
pub struct Nesterov<T> {
    major: Vec<T>,
    reference: Vec<T>,
    a: T,
    prev_reference: Vec<T>,
    prev_grad: Vec<T>,
    has_prev: bool,
    step_size: T,
    pub max_backtracks: usize,
    trial: Vec<T>,
}

fn norm_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| (p - q) * (p - q))
        .sum::<T>()
        .sqrt()
}

impl<T: Scalar> Nesterov<T> {
    pub fn new(x0: Vec<T>, initial_step: T) -> Self {
        let n = x0.len();
        Nesterov {
            reference: x0.clone(),
            major: x0,
            a: T::one(),
            prev_reference: vec![T::zero(); n],
            prev_grad: vec![T::zero(); n],
            has_prev: false,
            step_size: initial_step,
            max_backtracks: 30,
            trial: vec![T::zero(); n],
        }
    }

    /// Point at which the next gradient must be evaluated.
    pub fn reference(&self) -> &[T] {
        &self.reference
    }

    /// Current solution estimate.
    pub fn solution(&self) -> &[T] {
        &self.major
    }

    pub fn step_size(&self) -> T {
        self.step_size
    }

    /// One accelerated step. `grad` is the objective gradient at
    /// [`Self::reference`], `direction` the (possibly rescaled) descent
    /// direction, `cost_ref` the objective there. `project` maps a point
    /// onto the feasible set; `cost` evaluates the objective.
    pub fn step(
        &mut self,
        grad: &[T],
        direction: &[T],
        cost_ref: T,
        project: impl Fn(&mut [T]),
        mut cost: impl FnMut(&[T]) -> T,
    ) -> Result<StepInfo<T>, NonFiniteGradient> {
        if grad.iter().chain(direction).any(|g| !g.is_finite()) || !cost_ref.is_finite() {
            return Err(NonFiniteGradient);
        }
        if self.has_prev {
            let dv = norm_diff(&self.reference, &self.prev_reference);
            let dg = norm_diff(grad, &self.prev_grad);
            let bb = dv / dg;
            if dg > T::zero() && bb.is_finite() && bb > T::zero() {
                self.step_size = bb;
            }
        }

        let mut alpha = self.step_size;
        let mut backtracks = 0;
        let mut trial_cost;
        loop {
            for ((t, &v), &d) in self.trial.iter_mut().zip(&self.reference).zip(direction) {
                *t = v - alpha * d;
            }
            project(&mut self.trial);
            let mut lin = T::zero();
            let mut sq = T::zero();
            for ((&t, &v), &g) in self.trial.iter().zip(&self.reference).zip(grad) {
                let d = t - v;
                lin += g * d;
                sq += d * d;
            }
            let model = cost_ref + lin + sq / (T::two() * alpha);
            trial_cost = cost(&self.trial);
            let slack = T::epsilon() * T::of(16.0) * (cost_ref.abs() + T::one());
            if (trial_cost.is_finite() && trial_cost <= model + slack)
                || backtracks >= self.max_backtracks
            {
                break;
            }
            alpha = alpha * T::half();
            backtracks += 1;
        }
        self.step_size = alpha;

        let a_next = (T::one() + (T::of(4.0) * self.a * self.a + T::one()).sqrt()) * T::half();
        let momentum = (self.a - T::one()) / a_next;
        self.prev_reference.copy_from_slice(&self.reference);
        self.prev_grad.copy_from_slice(grad);
        self.has_prev = true;
        for i in 0..self.major.len() {
            let u_new = self.trial[i];
            self.reference[i] = u_new + momentum * (u_new - self.major[i]);
            self.major[i] = u_new;
        }
        project(&mut self.reference);
        self.a = a_next;
        Ok(StepInfo {
            step_size: alpha,
            backtracks,
            cost: trial_cost,
        })
    }
}
