// SPDX-License-Identifier: Apache-2.0

//! Analytical global placement: weighted-average wirelength plus an
//! electrostatic density penalty, minimised with Nesterov's method while the
//! density weight follows a multiplicative schedule.
//!
//! Two control hooks are exposed for an external agent: the per-iteration
//! schedule multiplier (`cof`) can be overridden, and the objective gradient
//! can be rescaled per region with a [`SpatialAction`].

pub mod density;
pub mod nesterov;
pub mod schedule;
pub mod spatial;
pub mod spectral;
pub mod wirelength;

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{clamp_lower_left, hpwl, Netlist, Placement};
use crate::num::Scalar;

pub use density::{density_cost_and_grad, overflow, DensityGrid, DensityModel};
pub use nesterov::{Nesterov, NonFiniteGradient};
pub use schedule::{heuristic_cof, hpwl_progress, lambda_init, DegenerateDensityGradient};
pub use spatial::{apply_spatial_scaling, SpatialAction};
pub use wirelength::{wa_wirelength, wl_cost_and_grad};

/// Which external control, if any, drives the placer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RlMode {
    #[default]
    Off,
    DensityWeight,
    SpatialCost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlacerConfig<T> {
    /// Density bins per side.
    pub grid_dims: usize,
    pub target_overflow: T,
    /// Bin capacity as a fraction of bin area.
    pub target_density: T,
    pub max_iterations: usize,
    /// Final WA smoothing length; defaults to the mean bin pitch.
    pub wl_smooth_gamma: Option<T>,
    pub cof_min: T,
    pub cof_max: T,
    pub delta_hpwl_ref: T,
    /// Multiplier on the initial gradient-ratio density weight.
    pub lambda_init_scale: T,
    pub rl_mode: RlMode,
    pub seed: u64,
    /// Initial jitter as a fraction of the region extent.
    pub init_jitter: T,
    pub divergence_hpwl_factor: T,
    pub divergence_window: usize,
    /// Admissible range of spatial action multipliers.
    pub spatial_min: T,
    pub spatial_max: T,
    pub max_backtracks: usize,
}

impl<T: Scalar> Default for PlacerConfig<T> {
    fn default() -> Self {
        PlacerConfig {
            grid_dims: 128,
            target_overflow: T::of(0.1),
            target_density: T::one(),
            max_iterations: 1000,
            wl_smooth_gamma: None,
            cof_min: T::of(0.95),
            cof_max: T::of(1.05),
            delta_hpwl_ref: T::of(3.5e5),
            lambda_init_scale: T::one(),
            rl_mode: RlMode::Off,
            seed: 0,
            init_jitter: T::of(0.01),
            divergence_hpwl_factor: T::of(10.0),
            divergence_window: 200,
            spatial_min: T::of(0.25),
            spatial_max: T::of(4.0),
            max_backtracks: 30,
        }
    }
}

impl<T: Scalar> PlacerConfig<T> {
    /// Settings for the small synthetic designs: a 32x32 density grid.
    pub fn toy() -> Self {
        PlacerConfig {
            grid_dims: 32,
            ..Self::default()
        }
    }

    /// Toy settings with the grid scaled to the design: the smallest power
    /// of two >= 32 giving at least one bin per movable cell.
    pub fn toy_for(num_movable: usize) -> Self {
        let side = (num_movable as f64).sqrt().ceil() as usize;
        PlacerConfig {
            grid_dims: side.next_power_of_two().max(32),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PlacerError> {
        let bad = |m: &str| Err(PlacerError::Config(m.to_string()));
        if !self.grid_dims.is_power_of_two() || self.grid_dims < 2 {
            return bad("grid_dims must be a power of two >= 2");
        }
        if !(self.target_overflow > T::zero() && self.target_overflow < T::one()) {
            return bad("target_overflow must lie in (0, 1)");
        }
        if !(self.target_density > T::zero()) {
            return bad("target_density must be positive");
        }
        if !(self.cof_min > T::zero() && self.cof_min <= T::one() && T::one() <= self.cof_max) {
            return bad("need 0 < cof_min <= 1 <= cof_max");
        }
        if !(self.delta_hpwl_ref > T::zero()) {
            return bad("delta_hpwl_ref must be positive");
        }
        if let Some(g) = self.wl_smooth_gamma {
            if !(g > T::zero()) {
                return bad("wl_smooth_gamma must be positive");
            }
        }
        if !(self.spatial_min > T::zero() && self.spatial_min <= T::one() && T::one() <= self.spatial_max) {
            return bad("need 0 < spatial_min <= 1 <= spatial_max");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PlacerError {
    #[error("invalid placer config: {0}")]
    Config(String),
    #[error(transparent)]
    Degenerate(#[from] DegenerateDensityGradient),
    #[error("rl_mode {0:?} needs a controller")]
    MissingController(RlMode),
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Overflow reached the target.
    Converged,
    MaxIterations,
    NonFinite,
    HpwlBlowup,
    OverflowStalled,
}

impl Termination {
    pub fn is_divergence(self) -> bool {
        matches!(
            self,
            Termination::NonFinite | Termination::HpwlBlowup | Termination::OverflowStalled
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacerState<T> {
    /// Completed iterations.
    pub iteration: usize,
    pub lambda: T,
    pub cof: T,
    /// HPWL after every completed iteration, preceded by the initial HPWL.
    pub hpwl_history: Vec<T>,
    pub overflow: T,
    pub diverged: bool,
    pub termination: Option<Termination>,
}

impl<T: Scalar> PlacerState<T> {
    pub fn hpwl(&self) -> T {
        *self.hpwl_history.last().expect("history holds the initial HPWL")
    }

    /// `HPWL_k - HPWL_{k-1}`, zero before the first iteration.
    pub fn delta_hpwl(&self) -> T {
        match self.hpwl_history.as_slice() {
            [.., a, b] => *b - *a,
            _ => T::zero(),
        }
    }

    /// `lambda <- lambda * cof`.
    pub fn update_lambda(&mut self, cof: T) {
        self.lambda *= cof;
        self.cof = cof;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationStats<T> {
    pub iteration: usize,
    pub hpwl: T,
    pub overflow: T,
    pub lambda: T,
    pub cof: T,
    pub wall_ms: f64,
}

/// Control decision for one iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum Control<T> {
    Heuristic,
    Cof(T),
    Spatial(SpatialAction<T>),
}

/// Supplies a [`Control`] before every iteration.
pub trait Controller<T> {
    fn control(&mut self, state: &PlacerState<T>, heuristic_cof: T) -> Control<T>;
}

impl<T, F: FnMut(&PlacerState<T>, T) -> Control<T>> Controller<T> for F {
    fn control(&mut self, state: &PlacerState<T>, heuristic_cof: T) -> Control<T> {
        self(state, heuristic_cof)
    }
}

/// Movable nodes at the region center plus uniform jitter of
/// `±jitter * extent`; fixed nodes keep their input coordinates.
pub fn init_placement<T: Scalar>(
    netlist: &Netlist<T>,
    input: &Placement<T>,
    jitter: T,
    seed: u64,
) -> Placement<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = input.clone();
    let r = &netlist.region;
    let (cx, cy) = r.center();
    for (i, node) in netlist.nodes.iter().enumerate() {
        if !node.movable {
            continue;
        }
        let jx = T::of(rng.random_range(-1.0..=1.0)) * jitter * r.width;
        let jy = T::of(rng.random_range(-1.0..=1.0)) * jitter * r.height;
        out.x[i] = cx - node.width * T::half() + jx;
        out.y[i] = cy - node.height * T::half() + jy;
    }
    out.clamp_to_region(netlist);
    out
}

/// `wl_grad + lambda * density_grad`.
pub fn objective_grad<T: Scalar>(wl_grad: &[T], density_grad: &[T], lambda: T) -> Vec<T> {
    assert_eq!(wl_grad.len(), density_grad.len(), "gradient shapes differ");
    wl_grad
        .iter()
        .zip(density_grad)
        .map(|(&w, &d)| w + lambda * d)
        .collect()
}

struct Workspace<T> {
    placement: Placement<T>,
    wgx: Vec<T>,
    wgy: Vec<T>,
    dgx: Vec<T>,
    dgy: Vec<T>,
    grad: Vec<T>,
    dir: Vec<T>,
}

/// Bounds `[lo, hi]` of each optimisation variable (x block, then y block).
fn variable_bounds<T: Scalar>(netlist: &Netlist<T>, movable: &[usize]) -> (Vec<T>, Vec<T>) {
    let r = &netlist.region;
    let m = movable.len();
    let mut lo = Vec::with_capacity(2 * m);
    let mut hi = Vec::with_capacity(2 * m);
    for &i in movable {
        lo.push(r.x_lo);
        hi.push((r.x_hi() - netlist.nodes[i].width).max(r.x_lo));
    }
    for &i in movable {
        lo.push(r.y_lo);
        hi.push((r.y_hi() - netlist.nodes[i].height).max(r.y_lo));
    }
    (lo, hi)
}

fn load<T: Scalar>(placement: &mut Placement<T>, movable: &[usize], z: &[T]) {
    let m = movable.len();
    for (k, &i) in movable.iter().enumerate() {
        placement.x[i] = z[k];
        placement.y[i] = z[m + k];
    }
}

/// Steppable placer. One instance owns all of its buffers and is driven
/// one iteration at a time.
pub struct Placer<T: Scalar> {
    netlist: Arc<Netlist<T>>,
    config: PlacerConfig<T>,
    movable: Vec<usize>,
    lo: Vec<T>,
    hi: Vec<T>,
    opt: Nesterov<T>,
    density: DensityModel<T>,
    work: Workspace<T>,
    state: PlacerState<T>,
    stats: Vec<IterationStats<T>>,
    base_gamma: T,
    total_area: T,
    hpwl_reference: Option<T>,
    prev_overflow: T,
    overflow_rising: usize,
}

impl<T: Scalar> Placer<T> {
    /// Starts from `initial` (already jittered) and sets the initial density
    /// weight from the gradient magnitudes there.
    pub fn new(netlist: Arc<Netlist<T>>, config: PlacerConfig<T>, initial: Placement<T>) -> Result<Self, PlacerError> {
        config.validate()?;
        let movable = netlist.movable_ids();
        let (lo, hi) = variable_bounds(&netlist, &movable);
        let m = config.grid_dims;
        let density = DensityModel::new(netlist.region, m, m);
        let (bw, bh) = density.bin_size();
        let base_gamma = config.wl_smooth_gamma.unwrap_or((bw + bh) * T::half());
        let n = netlist.nodes.len();
        let mut z = Vec::with_capacity(2 * movable.len());
        z.extend(movable.iter().map(|&i| initial.x[i]));
        z.extend(movable.iter().map(|&i| initial.y[i]));
        let mut placer = Placer {
            total_area: netlist.total_movable_area(),
            movable,
            lo,
            hi,
            opt: Nesterov::new(z, T::one()),
            density,
            work: Workspace {
                placement: initial.clone(),
                wgx: vec![T::zero(); n],
                wgy: vec![T::zero(); n],
                dgx: vec![T::zero(); n],
                dgy: vec![T::zero(); n],
                grad: Vec::new(),
                dir: Vec::new(),
            },
            state: PlacerState {
                iteration: 0,
                lambda: T::one(),
                cof: T::one(),
                hpwl_history: vec![hpwl(&netlist, &initial)],
                overflow: T::zero(),
                diverged: false,
                termination: None,
            },
            stats: Vec::new(),
            base_gamma,
            hpwl_reference: None,
            prev_overflow: T::zero(),
            overflow_rising: 0,
            netlist,
            config,
        };
        placer.opt.max_backtracks = placer.config.max_backtracks;
        placer.state.overflow = placer.current_overflow(&initial);
        placer.prev_overflow = placer.state.overflow;
        if placer.movable.is_empty() {
            placer.state.termination = Some(Termination::Converged);
            return Ok(placer);
        }

        let gamma = placer.gamma();
        let nl = &placer.netlist;
        let w = &mut placer.work;
        wa_wirelength(nl, &initial, gamma, Some((&mut w.wgx, &mut w.wgy)));
        placer.density.cost_and_grad(nl, &initial, &mut w.dgx, &mut w.dgy);
        let pick = |a: &[T], b: &[T]| -> Vec<T> {
            placer.movable.iter().map(|&i| a[i]).chain(placer.movable.iter().map(|&i| b[i])).collect()
        };
        let wl_g = pick(&w.wgx, &w.wgy);
        let d_g = pick(&w.dgx, &w.dgy);
        placer.state.lambda = lambda_init(&wl_g, &d_g)? * placer.config.lambda_init_scale;

        // first trial step moves the fastest cell by at most a tenth of a bin
        let g = objective_grad(&wl_g, &d_g, placer.state.lambda);
        let gmax = g.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        if gmax > T::zero() {
            let step = T::of(0.1) * bw.min(bh) / gmax;
            let z = placer.opt.solution().to_vec();
            placer.opt = Nesterov::new(z, step);
            placer.opt.max_backtracks = placer.config.max_backtracks;
        }
        if placer.config.max_iterations == 0 {
            placer.state.termination = Some(Termination::MaxIterations);
        }
        Ok(placer)
    }

    pub fn netlist(&self) -> &Arc<Netlist<T>> {
        &self.netlist
    }

    pub fn config(&self) -> &PlacerConfig<T> {
        &self.config
    }

    pub fn state(&self) -> &PlacerState<T> {
        &self.state
    }

    pub fn stats(&self) -> &[IterationStats<T>] {
        &self.stats
    }

    pub fn is_done(&self) -> bool {
        self.state.termination.is_some()
    }

    /// Divergence threshold reference: the maximum HPWL of a baseline run.
    pub fn set_hpwl_reference(&mut self, max_hpwl: T) {
        self.hpwl_reference = Some(max_hpwl);
    }

    /// Current solution as a full placement.
    pub fn placement(&self) -> Placement<T> {
        let mut p = self.work.placement.clone();
        load(&mut p, &self.movable, self.opt.solution());
        p
    }

    pub fn density_grid(&mut self) -> DensityGrid<T> {
        let p = self.placement();
        self.density.grid(&self.netlist, &p)
    }

    /// Heuristic schedule multiplier for the next iteration.
    pub fn heuristic_cof(&self) -> T {
        let p = hpwl_progress(&self.state.hpwl_history, self.config.delta_hpwl_ref);
        heuristic_cof(p, self.config.cof_min, self.config.cof_max)
    }

    fn gamma(&self) -> T {
        let span = T::one() - self.config.target_overflow;
        let s = ((self.state.overflow - self.config.target_overflow) / span)
            .max(T::zero())
            .min(T::one());
        self.base_gamma * (T::one() + T::of(3.0) * s)
    }

    fn current_overflow(&self, placement: &Placement<T>) -> T {
        let m = self.config.grid_dims;
        let areas = density::cell_area(&self.netlist, placement, &self.netlist.region, m, m);
        let (bw, bh) = self.density.bin_size();
        density::overflow_of_areas(&areas, bw * bh, self.config.target_density, self.total_area)
    }

    fn finish(&mut self, t: Termination) {
        self.state.diverged = t.is_divergence();
        self.state.termination = Some(t);
    }

    /// Runs one iteration under `control`. Does nothing once the run has
    /// terminated.
    pub fn iterate(&mut self, control: &Control<T>) {
        if self.is_done() {
            return;
        }
        let started = Instant::now();
        let heuristic = self.heuristic_cof();
        let cof = match control {
            Control::Cof(c) => *c,
            _ => heuristic,
        };
        self.state.update_lambda(cof);
        let lambda = self.state.lambda;
        let gamma = self.gamma();

        let Placer {
            netlist,
            movable,
            lo,
            hi,
            opt,
            density,
            work,
            ..
        } = self;
        let nl: &Netlist<T> = netlist;
        let m = movable.len();
        load(&mut work.placement, movable, opt.reference());
        let wl = wa_wirelength(nl, &work.placement, gamma, Some((&mut work.wgx, &mut work.wgy)));
        let d = density.cost_and_grad(nl, &work.placement, &mut work.dgx, &mut work.dgy);
        let f_ref = wl + lambda * d;

        work.grad.clear();
        work.grad.extend(movable.iter().map(|&i| work.wgx[i] + lambda * work.dgx[i]));
        work.grad.extend(movable.iter().map(|&i| work.wgy[i] + lambda * work.dgy[i]));
        work.dir.clear();
        work.dir.extend_from_slice(&work.grad);
        if let Control::Spatial(action) = control {
            let r = &nl.region;
            for (k, &i) in movable.iter().enumerate() {
                let node = &nl.nodes[i];
                let cx = work.placement.x[i] + node.width * T::half() - r.x_lo;
                let cy = work.placement.y[i] + node.height * T::half() - r.y_lo;
                let w = action.value_at(cx, cy);
                work.dir[k] *= w;
                work.dir[m + k] *= w;
            }
        }

        let project = |z: &mut [T]| {
            for ((v, &l), &h) in z.iter_mut().zip(lo.iter()).zip(hi.iter()) {
                *v = clamp_lower_left(*v, l, h);
            }
        };
        let scratch = &mut work.placement;
        let result = opt.step(&work.grad, &work.dir, f_ref, project, |z| {
            load(scratch, movable, z);
            wa_wirelength(nl, scratch, gamma, None) + lambda * density.cost(nl, scratch)
        });

        let placement = self.placement();
        let h = hpwl(&self.netlist, &placement);
        let ovf = self.current_overflow(&placement);
        self.state.iteration += 1;
        self.state.hpwl_history.push(h);
        self.state.overflow = ovf;
        self.stats.push(IterationStats {
            iteration: self.state.iteration,
            hpwl: h,
            overflow: ovf,
            lambda,
            cof,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });

        if ovf > self.prev_overflow {
            self.overflow_rising += 1;
        } else {
            self.overflow_rising = 0;
        }
        self.prev_overflow = ovf;

        let finite = result.map(|s| s.cost.is_finite()).unwrap_or(false) && h.is_finite() && ovf.is_finite();
        if !finite {
            self.finish(Termination::NonFinite);
        } else if ovf <= self.config.target_overflow {
            self.finish(Termination::Converged);
        } else if self
            .hpwl_reference
            .is_some_and(|r| h > self.config.divergence_hpwl_factor * r)
        {
            self.finish(Termination::HpwlBlowup);
        } else if self.overflow_rising >= self.config.divergence_window {
            self.finish(Termination::OverflowStalled);
        } else if self.state.iteration >= self.config.max_iterations {
            self.finish(Termination::MaxIterations);
        }
    }
}

/// Result of a complete placement run.
#[derive(Debug, Clone)]
pub struct PlacementRun<T> {
    pub placement: Placement<T>,
    pub state: PlacerState<T>,
    pub stats: Vec<IterationStats<T>>,
}

/// Runs placement to termination. `fixed` supplies the terminal positions;
/// movable nodes start from [`init_placement`] with the configured seed.
/// With `rl_mode` off the controller is ignored.
pub fn run_placement<T: Scalar>(
    netlist: Arc<Netlist<T>>,
    fixed: &Placement<T>,
    config: &PlacerConfig<T>,
    controller: Option<&mut dyn Controller<T>>,
) -> Result<PlacementRun<T>, PlacerError> {
    let initial = init_placement(&netlist, fixed, config.init_jitter, config.seed);
    let mode = config.rl_mode;
    let mut controller = match (mode, controller) {
        (RlMode::Off, _) => None,
        (_, Some(c)) => Some(c),
        (m, None) => return Err(PlacerError::MissingController(m)),
    };
    let mut placer = Placer::new(netlist, config.clone(), initial)?;
    while !placer.is_done() {
        let control = match controller.as_mut() {
            None => Control::Heuristic,
            Some(c) => c.control(placer.state(), placer.heuristic_cof()),
        };
        placer.iterate(&control);
    }
    Ok(PlacementRun {
        placement: placer.placement(),
        state: placer.state.clone(),
        stats: placer.stats.clone(),
    })
}
