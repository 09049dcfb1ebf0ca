// SPDX-License-Identifier: Apache-2.0

//! Electrostatic density penalty.
//!
//! Movable cells are splat onto an `nx` x `ny` bin grid as charge. Each cell
//! is stretched to at least one bin in each direction (area preserved) and
//! shifted inside the region, so the binned charge is a piecewise-linear
//! function of the cell position. The potential solves `lap(psi) = -rho`
//! with Neumann boundaries in the cosine basis (the zero mode is dropped, so
//! a uniform charge has zero potential), and the cost is the potential
//! energy `0.5 * sum_b rho_b psi_b`. The solve is linear and symmetric in
//! `rho`, so `dCost/drho = psi` and the cell gradient follows from the exact
//! derivative of each cell's bin overlaps.

use crate::netlist::{Netlist, Placement, Region};
use crate::num::Scalar;

use super::spectral::{Basis, Transform2d};

/// Binned charge, potential and field of one placement.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid<T> {
    pub nx: usize,
    pub ny: usize,
    pub bin_w: T,
    pub bin_h: T,
    /// Smoothed movable area per bin as a fraction of bin area.
    pub occupancy: Vec<T>,
    /// Unsmoothed movable area per bin (region units squared).
    pub cell_area: Vec<T>,
    pub potential: Vec<T>,
    pub field_x: Vec<T>,
    pub field_y: Vec<T>,
}

impl<T: Scalar> DensityGrid<T> {
    pub fn bin_area(&self) -> T {
        self.bin_w * self.bin_h
    }

    /// Total smoothed area on the grid.
    pub fn total_area(&self) -> T {
        self.occupancy.iter().copied().sum::<T>() * self.bin_area()
    }
}

/// Per-axis footprint of a (possibly stretched) cell: lower edge, extent,
/// and whether the lower edge follows the cell (i.e. was not clamped).
#[derive(Clone, Copy)]
struct Span<T> {
    lo: T,
    len: T,
    free: bool,
}

fn span<T: Scalar>(lower_left: T, size: T, min_size: T, region_lo: T, region_len: T) -> Span<T> {
    let len = size.max(min_size);
    let lo = lower_left + (size - len) * T::half();
    let hi_limit = region_lo + region_len - len;
    if hi_limit < region_lo {
        return Span {
            lo: region_lo,
            len,
            free: false,
        };
    }
    if lo < region_lo {
        Span {
            lo: region_lo,
            len,
            free: false,
        }
    } else if lo > hi_limit {
        Span {
            lo: hi_limit,
            len,
            free: false,
        }
    } else {
        Span { lo, len, free: true }
    }
}

/// Visits `(bin, overlap, d overlap / d lo)` for every bin the span touches.
fn overlaps<T: Scalar>(s: Span<T>, origin: T, pitch: T, n: usize, mut f: impl FnMut(usize, T, T)) {
    let lo = s.lo - origin;
    let hi = lo + s.len;
    let first = (lo / pitch).floor().to_isize().unwrap_or(0).max(0) as usize;
    let last = ((hi / pitch).ceil().to_isize().unwrap_or(0).max(0) as usize).min(n);
    for b in first..last {
        let b0 = T::of_usize(b) * pitch;
        let b1 = b0 + pitch;
        let ov = hi.min(b1) - lo.max(b0);
        if ov <= T::zero() {
            continue;
        }
        let mut d = T::zero();
        if hi < b1 {
            d += T::one();
        }
        if lo > b0 {
            d -= T::one();
        }
        f(b, ov, d);
    }
}

/// Density cost evaluator owning the transform plans and work buffers.
pub struct DensityModel<T: Scalar> {
    region: Region<T>,
    nx: usize,
    ny: usize,
    bin_w: T,
    bin_h: T,
    wu: Vec<T>,
    wv: Vec<T>,
    transform: Transform2d<T>,
    rho: Vec<T>,
    coeffs: Vec<T>,
    psi: Vec<T>,
}

impl<T: Scalar> DensityModel<T> {
    pub fn new(region: Region<T>, nx: usize, ny: usize) -> Self {
        let wu = (0..nx)
            .map(|u| T::PI() * T::of_usize(u) / region.width)
            .collect();
        let wv = (0..ny)
            .map(|v| T::PI() * T::of_usize(v) / region.height)
            .collect();
        DensityModel {
            region,
            nx,
            ny,
            bin_w: region.width / T::of_usize(nx),
            bin_h: region.height / T::of_usize(ny),
            wu,
            wv,
            transform: Transform2d::new(nx, ny),
            rho: vec![T::zero(); nx * ny],
            coeffs: vec![T::zero(); nx * ny],
            psi: vec![T::zero(); nx * ny],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn bin_size(&self) -> (T, T) {
        (self.bin_w, self.bin_h)
    }

    fn spans(&self, node: &crate::netlist::Node<T>, x: T, y: T) -> (Span<T>, Span<T>, T) {
        let r = &self.region;
        let sx = span(x, node.width, self.bin_w, r.x_lo, r.width);
        let sy = span(y, node.height, self.bin_h, r.y_lo, r.height);
        let scale = node.width * node.height / (sx.len * sy.len);
        (sx, sy, scale)
    }

    fn splat(&mut self, netlist: &Netlist<T>, placement: &Placement<T>) {
        self.rho.fill(T::zero());
        let inv_area = T::one() / (self.bin_w * self.bin_h);
        let (nx, ny) = (self.nx, self.ny);
        let (ox, oy) = (self.region.x_lo, self.region.y_lo);
        let mut xs: Vec<(usize, T)> = Vec::new();
        for (i, node) in netlist.nodes.iter().enumerate() {
            if !node.movable {
                continue;
            }
            let (sx, sy, scale) = self.spans(node, placement.x[i], placement.y[i]);
            xs.clear();
            overlaps(sx, ox, self.bin_w, nx, |b, ov, _| xs.push((b, ov)));
            let w = scale * inv_area;
            let rho = &mut self.rho;
            overlaps(sy, oy, self.bin_h, ny, |bj, ovy, _| {
                for &(bi, ovx) in &xs {
                    rho[bj * nx + bi] += w * ovx * ovy;
                }
            });
        }
    }

    /// Solves for `psi` from `rho`, leaving DCT coefficients scaled for
    /// synthesis in `coeffs`.
    fn solve(&mut self) {
        let (nx, ny) = (self.nx, self.ny);
        self.transform.dct2(&self.rho, &mut self.coeffs);
        let norm = |k: usize, n: usize| {
            if k == 0 {
                T::one() / T::of_usize(n)
            } else {
                T::two() / T::of_usize(n)
            }
        };
        for v in 0..ny {
            for u in 0..nx {
                let idx = v * nx + u;
                let w2 = self.wu[u] * self.wu[u] + self.wv[v] * self.wv[v];
                self.coeffs[idx] = if u == 0 && v == 0 {
                    T::zero()
                } else {
                    self.coeffs[idx] * norm(u, nx) * norm(v, ny) / w2
                };
            }
        }
        self.transform
            .synth(&self.coeffs, Basis::Cos, Basis::Cos, &mut self.psi);
    }

    fn energy(&self) -> T {
        T::half()
            * self
                .rho
                .iter()
                .zip(&self.psi)
                .map(|(&r, &p)| r * p)
                .sum::<T>()
    }

    /// Density cost only.
    pub fn cost(&mut self, netlist: &Netlist<T>, placement: &Placement<T>) -> T {
        self.splat(netlist, placement);
        self.solve();
        self.energy()
    }

    /// Density cost; writes the gradient with respect to every node's
    /// lower-left coordinate (zero for fixed nodes) into the buffers.
    pub fn cost_and_grad(
        &mut self,
        netlist: &Netlist<T>,
        placement: &Placement<T>,
        grad_x: &mut [T],
        grad_y: &mut [T],
    ) -> T {
        self.splat(netlist, placement);
        self.solve();
        grad_x.fill(T::zero());
        grad_y.fill(T::zero());
        let inv_area = T::one() / (self.bin_w * self.bin_h);
        let (nx, ny) = (self.nx, self.ny);
        let (ox, oy) = (self.region.x_lo, self.region.y_lo);
        let mut xs: Vec<(usize, T, T)> = Vec::new();
        for (i, node) in netlist.nodes.iter().enumerate() {
            if !node.movable {
                continue;
            }
            let (sx, sy, scale) = self.spans(node, placement.x[i], placement.y[i]);
            xs.clear();
            overlaps(sx, ox, self.bin_w, nx, |b, ov, d| xs.push((b, ov, d)));
            let (mut gx, mut gy) = (T::zero(), T::zero());
            let psi = &self.psi;
            overlaps(sy, oy, self.bin_h, ny, |bj, ovy, dy| {
                for &(bi, ovx, dx) in &xs {
                    let p = psi[bj * nx + bi];
                    gx += p * dx * ovy;
                    gy += p * ovx * dy;
                }
            });
            let w = scale * inv_area;
            grad_x[i] = if sx.free { gx * w } else { T::zero() };
            grad_y[i] = if sy.free { gy * w } else { T::zero() };
        }
        self.energy()
    }

    /// Full grid snapshot: charge, potential, field and raw cell area.
    pub fn grid(&mut self, netlist: &Netlist<T>, placement: &Placement<T>) -> DensityGrid<T> {
        self.splat(netlist, placement);
        self.solve();
        let n = self.nx * self.ny;
        let (nx, ny) = (self.nx, self.ny);
        let mut fx_coeffs = vec![T::zero(); n];
        let mut fy_coeffs = vec![T::zero(); n];
        for v in 0..ny {
            for u in 0..nx {
                fx_coeffs[v * nx + u] = self.coeffs[v * nx + u] * self.wu[u];
                fy_coeffs[v * nx + u] = self.coeffs[v * nx + u] * self.wv[v];
            }
        }
        let mut field_x = vec![T::zero(); n];
        let mut field_y = vec![T::zero(); n];
        self.transform
            .synth(&fx_coeffs, Basis::Sin, Basis::Cos, &mut field_x);
        self.transform
            .synth(&fy_coeffs, Basis::Cos, Basis::Sin, &mut field_y);
        DensityGrid {
            nx,
            ny,
            bin_w: self.bin_w,
            bin_h: self.bin_h,
            occupancy: self.rho.clone(),
            cell_area: cell_area(netlist, placement, &self.region, nx, ny),
            potential: self.psi.clone(),
            field_x,
            field_y,
        }
    }
}

/// Unsmoothed movable area per bin, clipped to the region.
pub fn cell_area<T: Scalar>(
    netlist: &Netlist<T>,
    placement: &Placement<T>,
    region: &Region<T>,
    nx: usize,
    ny: usize,
) -> Vec<T> {
    let bin_w = region.width / T::of_usize(nx);
    let bin_h = region.height / T::of_usize(ny);
    let mut out = vec![T::zero(); nx * ny];
    let mut xs: Vec<(usize, T)> = Vec::new();
    for (i, node) in netlist.nodes.iter().enumerate() {
        if !node.movable {
            continue;
        }
        let sx = Span {
            lo: placement.x[i],
            len: node.width,
            free: true,
        };
        let sy = Span {
            lo: placement.y[i],
            len: node.height,
            free: true,
        };
        xs.clear();
        overlaps(sx, region.x_lo, bin_w, nx, |b, ov, _| xs.push((b, ov)));
        overlaps(sy, region.y_lo, bin_h, ny, |bj, ovy, _| {
            for &(bi, ovx) in &xs {
                out[bj * nx + bi] += ovx * ovy;
            }
        });
    }
    out
}

/// Overflow: movable area above `target_density` times bin capacity,
/// summed over bins, as a fraction of total movable area. Zero when there
/// is no movable area.
pub fn overflow<T: Scalar>(grid: &DensityGrid<T>, target_density: T, total_movable_area: T) -> T {
    overflow_of_areas(&grid.cell_area, grid.bin_area(), target_density, total_movable_area)
}

pub fn overflow_of_areas<T: Scalar>(areas: &[T], bin_area: T, target_density: T, total: T) -> T {
    if total <= T::zero() {
        return T::zero();
    }
    let cap = target_density * bin_area;
    areas
        .iter()
        .map(|&a| (a - cap).max(T::zero()))
        .sum::<T>()
        / total
}

/// One-shot density evaluation at `grid_dims` resolution:
/// `(cost, grad_x, grad_y, grid)`.
pub fn density_cost_and_grad<T: Scalar>(
    netlist: &Netlist<T>,
    placement: &Placement<T>,
    grid_dims: (usize, usize),
) -> (T, Vec<T>, Vec<T>, DensityGrid<T>) {
    let mut model = DensityModel::new(netlist.region, grid_dims.0, grid_dims.1);
    let n = netlist.nodes.len();
    let (mut gx, mut gy) = (vec![T::zero(); n], vec![T::zero(); n]);
    let cost = model.cost_and_grad(netlist, placement, &mut gx, &mut gy);
    let grid = model.grid(netlist, placement);
    (cost, gx, gy, grid)
}
