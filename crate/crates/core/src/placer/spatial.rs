// SPDX-License-Identifier: Apache-2.0

//! Per-region gradient scaling: every cell's objective gradient is
//! multiplied by the action value of the action-grid bin holding the cell
//! center.

use crate::netlist::{Netlist, Placement, Region};
use crate::num::Scalar;

/// Multipliers on an `nx` x `ny` grid laid over the region; row-major,
/// `values[j * nx + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialAction<T> {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<T>,
    pub pitch_x: T,
    pub pitch_y: T,
}

impl<T: Scalar> SpatialAction<T> {
    /// Grid exactly covering `region`.
    pub fn new(region: &Region<T>, nx: usize, ny: usize, values: Vec<T>) -> Self {
        assert_eq!(values.len(), nx * ny, "action grid size");
        SpatialAction {
            nx,
            ny,
            values,
            pitch_x: region.width / T::of_usize(nx),
            pitch_y: region.height / T::of_usize(ny),
        }
    }

    pub fn uniform(region: &Region<T>, nx: usize, ny: usize, value: T) -> Self {
        Self::new(region, nx, ny, vec![value; nx * ny])
    }

    /// `(floor(x / pitch_x), floor(y / pitch_y))` for region-relative
    /// coordinates, clamped into the grid.
    pub fn bin_of(&self, x: T, y: T) -> (usize, usize) {
        (
            clamp_index((x / self.pitch_x).floor(), self.nx),
            clamp_index((y / self.pitch_y).floor(), self.ny),
        )
    }

    pub fn value_at(&self, x: T, y: T) -> T {
        let (i, j) = self.bin_of(x, y);
        self.values[j * self.nx + i]
    }

    /// Clamps every value into `[lo, hi]`; returns how many changed.
    pub fn clamp_values(&mut self, lo: T, hi: T) -> usize {
        let mut n = 0;
        for v in &mut self.values {
            let c = if v.is_nan() { T::one() } else { v.max(lo).min(hi) };
            if c != *v {
                n += 1;
                *v = c;
            }
        }
        n
    }
}

fn clamp_index<T: Scalar>(f: T, n: usize) -> usize {
    if !(f > T::zero()) {
        0
    } else {
        f.to_usize().unwrap_or(usize::MAX).min(n - 1)
    }
}

/// Scales both gradient components of every node by the action value at
/// the node's center.
pub fn apply_spatial_scaling<T: Scalar>(
    grad_x: &mut [T],
    grad_y: &mut [T],
    netlist: &Netlist<T>,
    placement: &Placement<T>,
    action: &SpatialAction<T>,
) {
    let r = &netlist.region;
    for (i, node) in netlist.nodes.iter().enumerate() {
        let cx = placement.x[i] + node.width * T::half() - r.x_lo;
        let cy = placement.y[i] + node.height * T::half() - r.y_lo;
        let w = action.value_at(cx, cy);
        grad_x[i] *= w;
        grad_y[i] *= w;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::NetlistBuilder;

    #[test]
    fn floor_binning() {
        let region = Region::new(0.0, 0.0, 16.0, 16.0);
        let a = SpatialAction::uniform(&region, 4, 4, 1.0f64);
        assert_eq!(a.pitch_x, 4.0);
        assert_eq!(a.bin_of(7.3, 2.1), (1, 0));
        assert_eq!(a.bin_of(4.0, 8.0), (1, 2), "boundary uses floor");
        assert_eq!(a.bin_of(-1.0, 99.0), (0, 3), "outside clamps");
    }

    fn setup() -> (Netlist<f64>, Placement<f64>) {
        let mut b = NetlistBuilder::new(Region::new(10.0, 10.0, 8.0, 8.0));
        b.add_node("a", 1.0, 1.0, true);
        b.add_node("b", 1.0, 1.0, true);
        let pl = Placement {
            x: vec![10.5, 15.0],
            y: vec![10.5, 15.0],
        };
        (b.build(), pl)
    }

    #[test]
    fn scaling_identity_zero_and_lookup() {
        let (nl, pl) = setup();
        let g0 = (vec![1.5, -2.0], vec![0.25, 4.0]);

        let (mut gx, mut gy) = g0.clone();
        apply_spatial_scaling(&mut gx, &mut gy, &nl, &pl, &SpatialAction::uniform(&nl.region, 2, 2, 1.0));
        assert_eq!((gx.clone(), gy.clone()), g0);

        apply_spatial_scaling(&mut gx, &mut gy, &nl, &pl, &SpatialAction::uniform(&nl.region, 2, 2, 0.0));
        assert!(gx.iter().chain(&gy).all(|g| *g == 0.0));

        let (mut gx, mut gy) = g0.clone();
        let a = SpatialAction::new(&nl.region, 2, 2, vec![2.0, 3.0, 5.0, 7.0]);
        apply_spatial_scaling(&mut gx, &mut gy, &nl, &pl, &a);
        // node a center (1, 1) -> bin (0, 0); node b center (5.5, 5.5) -> bin (1, 1)
        assert_eq!(gx, vec![3.0, -14.0]);
        assert_eq!(gy, vec![0.5, 28.0]);
    }
}
