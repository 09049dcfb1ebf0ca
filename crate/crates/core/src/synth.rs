// SPDX-License-Identifier: Apache-2.0

//! Seeded synthetic designs for tests and experiments.
//!
//! Every movable cell gets a hidden target location. Nets join cells whose
//! targets are close, and anchor nets tie small groups of cells to fixed
//! terminals scattered over the region, so a good placement spreads the
//! cells back out toward their targets.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::netlist::{Netlist, NetlistBuilder, Placement, Region};
use crate::num::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub cells: usize,
    /// Fixed terminals per movable cell.
    pub terminal_ratio: f64,
    /// Movable area over region area.
    pub utilization: f64,
    /// Extra cell-to-cell nets per cell.
    pub nets_per_cell: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(cells: usize, seed: u64) -> Self {
        SynthConfig {
            cells,
            terminal_ratio: 0.25,
            utilization: 0.6,
            nets_per_cell: 0.5,
            seed,
        }
    }
}

/// Builds the design. Movable nodes are named `o{i}`, terminals `p{i}`.
/// Movable coordinates in the returned placement are zero.
pub fn generate<T: Scalar>(cfg: &SynthConfig) -> (Netlist<T>, Placement<T>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.cells.max(2);
    let widths: Vec<f64> = (0..n).map(|_| rng.random_range(1..=3) as f64).collect();
    let area: f64 = widths.iter().sum();
    let side = (area / cfg.utilization).sqrt().ceil().max(4.0);

    let mut b = NetlistBuilder::new(Region::new(T::zero(), T::zero(), T::of(side), T::of(side)))
        .row_height(T::one());
    let targets: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0.0..side), rng.random_range(0.0..side)))
        .collect();
    let cells: Vec<usize> = widths
        .iter()
        .enumerate()
        .map(|(i, &w)| b.add_node(format!("o{i}"), T::of(w), T::one(), true))
        .collect();

    // bucket cells by target so neighbours are cheap to find
    let k = ((n as f64).sqrt() / 2.0).ceil().max(1.0) as usize;
    let bucket = |(x, y): (f64, f64)| {
        let bx = ((x / side * k as f64) as usize).min(k - 1);
        let by = ((y / side * k as f64) as usize).min(k - 1);
        (bx, by)
    };
    let mut buckets = vec![Vec::new(); k * k];
    for (i, &t) in targets.iter().enumerate() {
        let (bx, by) = bucket(t);
        buckets[by * k + bx].push(i);
    }
    let near = |t: (f64, f64)| -> Vec<usize> {
        let (bx, by) = bucket(t);
        let mut out = Vec::new();
        for y in by.saturating_sub(1)..=(by + 1).min(k - 1) {
            for x in bx.saturating_sub(1)..=(bx + 1).min(k - 1) {
                out.extend_from_slice(&buckets[y * k + x]);
            }
        }
        out
    };

    let mut fixed_xy = Vec::new();
    let terminals = ((n as f64 * cfg.terminal_ratio).round() as usize).max(1);
    let mut net_id = 0;
    for t in 0..terminals {
        let (x, y) = (rng.random_range(0.0..side - 1.0), rng.random_range(0.0..side - 1.0));
        let id = b.add_node(format!("p{t}"), T::one(), T::one(), false);
        fixed_xy.push((id, x, y));
        let pool = near((x + 0.5, y + 0.5));
        // each terminal anchors several small groups of nearby cells
        for _ in 0..4 {
            if pool.is_empty() {
                break;
            }
            let degree = rng.random_range(1..=3).min(pool.len());
            let mut pins = vec![id];
            pins.extend(pool.choose_multiple(&mut rng, degree).map(|&c| cells[c]));
            b.add_centered_net(format!("n{net_id}"), &pins);
            net_id += 1;
        }
    }

    let extra = (n as f64 * cfg.nets_per_cell).round() as usize;
    for _ in 0..extra {
        let seed_cell = rng.random_range(0..n);
        let pool: Vec<usize> = near(targets[seed_cell])
            .into_iter()
            .filter(|&c| c != seed_cell)
            .collect();
        if pool.is_empty() {
            continue;
        }
        let degree = rng.random_range(1..=3).min(pool.len());
        let mut pins = vec![cells[seed_cell]];
        pins.extend(pool.choose_multiple(&mut rng, degree).map(|&c| cells[c]));
        b.add_centered_net(format!("n{net_id}"), &pins);
        net_id += 1;
    }

    let nl = b.build();
    let mut pl = Placement::zeros(nl.nodes.len());
    for (id, x, y) in fixed_xy {
        pl.x[id] = T::of(x);
        pl.y[id] = T::of(y);
    }
    (nl, pl)
}
