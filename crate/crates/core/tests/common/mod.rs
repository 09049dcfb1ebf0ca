// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use placerl_core::netlist::{Netlist, NetlistBuilder, Placement, Region};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random instance: `cells` movable cells, two fixed terminals, `nets`
/// nets of 2 to 5 pins with random offsets inside each node.
pub fn random_instance(seed: u64, cells: usize, nets: usize, side: f64) -> (Netlist<f64>, Placement<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = NetlistBuilder::new(Region::new(0.0, 0.0, side, side));
    let mut dims = Vec::new();
    for i in 0..cells {
        let (w, h) = (rng.random_range(0.5..3.0), rng.random_range(0.5..3.0));
        b.add_node(format!("c{i}"), w, h, true);
        dims.push((w, h));
    }
    for i in 0..2 {
        b.add_node(format!("t{i}"), 1.0, 1.0, false);
        dims.push((1.0, 1.0));
    }
    let n = dims.len();
    for k in 0..nets {
        let deg = rng.random_range(2..=5usize).min(n);
        let mut nodes: Vec<usize> = Vec::new();
        while nodes.len() < deg {
            let v = rng.random_range(0..n);
            if !nodes.contains(&v) {
                nodes.push(v);
            }
        }
        let pins: Vec<(usize, f64, f64)> = nodes
            .iter()
            .map(|&v| (v, rng.random_range(0.0..dims[v].0), rng.random_range(0.0..dims[v].1)))
            .collect();
        b.add_net(format!("n{k}"), &pins);
    }
    let netlist = b.build();
    let mut pl = Placement::zeros(n);
    for i in 0..n {
        pl.x[i] = rng.random_range(0.0..side - dims[i].0);
        pl.y[i] = rng.random_range(0.0..side - dims[i].1);
    }
    (netlist, pl)
}

/// Relative error with a small absolute floor.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}
