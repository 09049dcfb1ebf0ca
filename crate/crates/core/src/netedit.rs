// SPDX-License-Identifier: Apache-2.0

//! Random netlist edits for robustness experiments: add a cell wired into
//! its surroundings, add a net around a cell, or remove a cell.
//!
//! Neighbourhoods are taken over the collapsed graph in which two nodes are
//! adjacent iff they share a net.

use std::collections::{BTreeSet, HashSet};

use rand::seq::{IndexedRandom, IteratorRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{Net, Netlist, Node, Pin, Placement};
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    AddNode,
    AddNet,
    RemoveNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditConfig {
    pub num_edits: usize,
    pub seed: u64,
    /// Probabilities of AddNode, AddNet, RemoveNode.
    pub weights: [f64; 3],
}

impl EditConfig {
    pub fn new(num_edits: usize, seed: u64) -> Self {
        EditConfig {
            num_edits,
            seed,
            weights: [1.0 / 3.0; 3],
        }
    }
}

/// One applied edit. Nodes and nets are named since indices shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditRecord {
    pub kind: EditKind,
    pub node: String,
    pub nets_added: Vec<String>,
    pub nets_removed: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EditError {
    #[error("edit weights must be nonnegative and sum to 1")]
    BadWeights,
    #[error("netlist exhausted: no movable nodes left to remove")]
    Exhausted,
    #[error("cannot add a net: netlist has no other node")]
    NoPeers,
}

/// Nodes within three hops of `node`, excluding `node` itself.
pub fn three_hop_neighborhood<T: Scalar>(netlist: &Netlist<T>, node: usize) -> BTreeSet<usize> {
    k_hop(netlist, &netlist.node_nets(), node, 3)
}

fn k_hop<T>(netlist: &Netlist<T>, node_nets: &[Vec<usize>], node: usize, hops: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([node]);
    let mut frontier = vec![node];
    for _ in 0..hops {
        let mut next = Vec::new();
        for &u in &frontier {
            for &net in &node_nets[u] {
                for &p in &netlist.nets[net].pins {
                    let v = netlist.pins[p].node;
                    if seen.insert(v) {
                        next.push(v);
                    }
                }
            }
        }
        frontier = next;
    }
    seen.remove(&node);
    seen
}

struct Names(HashSet<String>);

impl Names {
    fn fresh(&mut self, stem: &str) -> String {
        let mut name = stem.to_string();
        let mut k = 0;
        while self.0.contains(&name) {
            k += 1;
            name = format!("{stem}_{k}");
        }
        self.0.insert(name.clone());
        name
    }
}

fn push_net<T: Scalar>(netlist: &mut Netlist<T>, name: String, nodes: &[usize]) {
    let net = netlist.nets.len();
    let mut pins = Vec::with_capacity(nodes.len());
    for &n in nodes {
        let node = &netlist.nodes[n];
        netlist.pins.push(Pin {
            node: n,
            net,
            offset_x: node.width * T::half(),
            offset_y: node.height * T::half(),
        });
        pins.push(netlist.pins.len() - 1);
    }
    netlist.nets.push(Net { name, pins });
}

/// Adds one net on `node` plus `P` in `1..=4` distinct nodes from its
/// three-hop neighbourhood. A smaller neighbourhood is used whole; an empty
/// one falls back to uniformly drawn nodes from the whole netlist.
/// Returns the new net's name.
pub fn add_net<T: Scalar>(netlist: &mut Netlist<T>, node: usize, rng: &mut impl Rng) -> Result<String, EditError> {
    let mut names = Names(netlist.nets.iter().map(|n| n.name.clone()).collect());
    add_net_named(netlist, node, rng, &mut names, "edit_net")
}

fn add_net_named<T: Scalar>(
    netlist: &mut Netlist<T>,
    node: usize,
    rng: &mut impl Rng,
    names: &mut Names,
    stem: &str,
) -> Result<String, EditError> {
    let p = rng.random_range(1..=4usize);
    let hood: Vec<usize> = three_hop_neighborhood(netlist, node).into_iter().collect();
    let mut peers: Vec<usize> = if hood.is_empty() {
        let n = netlist.nodes.len();
        if n < 2 {
            return Err(EditError::NoPeers);
        }
        (0..n).filter(|&v| v != node).choose_multiple(rng, p)
    } else {
        hood.choose_multiple(rng, p.min(hood.len())).copied().collect()
    };
    peers.sort_unstable();
    let mut nodes = vec![node];
    nodes.extend(peers);
    let name = names.fresh(stem);
    push_net(netlist, name.clone(), &nodes);
    Ok(name)
}

/// Applies `num_edits` random edits. The result passes
/// [`Netlist::validate`] when the input does.
pub fn modify_netlist<T: Scalar>(
    netlist: &Netlist<T>,
    cfg: &EditConfig,
) -> Result<(Netlist<T>, Vec<EditRecord>), EditError> {
    let w = cfg.weights;
    let total: f64 = w.iter().sum();
    if w.iter().any(|v| !(*v >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(EditError::BadWeights);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut nl = netlist.clone();
    let mut node_names = Names(nl.nodes.iter().map(|n| n.name.clone()).collect());
    let mut net_names = Names(nl.nets.iter().map(|n| n.name.clone()).collect());
    let mut log = Vec::with_capacity(cfg.num_edits);

    for k in 0..cfg.num_edits {
        let r: f64 = rng.random_range(0.0..1.0);
        let kind = if r < w[0] {
            EditKind::AddNode
        } else if r < w[0] + w[1] {
            EditKind::AddNet
        } else {
            EditKind::RemoveNode
        };
        let record = match kind {
            EditKind::AddNode => {
                let widths: Vec<T> = nl.nodes.iter().filter(|n| n.movable).map(|n| n.width).collect();
                let width = widths.choose(&mut rng).copied().unwrap_or(nl.row_height);
                let name = node_names.fresh(&format!("edit_n{k}"));
                nl.nodes.push(Node {
                    name: name.clone(),
                    width,
                    height: nl.row_height,
                    movable: true,
                });
                let id = nl.nodes.len() - 1;
                let count = rng.random_range(2..=5usize);
                let mut added = Vec::with_capacity(count);
                for _ in 0..count {
                    added.push(add_net_named(&mut nl, id, &mut rng, &mut net_names, &format!("edit_net{k}"))?);
                }
                EditRecord {
                    kind,
                    node: name,
                    nets_added: added,
                    nets_removed: Vec::new(),
                }
            }
            EditKind::AddNet => {
                if nl.nodes.is_empty() {
                    return Err(EditError::NoPeers);
                }
                let id = rng.random_range(0..nl.nodes.len());
                let net = add_net_named(&mut nl, id, &mut rng, &mut net_names, &format!("edit_net{k}"))?;
                EditRecord {
                    kind,
                    node: nl.nodes[id].name.clone(),
                    nets_added: vec![net],
                    nets_removed: Vec::new(),
                }
            }
            EditKind::RemoveNode => {
                let movable = nl.movable_ids();
                let &id = movable.choose(&mut rng).ok_or(EditError::Exhausted)?;
                let name = nl.nodes[id].name.clone();
                nl.retain(|n| n != id, |_| true, |_| true);
                let before: Vec<String> = nl.nets.iter().filter(|n| n.pins.len() < 2).map(|n| n.name.clone()).collect();
                nl.remove_single_pin_nets();
                EditRecord {
                    kind,
                    node: name,
                    nets_added: Vec::new(),
                    nets_removed: before,
                }
            }
        };
        log.push(record);
    }
    Ok((nl, log))
}

/// Carries coordinates over by node name. Nodes new to `edited` start at
/// the region center.
pub fn remap_placement<T: Scalar>(
    original: &Netlist<T>,
    placement: &Placement<T>,
    edited: &Netlist<T>,
) -> Placement<T> {
    let index = original.node_index();
    let (cx, cy) = edited.region.center();
    let mut out = Placement::zeros(edited.nodes.len());
    for (i, node) in edited.nodes.iter().enumerate() {
        match index.get(node.name.as_str()) {
            Some(&j) => {
                out.x[i] = placement.x[j];
                out.y[i] = placement.y[j];
            }
            None => {
                out.x[i] = cx - node.width * T::half();
                out.y[i] = cy - node.height * T::half();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{NetlistBuilder, Region};

    fn chain(n: usize) -> Netlist<f64> {
        let mut b = NetlistBuilder::new(Region::new(0.0, 0.0, 10.0, 10.0));
        let ids: Vec<_> = (0..n).map(|i| b.add_node(format!("c{i}"), 1.0, 1.0, true)).collect();
        for w in ids.windows(2) {
            b.add_centered_net(format!("e{}", w[0]), w);
        }
        b.build()
    }

    #[test]
    fn three_hops_on_chain_clique_and_isolated() {
        let nl = chain(5);
        assert_eq!(three_hop_neighborhood(&nl, 0), BTreeSet::from([1, 2, 3]));
        assert_eq!(three_hop_neighborhood(&nl, 2), BTreeSet::from([0, 1, 3, 4]));

        let mut b = NetlistBuilder::new(Region::new(0.0, 0.0, 10.0, 10.0));
        let ids: Vec<_> = (0..5).map(|i| b.add_node(format!("k{i}"), 1.0, 1.0, true)).collect();
        b.add_centered_net("q", &ids[..4]);
        let nl = b.build();
        assert_eq!(three_hop_neighborhood(&nl, 1), BTreeSet::from([0, 2, 3]));
        assert!(three_hop_neighborhood(&nl, 4).is_empty());
    }

    #[test]
    fn add_net_on_pair_has_two_pins() {
        let mut nl = chain(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            add_net(&mut nl, 0, &mut rng).unwrap();
            assert_eq!(nl.nets.last().unwrap().pins.len(), 2);
        }
        assert!(nl.validate().is_ok());
    }

    #[test]
    fn add_net_on_isolated_node_falls_back() {
        let mut b = NetlistBuilder::new(Region::new(0.0, 0.0, 10.0, 10.0));
        for i in 0..6 {
            b.add_node(format!("c{i}"), 1.0, 1.0, true);
        }
        let mut nl = b.build();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        add_net(&mut nl, 3, &mut rng).unwrap();
        let net = &nl.nets[0];
        assert!(net.pins.len() >= 2);
        assert_eq!(nl.pins[net.pins[0]].node, 3);
    }

    #[test]
    fn remove_node_drops_its_two_pin_net() {
        let nl = chain(2);
        let cfg = EditConfig {
            weights: [0.0, 0.0, 1.0],
            ..EditConfig::new(1, 0)
        };
        let (out, log) = modify_netlist(&nl, &cfg).unwrap();
        assert_eq!(out.nodes.len(), 1);
        assert!(out.nets.is_empty() && out.pins.is_empty());
        assert_eq!(log[0].nets_removed, vec!["e0".to_string()]);
    }

    #[test]
    fn exhaustion_is_an_error() {
        let nl = chain(2);
        let cfg = EditConfig {
            weights: [0.0, 0.0, 1.0],
            ..EditConfig::new(3, 0)
        };
        assert_eq!(modify_netlist(&nl, &cfg).unwrap_err(), EditError::Exhausted);
    }

    #[test]
    fn zero_edits_is_identity() {
        let nl = chain(4);
        let (out, log) = modify_netlist(&nl, &EditConfig::new(0, 9)).unwrap();
        assert_eq!(out, nl);
        assert!(log.is_empty());
    }

    #[test]
    fn add_node_has_two_to_five_nets() {
        let nl = chain(30);
        let mut seen = BTreeSet::new();
        for seed in 0..40 {
            let cfg = EditConfig {
                weights: [1.0, 0.0, 0.0],
                ..EditConfig::new(1, seed)
            };
            let (out, log) = modify_netlist(&nl, &cfg).unwrap();
            let d = out.node_nets()[out.node_index()[log[0].node.as_str()]].len();
            assert!((2..=5).contains(&d), "{d}");
            assert_eq!(log[0].nets_added.len(), d);
            assert!(out.validate().is_ok());
            seen.insert(d);
        }
        assert_eq!(seen.len(), 4, "all degrees 2..=5 occur");
    }
}
