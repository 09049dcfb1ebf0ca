// SPDX-License-Identifier: Apache-2.0

//! Netlist data model and exact half-perimeter wirelength.
//!
//! Node coordinates in a [`Placement`] are lower-left corners, as in
//! Bookshelf `.pl` files. Pin offsets are stored relative to the node's
//! lower-left corner; the Bookshelf reader converts from the center-relative
//! offsets used on disk.

pub mod bookshelf;

use std::collections::HashMap;
use std::fmt;

use crate::num::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Node<T> {
    pub name: String,
    pub width: T,
    pub height: T,
    pub movable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pin<T> {
    pub node: usize,
    pub net: usize,
    pub offset_x: T,
    pub offset_y: T,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Net {
    pub name: String,
    pub pins: Vec<usize>,
}

/// Axis-aligned placement region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region<T> {
    pub x_lo: T,
    pub y_lo: T,
    pub width: T,
    pub height: T,
}

impl<T: Scalar> Region<T> {
    pub fn new(x_lo: T, y_lo: T, width: T, height: T) -> Self {
        Region {
            x_lo,
            y_lo,
            width,
            height,
        }
    }

    pub fn x_hi(&self) -> T {
        self.x_lo + self.width
    }

    pub fn y_hi(&self) -> T {
        self.y_lo + self.height
    }

    pub fn area(&self) -> T {
        self.width * self.height
    }

    pub fn center(&self) -> (T, T) {
        (
            self.x_lo + self.width * T::half(),
            self.y_lo + self.height * T::half(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Netlist<T> {
    pub nodes: Vec<Node<T>>,
    pub pins: Vec<Pin<T>>,
    pub nets: Vec<Net>,
    pub region: Region<T>,
    /// Standard-cell row height, used when synthesising new cells.
    pub row_height: T,
}

/// Per-node lower-left coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Scalar> Placement<T> {
    pub fn zeros(n: usize) -> Self {
        Placement {
            x: vec![T::zero(); n],
            y: vec![T::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Moves every movable node fully inside the region (or onto its
    /// lower-left edge when the node is wider than the region).
    pub fn clamp_to_region(&mut self, netlist: &Netlist<T>) {
        let r = &netlist.region;
        for (i, node) in netlist.nodes.iter().enumerate() {
            if !node.movable {
                continue;
            }
            self.x[i] = clamp_lower_left(self.x[i], r.x_lo, r.x_hi() - node.width);
            self.y[i] = clamp_lower_left(self.y[i], r.y_lo, r.y_hi() - node.height);
        }
    }
}

#[inline]
pub(crate) fn clamp_lower_left<T: Scalar>(v: T, lo: T, hi: T) -> T {
    if hi <= lo {
        lo
    } else {
        v.max(lo).min(hi)
    }
}

/// A broken netlist invariant, as reported by [`Netlist::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveRegion,
    NonPositiveSize { node: usize },
    DuplicateNodeName { name: String },
    DanglingPin { pin: usize, node: usize },
    PinNetOutOfRange { pin: usize, net: usize },
    UnknownPin { net: usize, pin: usize },
    PinListedTwice { pin: usize },
    PinNetMismatch { pin: usize, net: usize },
    OrphanPin { pin: usize },
    SinglePinNet { net: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveRegion => write!(f, "non-positive region"),
            Violation::NonPositiveSize { node } => write!(f, "non-positive size on node {node}"),
            Violation::DuplicateNodeName { name } => write!(f, "duplicate node name {name}"),
            Violation::DanglingPin { pin, node } => {
                write!(f, "dangling pin {pin}: node {node} does not exist")
            }
            Violation::PinNetOutOfRange { pin, net } => {
                write!(f, "dangling pin {pin}: net {net} does not exist")
            }
            Violation::UnknownPin { net, pin } => {
                write!(f, "dangling pin reference {pin} in net {net}")
            }
            Violation::PinListedTwice { pin } => write!(f, "pin {pin} listed by more than one net"),
            Violation::PinNetMismatch { pin, net } => {
                write!(f, "pin {pin} listed by net {net} but points elsewhere")
            }
            Violation::OrphanPin { pin } => write!(f, "pin {pin} not listed by its net"),
            Violation::SinglePinNet { net } => write!(f, "single-pin net {net}"),
        }
    }
}

impl<T: Scalar> Netlist<T> {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_movable(&self) -> usize {
        self.nodes.iter().filter(|n| n.movable).count()
    }

    pub fn movable_ids(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].movable)
            .collect()
    }

    pub fn total_movable_area(&self) -> T {
        self.nodes
            .iter()
            .filter(|n| n.movable)
            .map(|n| n.width * n.height)
            .sum()
    }

    /// Nets incident on each node, in pin order.
    pub fn node_nets(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for pin in &self.pins {
            if let Some(list) = out.get_mut(pin.node) {
                if !list.contains(&pin.net) {
                    list.push(pin.net);
                }
            }
        }
        out
    }

    pub fn node_index(&self) -> HashMap<&str, usize> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.as_str(), i))
            .collect()
    }

    #[inline]
    pub fn pin_position(&self, pin: usize, placement: &Placement<T>) -> (T, T) {
        let p = &self.pins[pin];
        (
            placement.x[p.node] + p.offset_x,
            placement.y[p.node] + p.offset_y,
        )
    }

    /// Checks every structural invariant and lists all violations.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if !(self.region.width > T::zero() && self.region.height > T::zero()) {
            out.push(Violation::NonPositiveRegion);
        }
        let mut seen = HashMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if !(n.width > T::zero() && n.height > T::zero()) {
                out.push(Violation::NonPositiveSize { node: i });
            }
            if seen.insert(n.name.as_str(), i).is_some() {
                out.push(Violation::DuplicateNodeName {
                    name: n.name.clone(),
                });
            }
        }
        let mut owner: Vec<Option<usize>> = vec![None; self.pins.len()];
        for (ni, net) in self.nets.iter().enumerate() {
            if net.pins.len() < 2 {
                out.push(Violation::SinglePinNet { net: ni });
            }
            for &p in &net.pins {
                match owner.get_mut(p) {
                    None => out.push(Violation::UnknownPin { net: ni, pin: p }),
                    Some(slot @ None) => *slot = Some(ni),
                    Some(Some(_)) => out.push(Violation::PinListedTwice { pin: p }),
                }
            }
        }
        for (pi, pin) in self.pins.iter().enumerate() {
            if pin.node >= self.nodes.len() {
                out.push(Violation::DanglingPin {
                    pin: pi,
                    node: pin.node,
                });
            }
            if pin.net >= self.nets.len() {
                out.push(Violation::PinNetOutOfRange { pin: pi, net: pin.net });
                continue;
            }
            match owner[pi] {
                None => out.push(Violation::OrphanPin { pin: pi }),
                Some(n) if n != pin.net => out.push(Violation::PinNetMismatch { pin: pi, net: n }),
                _ => {}
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Drops nets with fewer than two pins (and their pins), renumbering
    /// pins and nets. Returns the number of nets removed.
    pub fn remove_single_pin_nets(&mut self) -> usize {
        let keep: Vec<bool> = self.nets.iter().map(|n| n.pins.len() >= 2).collect();
        let removed = keep.iter().filter(|k| !**k).count();
        if removed == 0 {
            return 0;
        }
        let dead_pins: Vec<bool> = {
            let mut d = vec![false; self.pins.len()];
            for (ni, net) in self.nets.iter().enumerate() {
                if !keep[ni] {
                    for &p in &net.pins {
                        d[p] = true;
                    }
                }
            }
            d
        };
        self.retain(|_| true, |p| !dead_pins[p], |n| keep[n]);
        removed
    }

    /// Keeps nodes, pins and nets selected by the predicates and renumbers
    /// all cross references. Pins on dropped nodes or nets are dropped too.
    pub(crate) fn retain(
        &mut self,
        keep_node: impl Fn(usize) -> bool,
        keep_pin: impl Fn(usize) -> bool,
        keep_net: impl Fn(usize) -> bool,
    ) {
        let node_map = remap(self.nodes.len(), &keep_node);
        let net_map = remap(self.nets.len(), &keep_net);
        let pin_map = remap(self.pins.len(), |p| {
            let pin = &self.pins[p];
            keep_pin(p) && node_map[pin.node].is_some() && net_map[pin.net].is_some()
        });

        let nodes = std::mem::take(&mut self.nodes)
            .into_iter()
            .enumerate()
            .filter(|(i, _)| node_map[*i].is_some())
            .map(|(_, n)| n)
            .collect();
        let pins = std::mem::take(&mut self.pins)
            .into_iter()
            .enumerate()
            .filter(|(i, _)| pin_map[*i].is_some())
            .map(|(_, mut p)| {
                p.node = node_map[p.node].unwrap();
                p.net = net_map[p.net].unwrap();
                p
            })
            .collect();
        let nets = std::mem::take(&mut self.nets)
            .into_iter()
            .enumerate()
            .filter(|(i, _)| net_map[*i].is_some())
            .map(|(_, mut n)| {
                n.pins = n.pins.iter().filter_map(|&p| pin_map[p]).collect();
                n
            })
            .collect();
        self.nodes = nodes;
        self.pins = pins;
        self.nets = nets;
    }
}

fn remap(len: usize, keep: impl Fn(usize) -> bool) -> Vec<Option<usize>> {
    let mut next = 0;
    (0..len)
        .map(|i| {
            if keep(i) {
                next += 1;
                Some(next - 1)
            } else {
                None
            }
        })
        .collect()
}

/// Exact HPWL of one net.
pub fn net_hpwl<T: Scalar>(netlist: &Netlist<T>, net: usize, placement: &Placement<T>) -> T {
    let pins = &netlist.nets[net].pins;
    if pins.is_empty() {
        return T::zero();
    }
    let (mut x_lo, mut y_lo) = (T::infinity(), T::infinity());
    let (mut x_hi, mut y_hi) = (T::neg_infinity(), T::neg_infinity());
    for &p in pins {
        let (x, y) = netlist.pin_position(p, placement);
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    (x_hi - x_lo) + (y_hi - y_lo)
}

/// Bounding box `(x_lo, y_lo, x_hi, y_hi)` of a net's pins.
pub fn net_bbox<T: Scalar>(
    netlist: &Netlist<T>,
    net: usize,
    placement: &Placement<T>,
) -> Option<(T, T, T, T)> {
    let pins = &netlist.nets[net].pins;
    let mut it = pins.iter().map(|&p| netlist.pin_position(p, placement));
    let (x0, y0) = it.next()?;
    Some(it.fold((x0, y0, x0, y0), |(a, b, c, d), (x, y)| {
        (a.min(x), b.min(y), c.max(x), d.max(y))
    }))
}

/// Sum over nets of the pin bounding-box half perimeter.
pub fn hpwl<T: Scalar>(netlist: &Netlist<T>, placement: &Placement<T>) -> T {
    (0..netlist.nets.len())
        .map(|n| net_hpwl(netlist, n, placement))
        .sum()
}

/// Incremental builder used by the Bookshelf reader, the synthetic design
/// generator and tests.
#[derive(Debug, Clone)]
pub struct NetlistBuilder<T> {
    netlist: Netlist<T>,
}

impl<T: Scalar> NetlistBuilder<T> {
    pub fn new(region: Region<T>) -> Self {
        NetlistBuilder {
            netlist: Netlist {
                nodes: Vec::new(),
                pins: Vec::new(),
                nets: Vec::new(),
                region,
                row_height: T::one(),
            },
        }
    }

    pub fn row_height(mut self, h: T) -> Self {
        self.netlist.row_height = h;
        self
    }

    pub fn add_node(&mut self, name: impl Into<String>, width: T, height: T, movable: bool) -> usize {
        self.netlist.nodes.push(Node {
            name: name.into(),
            width,
            height,
            movable,
        });
        self.netlist.nodes.len() - 1
    }

    /// Adds a net; each entry is `(node, offset_x, offset_y)` with offsets
    /// relative to the node's lower-left corner.
    pub fn add_net(&mut self, name: impl Into<String>, pins: &[(usize, T, T)]) -> usize {
        let net = self.netlist.nets.len();
        let mut ids = Vec::with_capacity(pins.len());
        for &(node, offset_x, offset_y) in pins {
            self.netlist.pins.push(Pin {
                node,
                net,
                offset_x,
                offset_y,
            });
            ids.push(self.netlist.pins.len() - 1);
        }
        self.netlist.nets.push(Net {
            name: name.into(),
            pins: ids,
        });
        net
    }

    /// Adds a net with every pin at its node's center.
    pub fn add_centered_net(&mut self, name: impl Into<String>, nodes: &[usize]) -> usize {
        let pins: Vec<_> = nodes
            .iter()
            .map(|&n| {
                let node = &self.netlist.nodes[n];
                (n, node.width * T::half(), node.height * T::half())
            })
            .collect();
        self.add_net(name, &pins)
    }

    pub fn build(self) -> Netlist<T> {
        self.netlist
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// One zero-offset pin per listed point, each on its own node.
    fn point_nets(nets: &[&[(f64, f64)]]) -> (Netlist<f64>, Placement<f64>) {
        let mut b = NetlistBuilder::new(Region::new(0.0, 0.0, 100.0, 100.0));
        let mut pl = Placement::zeros(0);
        for (ni, pts) in nets.iter().enumerate() {
            let mut pins = Vec::new();
            for &(x, y) in pts.iter() {
                let id = b.add_node(format!("n{}", pl.len()), 1.0, 1.0, true);
                pl.x.push(x);
                pl.y.push(y);
                pins.push((id, 0.0, 0.0));
            }
            b.add_net(format!("net{ni}"), &pins);
        }
        (b.build(), pl)
    }

    #[test]
    fn hpwl_hand_examples() {
        let (nl, pl) = point_nets(&[&[(0.0, 0.0), (0.0, 0.0)]]);
        assert_eq!(hpwl(&nl, &pl), 0.0);
        let (nl, pl) = point_nets(&[&[(0.0, 0.0), (3.0, 4.0)]]);
        assert_eq!(hpwl(&nl, &pl), 7.0);
        let (nl, pl) = point_nets(&[&[(1.0, 1.0), (2.0, 5.0), (4.0, 2.0)], &[(0.0, 0.0), (1.0, 1.0)]]);
        assert_eq!(hpwl(&nl, &pl), 9.0);
        let (nl, pl) = point_nets(&[]);
        assert_eq!(hpwl(&nl, &pl), 0.0);
    }

    #[test]
    fn validate_reports_violations() {
        let (nl, _) = point_nets(&[&[(0.0, 0.0), (3.0, 4.0)]]);
        assert!(nl.validate().is_ok());

        let (mut nl, _) = point_nets(&[&[(0.0, 0.0), (3.0, 4.0)], &[(0.0, 0.0)]]);
        let v = nl.validate().unwrap_err();
        assert!(v.iter().any(|v| v.to_string().contains("single-pin net")));

        nl.pins[0].node = 99;
        let v = nl.validate().unwrap_err();
        assert!(v.iter().any(|v| v.to_string().contains("dangling pin")));
        assert!(v.len() >= 2, "lists every violation: {v:?}");
    }

    #[test]
    fn remove_single_pin_nets_renumbers() {
        let (mut nl, _) = point_nets(&[&[(0.0, 0.0)], &[(0.0, 0.0), (3.0, 4.0)], &[(1.0, 1.0)]]);
        assert_eq!(nl.remove_single_pin_nets(), 2);
        assert_eq!(nl.nets.len(), 1);
        assert_eq!(nl.pins.len(), 2);
        assert!(nl.validate().is_ok());
        assert_eq!(nl.nodes.len(), 4, "nodes survive net removal");
    }

    fn arb_design() -> impl Strategy<Value = Vec<Vec<(f64, f64)>>> {
        prop::collection::vec(
            prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 2..6),
            1..8,
        )
    }

    fn build(nets: &[Vec<(f64, f64)>]) -> (Netlist<f64>, Placement<f64>) {
        let refs: Vec<&[(f64, f64)]> = nets.iter().map(|v| v.as_slice()).collect();
        point_nets(&refs)
    }

    proptest! {
        #[test]
        fn hpwl_translation_invariant(nets in arb_design(), dx in -1e3f64..1e3, dy in -1e3f64..1e3) {
            let (nl, pl) = build(&nets);
            let base = hpwl(&nl, &pl);
            let moved = Placement {
                x: pl.x.iter().map(|v| v + dx).collect(),
                y: pl.y.iter().map(|v| v + dy).collect(),
            };
            let h = hpwl(&nl, &moved);
            prop_assert!((h - base).abs() <= 1e-9 * base.max(1.0));
        }

        #[test]
        fn hpwl_scales_linearly(nets in arb_design(), s in 0.1f64..10.0) {
            let (mut nl, pl) = build(&nets);
            for p in nl.pins.iter_mut() {
                p.offset_x = 0.25;
                p.offset_y = -0.5;
            }
            let base = hpwl(&nl, &pl);
            for p in nl.pins.iter_mut() {
                p.offset_x *= s;
                p.offset_y *= s;
            }
            let scaled = Placement {
                x: pl.x.iter().map(|v| v * s).collect(),
                y: pl.y.iter().map(|v| v * s).collect(),
            };
            prop_assert!((hpwl(&nl, &scaled) - s * base).abs() <= 1e-9 * (s * base).max(1.0));
        }

        #[test]
        fn hpwl_pin_order_invariant(nets in arb_design(), seed in any::<u64>()) {
            let (mut nl, pl) = build(&nets);
            let base = hpwl(&nl, &pl);
            for (i, net) in nl.nets.iter_mut().enumerate() {
                let k = (seed as usize).wrapping_add(i) % net.pins.len();
                net.pins.rotate_left(k);
                net.pins.reverse();
            }
            prop_assert_eq!(hpwl(&nl, &pl), base);
        }
    }
}
