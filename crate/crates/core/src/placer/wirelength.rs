// SPDX-License-Identifier: Apache-2.0

//! Weighted-average (WA) wirelength.
//!
//! Per net and axis, `WA = sum x e^{x/g} / sum e^{x/g} - sum x e^{-x/g} / sum e^{-x/g}`.
//! WA never exceeds the exact span; for a net with `n` pins the deficit per
//! net is at most `4 (n - 1) g / e` (see [`wa_hpwl_gap_bound`]).

use crate::netlist::{Netlist, Placement};
use crate::num::Scalar;

/// Upper bound on `HPWL - WA` for a single net of `pins` pins.
pub fn wa_hpwl_gap_bound<T: Scalar>(pins: usize, gamma: T) -> T {
    T::of(4.0) * T::of_usize(pins.saturating_sub(1)) * gamma / T::E()
}

#[derive(Default)]
struct Scratch<T> {
    coords: Vec<T>,
    a: Vec<T>,
    b: Vec<T>,
}

/// WA value of one axis; when `grad` is given, adds `d WA / d coord` for
/// every pin coordinate into it.
fn axis<T: Scalar>(s: &mut Scratch<T>, gamma: T, grad: Option<&mut [T]>) -> T {
    let xs = &s.coords;
    let (lo, hi) = xs
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(l, h), &x| (l.min(x), h.max(x)));
    s.a.clear();
    s.b.clear();
    let (mut sa, mut sb, mut xa, mut xb) = (T::zero(), T::zero(), T::zero(), T::zero());
    for &x in xs {
        let a = ((x - hi) / gamma).exp();
        let b = ((lo - x) / gamma).exp();
        sa += a;
        sb += b;
        xa += x * a;
        xb += x * b;
        s.a.push(a);
        s.b.push(b);
    }
    let plus = xa / sa;
    let minus = xb / sb;
    if let Some(g) = grad {
        for (i, &x) in xs.iter().enumerate() {
            g[i] += s.a[i] / sa * (T::one() + (x - plus) / gamma)
                - s.b[i] / sb * (T::one() - (x - minus) / gamma);
        }
    }
    plus - minus
}

/// Smoothed wirelength and, optionally, its gradient with respect to every
/// node's lower-left coordinate. Gradients of fixed nodes are left at zero.
/// Gradient buffers are overwritten.
pub fn wa_wirelength<T: Scalar>(
    netlist: &Netlist<T>,
    placement: &Placement<T>,
    gamma: T,
    mut grad: Option<(&mut [T], &mut [T])>,
) -> T {
    if let Some((gx, gy)) = grad.as_mut() {
        gx.fill(T::zero());
        gy.fill(T::zero());
    }
    let mut s = Scratch::default();
    let mut pin_grad = Vec::new();
    let mut total = T::zero();
    for net in &netlist.nets {
        if net.pins.len() < 2 {
            continue;
        }
        for dim in 0..2 {
            s.coords.clear();
            s.coords.extend(net.pins.iter().map(|&p| {
                let (x, y) = netlist.pin_position(p, placement);
                if dim == 0 {
                    x
                } else {
                    y
                }
            }));
            match grad.as_mut() {
                None => total += axis(&mut s, gamma, None),
                Some((gx, gy)) => {
                    pin_grad.clear();
                    pin_grad.resize(net.pins.len(), T::zero());
                    total += axis(&mut s, gamma, Some(&mut pin_grad));
                    let g: &mut [T] = if dim == 0 { gx } else { gy };
                    for (k, &p) in net.pins.iter().enumerate() {
                        g[netlist.pins[p].node] += pin_grad[k];
                    }
                }
            }
        }
    }
    if let Some((gx, gy)) = grad {
        for (i, n) in netlist.nodes.iter().enumerate() {
            if !n.movable {
                gx[i] = T::zero();
                gy[i] = T::zero();
            }
        }
    }
    total
}

/// Convenience wrapper returning `(cost, grad_x, grad_y)`.
pub fn wl_cost_and_grad<T: Scalar>(
    netlist: &Netlist<T>,
    placement: &Placement<T>,
    gamma: T,
) -> (T, Vec<T>, Vec<T>) {
    let n = netlist.nodes.len();
    let (mut gx, mut gy) = (vec![T::zero(); n], vec![T::zero(); n]);
    let c = wa_wirelength(netlist, placement, gamma, Some((&mut gx, &mut gy)));
    (c, gx, gy)
}

/// WA value of a single net.
pub fn net_wa<T: Scalar>(netlist: &Netlist<T>, net: usize, placement: &Placement<T>, gamma: T) -> T {
    let mut s = Scratch::default();
    let pins = &netlist.nets[net].pins;
    let mut total = T::zero();
    for dim in 0..2 {
        s.coords.clear();
        s.coords.extend(pins.iter().map(|&p| {
            let (x, y) = netlist.pin_position(p, placement);
            if dim == 0 {
                x
            } else {
                y
            }
        }));
        total += axis(&mut s, gamma, None);
    }
    total
}
