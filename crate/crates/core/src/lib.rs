// SPDX-License-Identifier: Apache-2.0

//! Netlists, an analytical global placer with external control hooks, and
//! the placement episode environment built on top of it.

pub mod env;
pub mod netedit;
pub mod netlist;
pub mod noise;
pub mod num;
pub mod pgm;
pub mod placer;
pub mod synth;

pub use num::Scalar;

pub type Netlist64 = netlist::Netlist<f64>;
pub type Netlist32 = netlist::Netlist<f32>;
pub type Placement64 = netlist::Placement<f64>;
pub type Placement32 = netlist::Placement<f32>;
pub type Placer64 = placer::Placer<f64>;
pub type Placer32 = placer::Placer<f32>;
pub type PlacerConfig64 = placer::PlacerConfig<f64>;
