// SPDX-License-Identifier: Apache-2.0

//! Actor-critic control of the placement schedule.

pub mod agent;
pub mod network;
pub mod nn;
pub mod trainer;

pub use network::{ActionSpace, Network, NetworkConfig};

pub type Params64 = nn::Params<f64>;
pub type Params32 = nn::Params<f32>;
pub type Tensor64 = nn::Tensor<f64>;
pub type Tensor32 = nn::Tensor<f32>;
pub type Learner64 = trainer::Learner<f64>;
pub type Learner32 = trainer::Learner<f32>;
