// SPDX-License-Identifier: Apache-2.0

//! Failure categories and their process exit codes.

use placerl_core::env::EnvError;
use placerl_core::netedit::EditError;
use placerl_core::netlist::bookshelf::BookshelfError;
use placerl_core::placer::PlacerError;
use placerl_learn::nn::checkpoint::CheckpointError;
use placerl_learn::trainer::TrainError;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Config = 2,
    Parse = 3,
    Divergence = 4,
    Internal = 5,
}

/// Bad configuration: unknown keys, out-of-range values, inconsistent inputs.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

/// An input file that is missing or unreadable.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct InputError(pub String);

/// A placement run that diverged or otherwise failed to converge.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct DivergenceError(pub String);

pub fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn classify_one(e: &(dyn std::error::Error + 'static)) -> Option<ExitKind> {
    if e.is::<ConfigError>() {
        return Some(ExitKind::Config);
    }
    if e.is::<InputError>() || e.is::<BookshelfError>() || e.is::<CheckpointError>() {
        return Some(ExitKind::Parse);
    }
    if e.is::<DivergenceError>() {
        return Some(ExitKind::Divergence);
    }
    if let Some(e) = e.downcast_ref::<PlacerError>() {
        return Some(match e {
            PlacerError::Config(_) | PlacerError::MissingController(_) => ExitKind::Config,
            PlacerError::Degenerate(_) => ExitKind::Divergence,
        });
    }
    if let Some(e) = e.downcast_ref::<EnvError>() {
        return Some(match e {
            EnvError::BaselineFailed(_) => ExitKind::Divergence,
            EnvError::MissingBaseline(_) | EnvError::ActionShape { .. } => ExitKind::Config,
            EnvError::Placer(p) => classify_one(p).unwrap_or(ExitKind::Internal),
            EnvError::NotActive => ExitKind::Internal,
        });
    }
    if let Some(e) = e.downcast_ref::<TrainError>() {
        return Some(match e {
            TrainError::Config(_) | TrainError::Shape(_) => ExitKind::Config,
            TrainError::Diverged { .. } => ExitKind::Divergence,
            TrainError::Env(_) | TrainError::NonFinite(_) => ExitKind::Internal,
        });
    }
    if let Some(e) = e.downcast_ref::<EditError>() {
        return Some(match e {
            EditError::BadWeights => ExitKind::Config,
            EditError::Exhausted | EditError::NoPeers => ExitKind::Internal,
        });
    }
    None
}

/// The first categorised error in the chain decides; anything else is internal.
pub fn classify(err: &anyhow::Error) -> ExitKind {
    err.chain().find_map(classify_one).unwrap_or(ExitKind::Internal)
}
