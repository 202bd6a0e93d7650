//! Keep-alive cache policy engine.
//!
//! In keep-alive caching (serverless function containers, TTL caches) there is
//! no fixed cache size to fill; instead a provider pays a cost per unit time an
//! object stays cached and a cost per miss. This crate models arrival streams
//! as Poisson/Hawkes point processes and computes, for each stream:
//!
//! - exact conditional intensity, survival, and compensator of the next
//!   arrival, plus thinning-based simulation ([`point_process`]);
//! - optimal and approximately optimal keep-alive windows, from the
//!   history-dependent closed form down to history-independent heuristics
//!   ([`policy`]);
//! - realized and expected policy costs over an inter-arrival ([`cost`]);
//! - maximum-likelihood parameter fits and residual goodness-of-fit tests
//!   ([`estimation`]);
//! - per-minute trace binning and synthetic workload generation ([`trace`]);
//! - replay of policies against arrival series with cold-start and
//!   wasted-memory accounting, cost-curve sweeps, and Pareto trade-off
//!   experiments ([`evaluator`]).
//!
//! The crate is `no_std`-compatible (requires `alloc`); all randomness flows
//! through an owned, seedable generator so every result is reproducible from
//! its seed.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod cost;
pub mod estimation;
pub mod evaluator;
mod math;
pub mod point_process;
pub mod policy;
pub mod rng;
pub mod trace;

use alloc::string::String;
use core::fmt;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a precondition (negative time, unsorted history, ...).
    Domain(String),
    /// Simulation produced more events than the configured safety cap.
    CapExceeded { cap: usize },
    /// Not enough observations for the requested computation.
    InsufficientData { needed: usize, got: usize },
    /// Parameter estimation failed on every restart.
    FitFailed(String),
    /// A numerical routine failed to converge.
    Numeric(String),
    /// Inconsistent run configuration (e.g. missing process parameters).
    Config(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::CapExceeded { cap } => {
                write!(f, "simulation exceeded the safety cap of {cap} events")
            }
            Error::InsufficientData { needed, got } => {
                write!(f, "insufficient data: needed {needed}, got {got}")
            }
            Error::FitFailed(msg) => write!(f, "fit failed: {msg}"),
            Error::Numeric(msg) => write!(f, "numeric error: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
