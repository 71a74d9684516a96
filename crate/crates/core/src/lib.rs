//! Dyadic-grid laboratory for good integrators and semimartingale decompositions.
//!
//! Everything lives on the dyadic partitions `D_n = {i / 2^n}` of `[0, 1]`.
//! A [`PathEnsemble`] is a finite sample of an adapted process; random
//! variables are per-path samples on that ensemble, so convergence in
//! probability and quantiles are computed pathwise.
//!
//! The crate is `no_std` (it needs `alloc`). IO, configuration, thread pools
//! and the command line live in the companion `bdlab` crate; heavy per-path
//! work is routed through the [`Executor`] trait so callers can plug in a
//! parallel backend without changing results.
//!
//! ## Layout
//!
//! - [`paths`]: grids, process models, simulation, stopping times, jump splitting.
//! - [`integrands`]: simple and elementary integrands, stochastic integrals, Riemann sums.
//! - [`variation`]: conditional-drift oracles, mean variation, Doob and Rao decompositions.
//! - [`limits`]: min-norm convex combinations, accumulation stopping times,
//!   convergence in probability, the good-integrator probe and the localization pipeline.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

mod error;
mod exec;
pub mod integrands;
pub mod limits;
pub mod math;
pub mod paths;
pub mod stats;
pub mod variation;

pub use error::{Error, Result};
pub use exec::{Executor, Serial};
pub use integrands::{ElementaryIntegrand, Measurability, SimpleIntegrand};
pub use paths::{DyadicGrid, PathEnsemble, ProcessModel, StoppingTimes, SynthesisMethod};
pub use variation::{DriftTable, OracleKind};
