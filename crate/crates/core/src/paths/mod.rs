//! Time grids, process models, path ensembles and stopping times.

mod ensemble;
mod fft;
mod grid;
mod jumps;
mod model;
pub mod rng;
mod stopping;

pub use ensemble::{simulate, simulate_with, PathEnsemble, SynthesisMethod, SynthesisPreference};
pub use grid::{make_grid, DyadicGrid, DEFAULT_LEVEL_CAP};
pub use jumps::split_large_jumps;
pub use model::{fbm_covariance, fgn_autocovariance, ProcessModel};
pub use stopping::{first_passage, first_passage_on, level_crossing, rho_plus, stop, StoppingTimes};
