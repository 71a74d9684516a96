//! Min-norm convex combinations, accumulation stopping times, convergence in
//! probability, the good-integrator probe, the Riemann-integrator test and
//! the localization pipeline that turns a bounded good integrator into a
//! stopped process of finite mean variation.

mod convergence;
mod mazur;
mod minnorm;
mod pipeline;
mod probe;
mod riemann;

pub use convergence::{convergence_in_probability, ky_fan_distance, ky_fan_estimate, ConvergenceReport, ConvergenceVerdict, Thresholds};
pub use mazur::{accumulation_stopping_time, check_domination, infinity_indicator, mazur_sequence, MazurSequence, DEFAULT_WINDOW};
pub use minnorm::{min_norm_convex, ConvexWeights};
pub use pipeline::{theorem1_pipeline, Check, PipelineConfig, PipelineLevel, PipelineOutcome, PipelineReport};
pub use probe::{
    good_integrator_probe, probe_statistic, running_sup, ProbeConfig, ProbeIntegrand, ProbeLevel, ProbeResult,
    ProbeVerdict,
};
pub use riemann::{riemann_integrator_test, RiemannReport, RiemannVerdict, RiemannWitness, WitnessReport};
