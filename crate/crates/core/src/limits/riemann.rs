//! Do dyadic Riemann sums `Σ K_{t_i} (S_{t_{i+1}} - S_{t_i})` converge in
//! probability for bounded continuous adapted `K`?

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::convergence::{convergence_in_probability, ConvergenceReport, ConvergenceVerdict, Thresholds};
use crate::error::{Error, Result};
use crate::integrands::{affine_interpolation, lagged_sign_integrand, riemann_sum};
use crate::math::exp;
use crate::paths::PathEnsemble;

/// Continuous adapted integrands tabulated on the ensemble grid.
#[derive(Debug, Clone, PartialEq)]
pub enum RiemannWitness {
    /// `K ≡ c`.
    Constant(f64),
    /// `K = S`.
    Path,
    /// `K = exp(-S²)`.
    GaussianBump,
    /// Level-dependent: at level `n`, the affine interpolation of the lag-two
    /// sign coefficients at level `n`, so its Riemann sum is the integral of
    /// that elementary integrand.
    InterpolatedLagSign,
    /// Any other tabulated process.
    Tabulated { name: String, values: PathEnsemble },
}

impl RiemannWitness {
    pub fn name(&self) -> String {
        match self {
            Self::Constant(c) => format!("constant_{c}"),
            Self::Path => "path".into(),
            Self::GaussianBump => "gaussian_bump".into(),
            Self::InterpolatedLagSign => "interpolated_lag_sign".into(),
            Self::Tabulated { name, .. } => name.clone(),
        }
    }

    /// `constant`, `one`, `constant_<c>`, `path`, `gaussian_bump`, `interpolated_lag_sign`.
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "one" | "constant" => Self::Constant(1.0),
            "path" => Self::Path,
            "gaussian_bump" => Self::GaussianBump,
            "interpolated_lag_sign" => Self::InterpolatedLagSign,
            _ => match s.strip_prefix("constant_").and_then(|c| c.parse().ok()) {
                Some(c) => Self::Constant(c),
                None => return Err(Error::Domain(format!("unknown Riemann witness `{s}`"))),
            },
        })
    }

    /// `K` tabulated on the grid, for level-independent witnesses.
    fn tabulate(&self, ens: &PathEnsemble) -> Option<PathEnsemble> {
        let map = |f: &dyn Fn(f64) -> f64, label: &str| {
            ens.derive(ens.values().iter().map(|&x| f(x)).collect(), label)
        };
        match self {
            Self::Constant(c) => Some(map(&|_| *c, "constant")),
            Self::Path => Some(ens.clone()),
            Self::GaussianBump => Some(map(&|x| exp(-x * x), "gaussian_bump")),
            Self::InterpolatedLagSign => None,
            Self::Tabulated { values, .. } => Some(values.clone()),
        }
    }

    /// Riemann sums at each level.
    pub fn samples(&self, ens: &PathEnsemble, levels: &[u32]) -> Result<Vec<Vec<f64>>> {
        match self.tabulate(ens) {
            Some(k) => levels.iter().map(|&n| riemann_sum(ens, &k, n)).collect(),
            None => levels
                .iter()
                .map(|&n| {
                    let h = lagged_sign_integrand(ens, n, 2)?;
                    let k = affine_interpolation(&h, ens)?;
                    riemann_sum(ens, &k, n)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiemannVerdict {
    Yes,
    No,
    Inconclusive,
}

impl RiemannVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Yes => "yes",
            Self::No => "no",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WitnessReport {
    pub witness: String,
    pub report: ConvergenceReport,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RiemannReport {
    pub witnesses: Vec<WitnessReport>,
    /// "Riemann integrator": yes if every witness converges, no if any diverges.
    pub verdict: RiemannVerdict,
}

pub fn riemann_integrator_test(
    ens: &PathEnsemble,
    witnesses: &[RiemannWitness],
    levels: &[u32],
    thresholds: Thresholds,
) -> Result<RiemannReport> {
    if witnesses.is_empty() {
        return Err(Error::Empty("witnesses"));
    }
    let reports = witnesses
        .iter()
        .map(|w| {
            let samples = w.samples(ens, levels)?;
            Ok(WitnessReport {
                witness: w.name(),
                report: convergence_in_probability(levels, &samples, thresholds)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = if reports.iter().any(|r| r.report.verdict == ConvergenceVerdict::Divergent) {
        RiemannVerdict::No
    } else if reports.iter().all(|r| r.report.verdict == ConvergenceVerdict::Convergent) {
        RiemannVerdict::Yes
    } else {
        RiemannVerdict::Inconclusive
    };
    Ok(RiemannReport {
        witnesses: reports,
        verdict,
    })
}
