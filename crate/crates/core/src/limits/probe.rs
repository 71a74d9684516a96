//! Empirical test of the good-integrator property: is `{I_S(H) : ‖H‖∞ <= 1}`
//! bounded in probability uniformly over the dyadic levels?

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::convergence::Thresholds;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::integrands::{lagged_sign_integrand, random_sign_integrand, ElementaryIntegrand};
use crate::math::log2;
use crate::paths::{DyadicGrid, PathEnsemble};
use crate::stats::{linear_fit, quantile_stderr, upper_quantile};
use crate::variation::{drift_table_with, OracleKind};

/// Members of the probe family; all satisfy `‖H‖∞ <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeIntegrand {
    /// Sign of the latest completed increment.
    LaggedSign1,
    /// Sign of the increment before that (lag-one measurable).
    LaggedSign2,
    /// Sign of the conditional drift; needs an oracle.
    DriftSign,
    /// Independent fair ±1 bets.
    RandomSign,
}

impl ProbeIntegrand {
    pub const ALL: [Self; 4] = [Self::LaggedSign1, Self::LaggedSign2, Self::DriftSign, Self::RandomSign];

    pub fn name(&self) -> &'static str {
        match self {
            Self::LaggedSign1 => "lagged_sign_1",
            Self::LaggedSign2 => "lagged_sign_2",
            Self::DriftSign => "drift_sign",
            Self::RandomSign => "random_sign",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown probe integrand `{s}`")))
    }

    /// The member's integrand on `D_level`. `seed` only affects the random
    /// signs; `oracle` only the drift sign.
    pub fn build(&self, exec: &dyn Executor, ens: &PathEnsemble, level: u32, oracle: Option<OracleKind>, seed: u64) -> Result<ElementaryIntegrand> {
        match self {
            Self::LaggedSign1 => lagged_sign_integrand(ens, level, 1),
            Self::LaggedSign2 => lagged_sign_integrand(ens, level, 2),
            Self::RandomSign => random_sign_integrand(ens.grid(), ens.n_paths(), level, seed),
            Self::DriftSign => {
                let kind = match oracle {
                    Some(k) => k,
                    None => OracleKind::exact_for(ens.model())?,
                };
                let pi = DyadicGrid::with_cap(level, ens.grid().level())?;
                drift_table_with(exec, ens, kind, pi)?.sign_integrand()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProbeConfig {
    pub levels: Vec<u32>,
    pub epsilon: f64,
    pub family: Vec<ProbeIntegrand>,
    /// Oracle for the drift-sign member; the model's exact oracle if `None`.
    pub oracle: Option<OracleKind>,
    pub seed: u64,
    pub thresholds: Thresholds,
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels.len() < 3 {
            return Err(Error::InsufficientLevels {
                got: self.levels.len(),
                need: 3,
            });
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if self.family.is_empty() {
            return Err(Error::Empty("probe family"));
        }
        Ok(())
    }

    /// Lagged signs and random signs, default thresholds.
    pub fn new(levels: Vec<u32>, epsilon: f64) -> Self {
        Self {
            levels,
            epsilon,
            family: vec![ProbeIntegrand::LaggedSign1, ProbeIntegrand::LaggedSign2, ProbeIntegrand::RandomSign],
            oracle: None,
            seed: 0,
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProbeLevel {
    pub n: u32,
    /// `C(ε, n)`: smallest `c` with `#{X >= c} <= ε N` for the family statistic `X`.
    #[serde(rename = "C")]
    pub c: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVerdict {
    Bounded,
    Unbounded,
    Inconclusive,
}

impl ProbeVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Bounded => "bounded",
            Self::Unbounded => "unbounded",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProbeResult {
    pub verdict: ProbeVerdict,
    pub levels: Vec<ProbeLevel>,
    /// Slope of `log2 C(ε, n)` against `n` over the finer half of the levels.
    pub exponent: f64,
    /// R² of that fit.
    pub fit: f64,
    pub epsilon: f64,
    pub family: Vec<ProbeIntegrand>,
    /// The heuristic nature of the family, spelled out in the report.
    pub note: String,
}

impl ProbeResult {
    /// `max_n C(ε, n)`.
    pub fn max_c(&self) -> f64 {
        self.levels.iter().map(|l| l.c).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per path `max_{t ∈ D_n} |(H·S)_t|`, the supremum over the family member
/// and all its deterministic truncations `H 1_{(0,t]}`.
pub fn running_sup(exec: &dyn Executor, ens: &PathEnsemble, h: &ElementaryIntegrand) -> Vec<f64> {
    let s = h.stride();
    let mut out = vec![0.0; ens.n_paths()];
    exec.for_each_row(&mut out, 1, &|p, o| {
        let row = ens.row(p);
        let mut acc = 0.0f64;
        let mut m = 0.0f64;
        for (c, coef) in h.coeff_row(p).iter().enumerate() {
            acc += coef * (row[(c + 1) * s] - row[c * s]);
            m = m.max(acc.abs());
        }
        o[0] = m;
    });
    out
}

/// Per path maximum of [`running_sup`] over the family at one level.
pub fn probe_statistic(exec: &dyn Executor, ens: &PathEnsemble, level: u32, config: &ProbeConfig) -> Result<Vec<f64>> {
    if config.family.is_empty() {
        return Err(Error::Empty("probe family"));
    }
    let mut stat = vec![0.0f64; ens.n_paths()];
    for member in &config.family {
        let h = member.build(exec, ens, level, config.oracle, config.seed)?;
        for (x, y) in stat.iter_mut().zip(running_sup(exec, ens, &h)) {
            *x = x.max(y);
        }
    }
    Ok(stat)
}

/// `C(ε, n)` per level, the growth exponent of `C` in `n` and a verdict.
pub fn good_integrator_probe(exec: &dyn Executor, ens: &PathEnsemble, config: &ProbeConfig) -> Result<ProbeResult> {
    config.validate()?;
    let stats = config
        .levels
        .iter()
        .map(|&n| probe_statistic(exec, ens, n, config))
        .collect::<Result<Vec<_>>>()?;
    probe_from_statistics(config, &stats)
}

/// Verdict from precomputed per-level probe statistics, one vector per entry
/// of `config.levels`.
pub fn probe_from_statistics(config: &ProbeConfig, stats: &[Vec<f64>]) -> Result<ProbeResult> {
    if stats.len() != config.levels.len() {
        return Err(Error::LengthMismatch {
            left: config.levels.len(),
            right: stats.len(),
        });
    }
    config.validate()?;
    let levels: Vec<ProbeLevel> = config
        .levels
        .iter()
        .zip(stats)
        .map(|(&n, stat)| ProbeLevel {
            n,
            c: upper_quantile(stat, config.epsilon),
            stderr: quantile_stderr(stat, config.epsilon),
        })
        .collect();
    // the exponent is asymptotic: coarse levels carry an O(1) offset in the
    // quantile, so only the top half (at least three levels) is fitted
    let fitted = &levels[(levels.len() / 2).min(levels.len() - 3)..];
    let x: Vec<f64> = fitted.iter().map(|l| l.n as f64).collect();
    let y: Vec<f64> = fitted.iter().map(|l| log2(l.c.max(f64::MIN_POSITIVE))).collect();
    let fit = linear_fit(&x, &y);
    let t = config.thresholds;
    let verdict = if fit.slope <= t.exponent_bounded {
        ProbeVerdict::Bounded
    } else if fit.slope >= t.exponent_unbounded && fit.r_squared >= t.min_fit {
        ProbeVerdict::Unbounded
    } else {
        ProbeVerdict::Inconclusive
    };
    Ok(ProbeResult {
        verdict,
        levels,
        exponent: fit.slope,
        fit: fit.r_squared,
        epsilon: config.epsilon,
        family: config.family.clone(),
        note: "lower bound on the operator norm from a finite probe family".into(),
    })
}
