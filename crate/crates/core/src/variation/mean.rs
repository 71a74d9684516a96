//! Mean variation `Var(S, π) = E Σ_{t_i ∈ π} |E[S_{t_{i+1}} - S_{t_i} | F_{t_i}]|`.

use alloc::format;
use alloc::vec::Vec;

use super::oracle::{drift_table, DriftTable, OracleKind};
use crate::error::{Error, Result};
use crate::integrands::{integral_process, ElementaryIntegrand, Integrand};
use crate::paths::{DyadicGrid, PathEnsemble, StoppingTimes};
use crate::stats::{estimate, Estimate};

/// One level of a mean-variation report.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeanVariationEntry {
    pub level: u32,
    pub estimate: f64,
    pub stderr: f64,
    pub oracle: OracleKind,
    /// Summands gated by `1{t_i < ρ}`.
    pub stopped: bool,
}

impl MeanVariationEntry {
    fn from_sums(table: &DriftTable, sums: &[f64], stopped: bool) -> Self {
        let Estimate { mean, stderr } = estimate(sums);
        Self {
            level: table.level(),
            estimate: mean,
            stderr,
            oracle: table.kind(),
            stopped,
        }
    }
}

/// How the level sequence behaves as the grid refines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// Non-decreasing and the last two levels agree within three standard errors.
    Stabilizing,
    /// Non-decreasing and still growing at the finest level.
    Increasing,
    /// Some level drops below its predecessor by more than three standard errors.
    NonMonotone,
    /// Fewer than two levels.
    Undetermined,
}

/// `Var(S, D_n)` over a list of levels. `Var(S)` is the limit of this
/// sequence; only the sequence and a trend flag are reported.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeanVariationReport {
    pub entries: Vec<MeanVariationEntry>,
    pub trend: Trend,
    /// Bound used for `‖S‖_∞`.
    pub sup_bound: f64,
    /// Whether `sup_bound` is the model's own bound rather than the sample max.
    pub sup_bound_declared: bool,
}

fn combined(a: &MeanVariationEntry, b: &MeanVariationEntry) -> f64 {
    crate::math::sqrt(a.stderr * a.stderr + b.stderr * b.stderr)
}

impl MeanVariationReport {
    pub fn new(entries: Vec<MeanVariationEntry>, sup_bound: f64, sup_bound_declared: bool) -> Self {
        let trend = if entries.len() < 2 {
            Trend::Undetermined
        } else if entries
            .windows(2)
            .any(|w| w[1].estimate < w[0].estimate - 3.0 * combined(&w[0], &w[1]))
        {
            Trend::NonMonotone
        } else {
            let (a, b) = (&entries[entries.len() - 2], &entries[entries.len() - 1]);
            if (b.estimate - a.estimate).abs() <= 3.0 * combined(a, b) + 1e-12 * b.estimate.abs() {
                Trend::Stabilizing
            } else {
                Trend::Increasing
            }
        };
        Self {
            entries,
            trend,
            sup_bound,
            sup_bound_declared,
        }
    }

    /// Every consecutive pair is non-decreasing within three combined
    /// standard errors.
    pub fn is_monotone(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[1].estimate >= w[0].estimate - 3.0 * combined(&w[0], &w[1]))
    }
}

impl DriftTable {
    pub fn mean_variation(&self) -> MeanVariationEntry {
        let sums = self.abs_sums(None).expect("ungated sums");
        MeanVariationEntry::from_sums(self, &sums, false)
    }

    /// Summands gated by `1{t_i < ρ}`; by optional sampling this equals
    /// `Var(S^{ρ+}, π)`.
    pub fn mean_variation_stopped(&self, rho: &StoppingTimes) -> Result<MeanVariationEntry> {
        let sums = self.abs_sums(Some(rho))?;
        Ok(MeanVariationEntry::from_sums(self, &sums, true))
    }
}

pub fn mean_variation(ens: &PathEnsemble, kind: OracleKind, pi: DyadicGrid) -> Result<MeanVariationEntry> {
    Ok(drift_table(ens, kind, pi)?.mean_variation())
}

pub fn mean_variation_stopped(
    ens: &PathEnsemble,
    kind: OracleKind,
    rho: &StoppingTimes,
    pi: DyadicGrid,
) -> Result<MeanVariationEntry> {
    drift_table(ens, kind, pi)?.mean_variation_stopped(rho)
}

/// `Var(S, D_n)` for each level.
pub fn mean_variation_report(ens: &PathEnsemble, kind: OracleKind, levels: &[u32]) -> Result<MeanVariationReport> {
    if levels.is_empty() {
        return Err(Error::Empty("levels"));
    }
    let entries = levels
        .iter()
        .map(|&n| mean_variation(ens, kind, DyadicGrid::with_cap(n, ens.grid().level().max(n))?))
        .collect::<Result<Vec<_>>>()?;
    let (b, declared) = ens.sup_bound();
    Ok(MeanVariationReport::new(entries, b, declared))
}

/// `H^n = Σ sign(E[ΔS_i | F_{t_i}]) 1_{(t_i, t_{i+1}]}` on `D_n`.
pub fn sign_integrand(ens: &PathEnsemble, kind: OracleKind, level: u32) -> Result<ElementaryIntegrand> {
    let pi = DyadicGrid::with_cap(level, ens.grid().level())?;
    drift_table(ens, kind, pi)?.sign_integrand()
}

/// `ρ_n = inf{t ∈ D_n : (H^n·S)_t >= C - 2 sup_bound}` (`∞` if never).
///
/// Checks afterwards that the stopped integral reaches the threshold where
/// `ρ_n` is finite and never exceeds `C`, which needs `‖H‖_∞ <= 1`.
pub fn bounded_variation_stopping(
    ens: &PathEnsemble,
    h: &ElementaryIntegrand,
    c: f64,
    sup_bound: f64,
) -> Result<StoppingTimes> {
    if !(c >= 0.0) {
        return Err(Error::Domain(format!("C must be non-negative, got {c}")));
    }
    let observed = ens.max_abs();
    if !(sup_bound >= observed) {
        return Err(Error::Domain(format!(
            "sup bound {sup_bound} is below the observed path maximum {observed}"
        )));
    }
    if h.sup_norm() > 1.0 {
        return Err(Error::Domain("the integrand must satisfy ‖H‖∞ <= 1".into()));
    }
    let process = integral_process(ens, h)?;
    let threshold = c - 2.0 * sup_bound;
    let s = h.stride();
    let grid = ens.grid();
    let idx: Vec<u32> = process
        .rows()
        .map(|row| {
            (0..=h.cells())
                .map(|k| k * s)
                .find(|&i| row[i] >= threshold)
                .unwrap_or(grid.len()) as u32
        })
        .collect();
    let rho = StoppingTimes::from_raw(grid, idx);
    for (p, row) in process.rows().enumerate() {
        let stopped = row[rho.effective(p)];
        if !rho.is_infinite(p) && stopped < threshold {
            return Err(Error::Invariant(format!("path {p}: stopped integral {stopped} below threshold {threshold}")));
        }
        let slack = 1e-12 * (1.0 + c.abs());
        if stopped > c + slack {
            return Err(Error::Invariant(format!("path {p}: stopped integral {stopped} exceeds C = {c}")));
        }
    }
    Ok(rho)
}
