//! Localization of a bounded good integrator: the probe fixes `C`, each level
//! stops its drift-sign integral at `ρ_n`, and the min-norm combinations of
//! `1{ρ_k = ∞}` give one stopping time `ρ` under which the mean variation is
//! bounded on every level.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::convergence::Thresholds;
use super::mazur::{accumulation_stopping_time, infinity_indicator, mazur_sequence, MazurSequence, DEFAULT_WINDOW};
use super::probe::{probe_from_statistics, probe_statistic, running_sup, ProbeConfig, ProbeIntegrand, ProbeResult};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::integrands::ElementaryIntegrand;
use crate::paths::{DyadicGrid, PathEnsemble, StoppingTimes};
use crate::stats::{estimate, proportion, Estimate};
use crate::variation::{bounded_variation_stopping, drift_table_with, DriftTable, OracleKind};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PipelineConfig {
    pub levels: Vec<u32>,
    pub epsilon: f64,
    /// Mazur window.
    pub window: usize,
    /// Drift oracle; the model's exact oracle if `None`.
    pub oracle: Option<OracleKind>,
    /// Probe members besides the drift sign, which is always included.
    pub family: Vec<ProbeIntegrand>,
    pub seed: u64,
    pub thresholds: Thresholds,
}

impl PipelineConfig {
    pub fn new(levels: Vec<u32>, epsilon: f64) -> Self {
        let probe = ProbeConfig::new(levels, epsilon);
        Self {
            levels: probe.levels,
            epsilon,
            window: DEFAULT_WINDOW,
            oracle: None,
            family: probe.family,
            seed: 0,
            thresholds: probe.thresholds,
        }
    }

    fn probe_config(&self, oracle: OracleKind) -> ProbeConfig {
        let mut family = self.family.clone();
        if !family.contains(&ProbeIntegrand::DriftSign) {
            family.push(ProbeIntegrand::DriftSign);
        }
        family.sort();
        ProbeConfig {
            levels: self.levels.clone(),
            epsilon: self.epsilon,
            family,
            oracle: Some(oracle),
            seed: self.seed,
            thresholds: self.thresholds,
        }
    }
}

/// Per-level quantities; every estimate carries its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PipelineLevel {
    pub n: u32,
    /// `P(ρ_n = ∞)`.
    pub rho_n_infinite: Estimate,
    /// `E[(H^n·S)^{ρ_n}_1]`.
    pub stopped_integral: Estimate,
    /// `Var(S^{ρ_n}, D_n)`.
    pub variation_rho_n: Estimate,
    /// Drift sums on `D_n` gated by `1{t_i < ρ}`, i.e. `Var(S^{ρ+}, D_n)`
    /// with `ρ+` the first point of `D_n` at or after `ρ`. Within `2‖S‖∞` of
    /// `Var(S^ρ, D_n)`.
    pub variation_rho: Estimate,
}

/// One verified inequality.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Check {
    pub name: String,
    pub level: Option<u32>,
    pub value: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PipelineReport {
    pub epsilon: f64,
    pub sup_bound: f64,
    /// `max_n C(ε, n)` from the probe, which includes the drift-sign integrands.
    pub c_probe: f64,
    /// `C = c_probe + 2‖S‖∞`, so that the stopping threshold `C - 2‖S‖∞` is
    /// the probe's own quantile.
    #[serde(rename = "C")]
    pub c: f64,
    pub probe: ProbeResult,
    pub window: usize,
    pub levels: Vec<PipelineLevel>,
    /// `P(ρ = ∞)`.
    pub rho_infinite: Estimate,
    /// `‖Y_n‖` of the min-norm combinations.
    pub mazur_norms: Vec<f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl PipelineReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// The report plus the stopping times it was computed from.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub report: PipelineReport,
    pub rhos: Vec<StoppingTimes>,
    pub rho: StoppingTimes,
    pub mazur: MazurSequence,
}

fn check(name: &str, level: Option<u32>, value: Estimate, bound: f64, slack_se: f64, upper: bool) -> Check {
    let pass = if upper {
        value.mean <= bound + slack_se * value.stderr
    } else {
        value.mean >= bound - slack_se * value.stderr
    };
    Check {
        name: name.into(),
        level,
        value: value.mean,
        stderr: value.stderr,
        bound,
        pass,
    }
}

/// Per path `(H·S)^{ρ}_1`.
fn stopped_integral(ens: &PathEnsemble, h: &ElementaryIntegrand, rho: &StoppingTimes) -> Vec<f64> {
    let s = h.stride();
    ens.rows()
        .enumerate()
        .map(|(p, row)| {
            let limit = rho.raw(p);
            let mut acc = 0.0;
            for (c, &k) in h.coeff_row(p).iter().enumerate() {
                if c * s >= limit {
                    break;
                }
                acc += k * (row[(c + 1) * s] - row[c * s]);
            }
            acc
        })
        .collect()
}

/// Runs the whole localization on a model with a declared bound on `sup |S|`.
///
/// Verification failures do not raise errors; they show up as failed checks
/// and `pass = false`.
pub fn theorem1_pipeline(exec: &dyn Executor, ens: &PathEnsemble, config: &PipelineConfig) -> Result<PipelineOutcome> {
    let (sup_bound, declared) = ens.sup_bound();
    if !declared {
        return Err(Error::Domain(format!(
            "model {} has no declared bound on sup |S|",
            ens.model().name()
        )));
    }
    let oracle = match config.oracle {
        Some(k) => k,
        None => OracleKind::exact_for(ens.model())?,
    };
    let probe_cfg = config.probe_config(oracle);
    probe_cfg.validate()?;
    let mut sorted = config.levels.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted != config.levels {
        return Err(Error::Domain("levels must be strictly increasing".into()));
    }
    let others = ProbeConfig {
        family: probe_cfg
            .family
            .iter()
            .copied()
            .filter(|m| *m != ProbeIntegrand::DriftSign)
            .collect(),
        ..probe_cfg.clone()
    };

    // one drift table per level feeds the probe, ρ_n and the final variation
    let mut tables: Vec<DriftTable> = Vec::with_capacity(config.levels.len());
    let mut signs: Vec<ElementaryIntegrand> = Vec::with_capacity(config.levels.len());
    let mut stats: Vec<Vec<f64>> = Vec::with_capacity(config.levels.len());
    for &n in &config.levels {
        let pi = DyadicGrid::with_cap(n, ens.grid().level())?;
        let table = drift_table_with(exec, ens, oracle, pi)?;
        let h = table.sign_integrand()?;
        let mut stat = running_sup(exec, ens, &h);
        if !others.family.is_empty() {
            for (x, y) in stat.iter_mut().zip(probe_statistic(exec, ens, n, &others)?) {
                *x = x.max(y);
            }
        }
        tables.push(table);
        signs.push(h);
        stats.push(stat);
    }
    let probe = probe_from_statistics(&probe_cfg, &stats)?;
    drop(stats);
    let c_probe = probe.max_c();
    let mut c = c_probe + 2.0 * sup_bound;
    // the threshold C - 2‖S‖∞ must not round below the probe's quantile
    while c - 2.0 * sup_bound < c_probe {
        c = c.next_up();
    }

    let rhos = signs
        .iter()
        .map(|h| bounded_variation_stopping(ens, h, c, sup_bound))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<Vec<f64>> = rhos.iter().map(infinity_indicator).collect();
    let mazur = mazur_sequence(&xs, config.window)?;
    let rho = accumulation_stopping_time(&rhos, &mazur.weights)?;
    let rho_infinite = proportion((0..rho.n_paths()).map(|p| rho.is_infinite(p)));

    let eps = config.epsilon;
    let mut checks = Vec::new();
    let mut levels = Vec::with_capacity(config.levels.len());
    for ((table, h), rho_n) in tables.iter().zip(&signs).zip(&rhos) {
        let n = table.level();
        let rho_n_infinite = proportion((0..rho_n.n_paths()).map(|p| rho_n.is_infinite(p)));
        let integral = stopped_integral(ens, h, rho_n);
        let var_n_sums = table.abs_sums(Some(rho_n))?;
        let gap: Vec<f64> = integral.iter().zip(&var_n_sums).map(|(a, b)| a - b).collect();
        let var_rho = estimate(&table.abs_sums(Some(&rho))?);
        let level = PipelineLevel {
            n,
            rho_n_infinite,
            stopped_integral: estimate(&integral),
            variation_rho_n: estimate(&var_n_sums),
            variation_rho: var_rho,
        };
        checks.push(check("P(rho_n = inf) >= 1 - eps", Some(n), rho_n_infinite, 1.0 - eps, 3.0, false));
        checks.push(check("Var(S^rho_n, D_n) <= C", Some(n), level.variation_rho_n, c, 3.0, true));
        // E[(H^n·S)^{ρ_n}_1] - Var(S^{ρ_n}, D_n) is the mean of a martingale transform
        let g = estimate(&gap);
        checks.push(check("E[(H^n.S)^rho_n] - Var(S^rho_n, D_n) <= 0", Some(n), g, 0.0, 4.0, true));
        checks.push(check("E[(H^n.S)^rho_n] - Var(S^rho_n, D_n) >= 0", Some(n), g, 0.0, 4.0, false));
        checks.push(check("Var(S^rho, D_n) <= 2C + 6|S|", Some(n), var_rho, 2.0 * c + 6.0 * sup_bound, 3.0, true));
        checks.push(check("Var(S^rho+, D_n) <= 2C + 4|S|", Some(n), var_rho, 2.0 * c + 4.0 * sup_bound, 3.0, true));
        levels.push(level);
    }
    checks.push(check("P(rho = inf) >= 1 - 3 eps", None, rho_infinite, 1.0 - 3.0 * eps, 3.0, false));
    let pass = checks.iter().all(|c| c.pass);

    let report = PipelineReport {
        epsilon: eps,
        sup_bound,
        c_probe,
        c,
        probe,
        window: config.window,
        levels,
        rho_infinite,
        mazur_norms: mazur.norms(ens.n_paths()),
        checks,
        pass,
    };
    Ok(PipelineOutcome {
        report,
        rhos,
        rho,
        mazur,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::exec::Serial;
    use crate::paths::{make_grid, simulate, ProcessModel};

    fn sim(model: ProcessModel, level: u32, n: usize, seed: u64) -> PathEnsemble {
        simulate(&model, make_grid(level).unwrap(), n, seed).unwrap()
    }

    #[test]
    fn monotone_deterministic_never_stops() {
        let lin = sim(ProcessModel::linear(), 8, 100, 0);
        let out = theorem1_pipeline(&Serial, &lin, &PipelineConfig::new(vec![4, 5, 6, 7, 8], 0.1)).unwrap();
        let r = &out.report;
        assert!(r.pass, "{:?}", r.failures().collect::<Vec<_>>());
        assert!(r.c > 2.0 * r.sup_bound + 1.0 - 1e-12);
        assert!(out.rhos.iter().all(|x| x.fraction_infinite() == 1.0));
        assert_eq!(out.rho.fraction_infinite(), 1.0);
        for l in &r.levels {
            assert!((l.variation_rho.mean - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn truncated_brownian_passes() {
        let e = sim(ProcessModel::truncated(ProcessModel::brownian(0.0, 1.0), 1.0), 8, 1000, 3);
        let out = theorem1_pipeline(&Serial, &e, &PipelineConfig::new(vec![4, 5, 6, 7, 8], 0.1)).unwrap();
        let r = &out.report;
        assert!(r.pass, "{:?}", r.failures().collect::<Vec<_>>());
        // single source of truth for C
        assert_eq!(r.c_probe, r.probe.max_c());
        assert!(r.c - 2.0 * r.sup_bound >= r.c_probe);
        assert!(r.c - 2.0 * r.sup_bound <= r.c_probe + 1e-12);
        assert!(r.rho_infinite.mean >= 0.7);
    }

    #[test]
    fn refuses_unbounded_models() {
        let bm = sim(ProcessModel::brownian(0.0, 1.0), 6, 10, 0);
        assert!(matches!(
            theorem1_pipeline(&Serial, &bm, &PipelineConfig::new(vec![4, 5, 6], 0.1)),
            Err(Error::Domain(_))
        ));
        let lin = sim(ProcessModel::linear(), 6, 10, 0);
        assert!(theorem1_pipeline(&Serial, &lin, &PipelineConfig::new(vec![4, 5], 0.1)).is_err());
        assert!(theorem1_pipeline(&Serial, &lin, &PipelineConfig::new(vec![5, 4, 6], 0.1)).is_err());
    }
}
