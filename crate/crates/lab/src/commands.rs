//! One function per subcommand. Each is a pure function of the scenario:
//! the same config and seed give the same bytes on disk.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Result};
use bdlab_core::integrands::sup_norm;
use bdlab_core::limits::{
    good_integrator_probe, mazur_sequence, riemann_integrator_test, theorem1_pipeline, PipelineConfig, ProbeConfig,
};
use bdlab_core::paths::{make_grid, simulate_with};
use bdlab_core::stats::estimate;
use bdlab_core::variation::{doob_decompose, drift_table_with, rao_decompose, MeanVariationReport};
use bdlab_core::{DyadicGrid, PathEnsemble};
use serde::Serialize;

use crate::config::{DecomposeKind, Format, ScenarioConfig};
use crate::exec::Parallel;
use crate::output::{Quantity, Sink};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    MeanVariation,
    Decompose,
    Probe,
    Riemann,
    Theorem1,
    MazurDemo,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::MeanVariation => "mean-variation",
            Self::Decompose => "decompose",
            Self::Probe => "probe",
            Self::Riemann => "riemann",
            Self::Theorem1 => "theorem1",
            Self::MazurDemo => "mazur-demo",
        }
    }
}

/// A violated postcondition, as listed in `failures.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub check: String,
    pub level: Option<u32>,
    pub value: f64,
    pub bound: f64,
    pub stderr: Option<f64>,
}

#[derive(Debug, Default)]
pub struct Outcome {
    /// Human-readable lines for stdout.
    pub summary: Vec<String>,
    /// Printed to stderr with a `WARN` prefix.
    pub warnings: Vec<String>,
    pub failures: Vec<Failure>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Provenance written next to every ensemble.
#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    model: &'a bdlab_core::ProcessModel,
    seed: u64,
    grid_level: u32,
    n_paths: usize,
    synthesis_method: &'static str,
}

fn sidecar(e: &PathEnsemble) -> Sidecar<'_> {
    Sidecar {
        model: e.model(),
        seed: e.seed(),
        grid_level: e.grid().level(),
        n_paths: e.n_paths(),
        synthesis_method: e.synthesis().as_str(),
    }
}

pub fn ensemble(cfg: &ScenarioConfig) -> Result<PathEnsemble> {
    let grid = make_grid(cfg.grid_level)?;
    Ok(simulate_with(&Parallel, &cfg.model, grid, cfg.n_paths, cfg.seed, cfg.synthesis)?)
}

/// Runs a subcommand and writes its files (plus `failures.json` when a
/// postcondition fails) below `cfg.out`.
pub fn run(cmd: Command, cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut sink = Sink::new(&cfg.out)?;
    let stale = cfg.out.join("failures.json");
    if stale.exists() {
        fs::remove_file(&stale)?;
    }
    let mut out = Outcome::default();
    match cmd {
        Command::Simulate => simulate(cfg, &mut sink, &mut out)?,
        Command::MeanVariation => mean_variation(cfg, &mut sink, &mut out)?,
        Command::Decompose => decompose(cfg, &mut sink, &mut out)?,
        Command::Probe => probe(cfg, &mut sink, &mut out)?,
        Command::Riemann => riemann(cfg, &mut sink, &mut out)?,
        Command::Theorem1 => theorem1(cfg, &mut sink, &mut out)?,
        Command::MazurDemo => mazur_demo(cfg, &mut sink, &mut out)?,
    }
    if !out.failures.is_empty() {
        sink.json("failures.json", &out.failures)?;
    }
    out.files = sink.files().to_vec();
    Ok(out)
}

fn simulate(cfg: &ScenarioConfig, sink: &mut Sink, out: &mut Outcome) -> Result<()> {
    let e = ensemble(cfg)?;
    match cfg.format {
        Format::Csv => {
            sink.ensembles("ensemble.csv", &[("", &e)])?;
            sink.json("ensemble.json", &sidecar(&e))?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Full<'a> {
                #[serde(flatten)]
                meta: Sidecar<'a>,
                values: Vec<&'a [f64]>,
            }
            sink.json(
                "ensemble.json",
                &Full {
                    meta: sidecar(&e),
                    values: e.rows().collect(),
                },
            )?;
        }
    }
    out.summary.push(format!(
        "{} paths of {} on D_{} ({})",
        e.n_paths(),
        e.model().name(),
        e.grid().level(),
        e.synthesis().as_str()
    ));
    Ok(())
}

fn warn_sup_bound(e: &PathEnsemble, out: &mut Outcome) {
    let (b, declared) = e.sup_bound();
    if !declared {
        out.warnings.push(format!(
            "sup |S| bound {b} is the sample maximum; the model declares no bound"
        ));
    }
}

fn mean_variation(cfg: &ScenarioConfig, sink: &mut Sink, out: &mut Outcome) -> Result<()> {
    let e = ensemble(cfg)?;
    let kind = cfg.oracle_kind()?;
    warn_sup_bound(&e, out);
    let entries = cfg
        .levels
        .iter()
        .map(|&n| Ok(drift_table_with(&Parallel, &e, kind, DyadicGrid::with_cap(n, cfg.grid_level)?)?.mean_variation()))
        .collect::<Result<Vec<_>>>()?;
    let (b, declared) = e.sup_bound();
    let report = MeanVariationReport::new(entries, b, declared);
    match cfg.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .entries
                .iter()
                .map(|r| {
                    vec![
                        r.level.to_string(),
                        r.estimate.to_string(),
                        r.stderr.to_string(),
                        r.oracle.name().to_string(),
                        r.stopped.to_string(),
                    ]
                })
                .collect();
            sink.table("mean_variation.csv", "level,estimate,stderr,oracle,stopped", &rows)?;
        }
        Format::Json => sink.json("mean_variation.json", &report)?,
    }
    for r in &report.entries {
        out.summary.push(format!("Var(S, D_{}) = {} ± {}", r.level, r.estimate, r.stderr));
    }
    out.summary.push(format!("trend: {:?}", report.trend));
    // refinement can only increase the mean variation; with an estimated
    // oracle the sequence is only approximately monotone, so it is not asserted
    if kind.is_exact() {
        for w in report.entries.windows(2) {
            let se = (w[0].stderr * w[0].stderr + w[1].stderr * w[1].stderr).sqrt();
            if w[1].estimate < w[0].estimate - 3.0 * se {
                out.failures.push(Failure {
                    check: "Var(S, D_n) non-decreasing in n".into(),
                    level: Some(w[1].level),
                    value: w[1].estimate,
                    bound: w[0].estimate,
                    stderr: Some(se),
                });
            }
        }
    }
    Ok(())
}

fn decompose(cfg: &ScenarioConfig, sink: &mut Sink, out: &mut Outcome) -> Result<()> {
    let e = ensemble(cfg)?;
    let kind = cfg.oracle_kind()?;
    let doob = matches!(cfg.decompose, DecomposeKind::Doob | DecomposeKind::Both)
        .then(|| doob_decompose(&e, kind))
        .transpose()?;
    let rao = matches!(cfg.decompose, DecomposeKind::Rao | DecomposeKind::Both)
        .then(|| rao_decompose(&e, kind))
        .transpose()?;

    #[derive(Serialize)]
    struct Component<'a> {
        component: &'static str,
        values: Vec<&'a [f64]>,
    }
    #[derive(Serialize)]
    struct Meta<'a> {
        #[serde(flatten)]
        ensemble: Sidecar<'a>,
        oracle: bdlab_core::OracleKind,
        /// Worst reconstruction error in units of one rounding.
        doob_ulps: Option<f64>,
        rao_ulps: Option<f64>,
        #[serde(skip_serializing_if = "Vec::is_empty")]
        components: Vec<Component<'a>>,
    }
    let mut meta = Meta {
        ensemble: sidecar(&e),
        oracle: kind,
        doob_ulps: doob.as_ref().map(|d| d.reconstruction_ulps(&e)),
        rao_ulps: rao.as_ref().map(|r| r.reconstruction_ulps(&e)),
        components: Vec::new(),
    };
    let mut parts: Vec<(&'static str, &PathEnsemble)> = Vec::new();
    if let Some(d) = &doob {
        parts.push(("M", d.martingale()));
        parts.push(("A", d.compensator()));
    }
    if let Some(r) = &rao {
        parts.push(("Y", r.y()));
        parts.push(("Z", r.z()));
    }
    match cfg.format {
        Format::Csv => {
            if doob.is_some() {
                sink.ensembles("doob.csv", &parts[..2])?;
            }
            if rao.is_some() {
                sink.ensembles("rao.csv", &parts[parts.len() - 2..])?;
            }
        }
        Format::Json => {
            meta.components = parts
                .iter()
                .map(|(c, ens)| Component {
                    component: c,
                    values: ens.rows().collect(),
                })
                .collect();
        }
    }
    sink.json("decompose.json", &meta)?;
    for (name, ulps) in [("M + A = S", meta.doob_ulps), ("Y - Z = S", meta.rao_ulps)] {
        if let Some(u) = ulps {
            out.summary.push(format!("{name}: worst error {u} ulp"));
            if u > 1.0 {
                out.failures.push(Failure {
                    check: format!("{name} to one rounding"),
                    level: Some(cfg.grid_level),
                    value: u,
                    bound: 1.0,
                    stderr: None,
                });
            }
        }
    }
    if let Some(r) = &rao {
        let negative = r.y_drift().iter().chain(r.z_drift()).filter(|&&d| d < 0.0).count();
        if negative > 0 {
            out.failures.push(Failure {
                check: "Y and Z are submartingales".into(),
                level: Some(cfg.grid_level),
                value: negative as f64,
                bound: 0.0,
                stderr: None,
            });
        }
    }
    Ok(())
}

fn probe(cfg: &ScenarioConfig, sink: &mut Sink, out: &mut Outcome) -> Result<()> {
    cfg.require_verdict_sample()?;
    let e = ensemble(cfg)?;
    let config = ProbeConfig {
        levels: cfg.levels.clone(),
        epsilon: cfg.epsilon,
        family: cfg.family.clone(),
        oracle: cfg.oracle,
        seed: cfg.seed,
        thresholds: cfg.thresholds,
    };
    let result = good_integrator_probe(&Parallel, &e, &config)?;
    match cfg.format {
        Format::Csv => {
            let mut rows: Vec<Quantity> = result
                .levels
                .iter()
                .map(|l| Quantity::new(Some(l.n), "C", l.c, Some(l.stderr)))
                .collect();
            rows.push(Quantity::new(None, "exponent", result.exponent, None));
            rows.push(Quantity::new(None, "fit", result.fit, None));
            sink.quantities("probe.csv", &rows)?;
        }
        Format::Json => sink.json("probe.json", &result)?,
    }
    let finest = *cfg.levels.last().expect("levels are non-empty");
    for member in &cfg.family {
        let h = member.build(&Parallel, &e, finest, cfg.oracle, cfg.seed)?;
        let bound = sup_norm(&h);
        if bound > 1.0 {
            out.failures.push(Failure {
                check: format!("{} has sup norm <= 1", member.name()),
                level: Some(finest),
                value: bound,
                bound: 1.0,
                stderr: None,
            });
        }
        if cfg.dump_integrands {
            #[derive(Serialize)]
            struct Tag {
                kind: &'static str,
                lag: usize,
                bound: f64,
            }
            sink.integrand(&format!("integrand_{}.csv", member.name()), &h)?;
            sink.json(
                &format!("integrand_{}.json", member.name()),
                &Tag {
                    kind: member.name(),
                    lag: h.tag().lag(),
                    bound,
                },
            )?;
        }
    }
    for l in &result.levels {
        out.summary.push(format!("C({}, {}) = {} ± {}", cfg.epsilon, l.n, l.c, l.stderr));
    }
    out.summary.push(format!(
        "verdict: {} (exponent {:.4}, R² {:.4}; {})",
        result.verdict.as_str(),
        result.exponent,
        result.fit,
        result.note
    ));
    Ok(())
}

fn riemann(cfg: &ScenarioConfig, sink: &mut Sink, out: &mut Outcome) -> Result<()> {
    cfg.require_verdict_sample()?;
    let e = ensemble(cfg)?;
    let report = riemann_integrator_test(&e, &cfg.witnesses, &cfg.levels, cfg.thresholds)?;
    match cfg.format {
        Format::Csv => {
            let mut rows = Vec::new();
            for w in &report.witnesses {
                let last = w.report.levels.len() - 1;
                for (i, &n) in w.report.levels.iter().enumerate() {
                    rows.push(Quantity::new(
                        Some(n),
                        format!("ky_fan_to_finest[{}]", w.witness),
                        w.report.distance(i, last),
                        None,
                    ));
                }
            }
            sink.quantities("riemann.csv", &rows)?;
        }
        Format::Json => sink.json("riemann.json", &report)?,
    }
    for w in &report.witnesses {
        out.summary.push(format!(
            "K = {}: {} (top-half max distance {:.4})",
            w.witness,
            w.report.verdict.as_str(),
            w.report.top_max
        ));
    }
    out.summary.push(format!("Riemann integrator: {}", report.verdict.as_str()));
    Ok(())
}

fn theorem1(cfg: &ScenarioConfig, sink: &mut Sink, out: &mut Outcome) -> Result<()> {
    cfg.require_verdict_sample()?;
    let e = ensemble(cfg)?;
    let config = PipelineConfig {
        levels: cfg.levels.clone(),
        epsilon: cfg.epsilon,
        window: cfg.window,
        oracle: cfg.oracle,
        family: cfg.family.clone(),
        seed: cfg.seed,
        thresholds: cfg.thresholds,
    };
    let outcome = theorem1_pipeline(&Parallel, &e, &config)?;
    let r = &outcome.report;
    match cfg.format {
        Format::Csv => {
            let mut rows = Vec::new();
            for (l, p) in r.levels.iter().zip(&r.probe.levels) {
                let n = Some(l.n);
                rows.push(Quantity::new(n, "C(eps,n)", p.c, Some(p.stderr)));
                rows.push(Quantity::new(n, "P(rho_n=inf)", l.rho_n_infinite.mean, Some(l.rho_n_infinite.stderr)));
                rows.push(Quantity::new(n, "E[(H^n.S)^rho_n]", l.stopped_integral.mean, Some(l.stopped_integral.stderr)));
                rows.push(Quantity::new(n, "Var(S^rho_n;D_n)", l.variation_rho_n.mean, Some(l.variation_rho_n.stderr)));
                rows.push(Quantity::new(n, "Var(S^rho;D_n)", l.variation_rho.mean, Some(l.variation_rho.stderr)));
            }
            for (l, norm) in r.levels.iter().zip(&r.mazur_norms) {
                rows.push(Quantity::new(Some(l.n), "mazur_norm", *norm, None));
            }
            rows.push(Quantity::new(None, "C", r.c, None));
            rows.push(Quantity::new(None, "sup_bound", r.sup_bound, None));
            rows.push(Quantity::new(None, "P(rho=inf)", r.rho_infinite.mean, Some(r.rho_infinite.stderr)));
            sink.quantities("theorem1.csv", &rows)?;
            let checks: Vec<Vec<String>> = r
                .checks
                .iter()
                .map(|c| {
                    vec![
                        crate::output::csv_field(&c.name),
                        c.level.map(|l| l.to_string()).unwrap_or_default(),
                        c.value.to_string(),
                        c.stderr.to_string(),
                        c.bound.to_string(),
                        if c.pass { "PASS" } else { "FAIL" }.to_string(),
                    ]
                })
                .collect();
            sink.table("theorem1_checks.csv", "check,level,value,stderr,bound,result", &checks)?;
        }
        Format::Json => sink.json("theorem1.json", r)?,
    }
    for c in r.failures() {
        out.failures.push(Failure {
            check: c.name.clone(),
            level: c.level,
            value: c.value,
            bound: c.bound,
            stderr: Some(c.stderr),
        });
    }
    out.summary.push(format!(
        "C = {} (probe quantile {} + 2·{}), P(rho = inf) = {} ± {}",
        r.c, r.c_probe, r.sup_bound, r.rho_infinite.mean, r.rho_infinite.stderr
    ));
    out.summary.push(format!(
        "{}: {} of {} checks passed",
        if r.pass { "PASS" } else { "FAIL" },
        r.checks.iter().filter(|c| c.pass).count(),
        r.checks.len()
    ));
    Ok(())
}

/// Mazur's lemma on the standardized grid increments of the model: a weakly
/// null sequence with unit norms whose tail min-norm combinations shrink.
fn mazur_demo(cfg: &ScenarioConfig, sink: &mut Sink, out: &mut Outcome) -> Result<()> {
    let e = ensemble(cfg)?;
    let steps = e.grid().steps();
    if cfg.mazur_count == 0 || cfg.mazur_count > steps {
        bail!("mazur.count must lie in 1..={steps}");
    }
    let xs: Vec<Vec<f64>> = (0..cfg.mazur_count)
        .map(|k| {
            let inc: Vec<f64> = e.rows().map(|r| r[k + 1] - r[k]).collect();
            let sd = bdlab_core::stats::variance(&inc).sqrt();
            let scale = if sd > 0.0 { 1.0 / sd } else { 1.0 };
            inc.iter().map(|x| x * scale).collect()
        })
        .collect();
    let seq = mazur_sequence(&xs, cfg.window)?;
    let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    let norms_x: Vec<f64> = xs.iter().map(|x| rms(x)).collect();
    let norms_y = seq.norms(e.n_paths());
    let means: Vec<_> = seq.combinations(&xs).iter().map(|y| estimate(y)).collect();
    match cfg.format {
        Format::Csv => {
            let mut rows = Vec::new();
            for k in 0..xs.len() {
                let k32 = k as u32;
                rows.push(Quantity::new(Some(k32), "norm_x", norms_x[k], None));
                rows.push(Quantity::new(Some(k32), "norm_y", norms_y[k], None));
                rows.push(Quantity::new(Some(k32), "mean_y", means[k].mean, Some(means[k].stderr)));
                rows.push(Quantity::new(Some(k32), "gap", seq.weights[k].gap, None));
            }
            sink.quantities("mazur.csv", &rows)?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Demo<'a> {
                norms_x: &'a [f64],
                norms_y: &'a [f64],
                sequence: &'a bdlab_core::limits::MazurSequence,
            }
            sink.json(
                "mazur.json",
                &Demo {
                    norms_x: &norms_x,
                    norms_y: &norms_y,
                    sequence: &seq,
                },
            )?;
        }
    }
    for (k, w) in seq.weights.iter().enumerate() {
        let best_vertex = norms_x[w.start..w.end].iter().copied().fold(f64::INFINITY, f64::min);
        if norms_y[k] > best_vertex * (1.0 + 1e-9) + 1e-12 {
            out.failures.push(Failure {
                check: "min-norm combination no longer than its best vertex".into(),
                level: Some(k as u32),
                value: norms_y[k],
                bound: best_vertex,
                stderr: None,
            });
        }
    }
    // tails shorter than the window are not comparable, so only full windows
    let full = seq.weights.iter().filter(|w| w.end - w.start == cfg.window).count().max(1);
    let worst = norms_y[..full].iter().copied().fold(0.0, f64::max);
    out.summary.push(format!(
        "‖X_k‖ ≈ {:.4}; max ‖Y_k‖ over {full} full windows of {} = {:.4}",
        norms_x.iter().sum::<f64>() / norms_x.len() as f64,
        cfg.window,
        worst
    ));
    Ok(())
}
