//! Flat `key = value` scenario files with dotted keys, overridable from the
//! command line.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use bdlab_core::limits::{ProbeIntegrand, RiemannWitness, Thresholds, DEFAULT_WINDOW};
use bdlab_core::paths::{SynthesisPreference, DEFAULT_LEVEL_CAP};
use bdlab_core::{OracleKind, ProcessModel};

/// Every key a scenario file or `--key value` override may set.
pub const KEYS: &[&str] = &[
    "model.kind",
    "model.drift",
    "model.volatility",
    "model.hurst",
    "model.rate",
    "model.reversion",
    "model.knots",
    "model.inner",
    "model.bound",
    "grid.level",
    "synthesis",
    "levels",
    "paths",
    "seed",
    "epsilon",
    "oracle.kind",
    "oracle.bandwidth",
    "probe.family",
    "riemann.witnesses",
    "mazur.window",
    "mazur.count",
    "decompose.kind",
    "thresholds.conv",
    "thresholds.div",
    "thresholds.exponent_bounded",
    "thresholds.exponent_unbounded",
    "thresholds.min_fit",
    "output.integrands",
    "out",
    "format",
    "threads",
];

/// Raw key/value settings; later inserts win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    map: BTreeMap<String, String>,
}

impl Settings {
    /// Parses `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Self::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`, got `{line}`", no + 1))?;
            s.set(k.trim(), v.trim()).with_context(|| format!("line {}", no + 1))?;
        }
        Ok(s)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            bail!("unknown setting `{key}`");
        }
        self.map.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| anyhow!("{key} = `{v}`: {e}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecomposeKind {
    Doob,
    Rao,
    Both,
}

/// A fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub model: ProcessModel,
    /// Level of the simulation grid.
    pub grid_level: u32,
    pub synthesis: SynthesisPreference,
    /// Levels at which statistics are reported.
    pub levels: Vec<u32>,
    pub n_paths: usize,
    pub seed: u64,
    pub epsilon: f64,
    /// `None` selects the model's exact oracle.
    pub oracle: Option<OracleKind>,
    pub family: Vec<ProbeIntegrand>,
    pub witnesses: Vec<RiemannWitness>,
    pub window: usize,
    pub mazur_count: usize,
    pub decompose: DecomposeKind,
    pub thresholds: Thresholds,
    pub dump_integrands: bool,
    pub out: PathBuf,
    pub format: Format,
    /// 0 lets rayon decide.
    pub threads: usize,
}

/// `4..12` (inclusive), `4..=12`, or `4,6,8`.
pub fn parse_levels(s: &str) -> Result<Vec<u32>> {
    let s = s.trim();
    let levels: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().with_context(|| format!("levels `{s}`"))?;
        let b: u32 = b.trim().trim_start_matches('=').trim().parse().with_context(|| format!("levels `{s}`"))?;
        if a > b {
            bail!("empty level range `{s}`");
        }
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|x| x.trim().parse::<u32>().with_context(|| format!("levels `{s}`")))
            .collect::<Result<_>>()?
    };
    if levels.is_empty() {
        bail!("no levels given");
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        bail!("levels must be strictly increasing, got `{s}`");
    }
    Ok(levels)
}

fn list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

fn knots(s: &str) -> Result<Vec<(f64, f64)>> {
    list(s)
        .map(|pair| {
            let (t, v) = pair
                .split_once(':')
                .ok_or_else(|| anyhow!("knot `{pair}` is not `time:value`"))?;
            Ok((t.trim().parse()?, v.trim().parse()?))
        })
        .collect()
}

fn base_model(kind: &str, s: &Settings) -> Result<ProcessModel> {
    let f = |key: &str, default: f64| s.parsed(key, default);
    Ok(match kind {
        "brownian_motion" | "bm" => ProcessModel::brownian(f("model.drift", 0.0)?, f("model.volatility", 1.0)?),
        "fractional_brownian_motion" | "fbm" => ProcessModel::fbm(f("model.hurst", 0.75)?),
        "compensated_poisson" | "poisson" => ProcessModel::CompensatedPoisson {
            rate: f("model.rate", 1.0)?,
        },
        "squared_brownian" => ProcessModel::SquaredBrownian,
        "ornstein_uhlenbeck" | "ou" => ProcessModel::OrnsteinUhlenbeck {
            reversion: f("model.reversion", 1.0)?,
            volatility: f("model.volatility", 1.0)?,
        },
        "deterministic_function" | "deterministic" => match s.get("model.knots") {
            Some(k) => ProcessModel::DeterministicFunction { knots: knots(k)? },
            None => ProcessModel::linear(),
        },
        other => bail!("unknown model kind `{other}`"),
    })
}

fn model(s: &Settings) -> Result<ProcessModel> {
    let kind = s.get("model.kind").unwrap_or("brownian_motion");
    let m = match kind {
        "bounded_truncation" | "truncated" => {
            let inner = base_model(s.get("model.inner").unwrap_or("brownian_motion"), s)?;
            ProcessModel::truncated(inner, s.parsed("model.bound", 1.0)?)
        }
        k => base_model(k, s)?,
    };
    m.validate()?;
    Ok(m)
}

fn oracle(s: &Settings) -> Result<Option<OracleKind>> {
    Ok(match s.get("oracle.kind").unwrap_or("auto") {
        "auto" | "exact" => None,
        "analytic" => Some(OracleKind::Analytic),
        "gaussian_linear" => Some(OracleKind::GaussianLinear),
        "kernel_regression" => Some(OracleKind::KernelRegression {
            bandwidth: s.parsed("oracle.bandwidth", 0.25)?,
        }),
        other => bail!("unknown oracle kind `{other}`"),
    })
}

impl ScenarioConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let levels = parse_levels(s.get("levels").unwrap_or("4..12"))?;
        let finest = *levels.last().expect("non-empty");
        let grid_level: u32 = s.parsed("grid.level", finest)?;
        if grid_level > DEFAULT_LEVEL_CAP {
            bail!("grid.level {grid_level} exceeds the cap {DEFAULT_LEVEL_CAP}");
        }
        if finest > grid_level {
            bail!("level {finest} is finer than grid.level {grid_level}");
        }
        let thresholds = {
            let d = Thresholds::default();
            Thresholds {
                conv: s.parsed("thresholds.conv", d.conv)?,
                div: s.parsed("thresholds.div", d.div)?,
                exponent_bounded: s.parsed("thresholds.exponent_bounded", d.exponent_bounded)?,
                exponent_unbounded: s.parsed("thresholds.exponent_unbounded", d.exponent_unbounded)?,
                min_fit: s.parsed("thresholds.min_fit", d.min_fit)?,
            }
        };
        let family = match s.get("probe.family") {
            Some(f) => list(f).map(ProbeIntegrand::parse).collect::<Result<Vec<_>, _>>()?,
            None => vec![ProbeIntegrand::LaggedSign1, ProbeIntegrand::LaggedSign2, ProbeIntegrand::RandomSign],
        };
        let witnesses = match s.get("riemann.witnesses") {
            Some(w) => list(w).map(RiemannWitness::parse).collect::<Result<Vec<_>, _>>()?,
            None => vec![
                RiemannWitness::Constant(1.0),
                RiemannWitness::Path,
                RiemannWitness::GaussianBump,
            ],
        };
        let n_paths: usize = s.parsed("paths", 10_000)?;
        if n_paths == 0 {
            bail!("paths must be at least 1");
        }
        Ok(Self {
            model: model(s)?,
            grid_level,
            synthesis: match s.get("synthesis").unwrap_or("auto") {
                "auto" => SynthesisPreference::Auto,
                "cholesky" => SynthesisPreference::Cholesky,
                other => bail!("unknown synthesis `{other}`"),
            },
            levels,
            n_paths,
            seed: s.parsed("seed", 0)?,
            epsilon: s.parsed("epsilon", 0.1)?,
            oracle: oracle(s)?,
            family,
            witnesses,
            window: s.parsed("mazur.window", DEFAULT_WINDOW)?,
            mazur_count: s.parsed("mazur.count", 16)?,
            decompose: match s.get("decompose.kind").unwrap_or("both") {
                "doob" => DecomposeKind::Doob,
                "rao" => DecomposeKind::Rao,
                "both" => DecomposeKind::Both,
                other => bail!("unknown decompose.kind `{other}`"),
            },
            thresholds,
            dump_integrands: s.parsed("output.integrands", false)?,
            out: PathBuf::from(s.get("out").unwrap_or("out")),
            format: match s.get("format").unwrap_or("csv") {
                "csv" => Format::Csv,
                "json" => Format::Json,
                other => bail!("unknown format `{other}` (csv or json)"),
            },
            threads: s.parsed("threads", 0)?,
        })
    }

    /// Verdict-producing commands need a sample large enough for quantiles.
    pub fn require_verdict_sample(&self) -> Result<()> {
        if self.n_paths < 100 {
            bail!("verdict commands need paths >= 100, got {}", self.n_paths);
        }
        Ok(())
    }

    pub fn oracle_kind(&self) -> Result<OracleKind> {
        match self.oracle {
            Some(k) => Ok(k),
            None => Ok(OracleKind::exact_for(&self.model)?),
        }
    }
}
