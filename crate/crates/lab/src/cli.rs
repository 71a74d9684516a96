//! Argument parsing and the process entry point.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{run, Command, Outcome};
use crate::config::{ScenarioConfig, Settings};

#[derive(Debug, Parser)]
#[command(
    name = "bdlab",
    version,
    about = "Good-integrator and mean-variation experiments on dyadic grids",
    after_help = "Any dotted setting from a config file can also be given as a flag, e.g. `--model.kind fbm --model.hurst 0.25`."
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Flat `key = value` scenario file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `4..12` (inclusive) or a comma list.
    #[arg(long, global = true)]
    levels: Option<String>,
    /// Number of sample paths.
    #[arg(long, global = true)]
    paths: Option<usize>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads (0: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Sub {
    /// Simulate paths and write them with a provenance sidecar.
    Simulate,
    /// Mean variation Var(S, D_n) per level.
    MeanVariation,
    /// Doob (M, A) and Rao (Y, Z) decompositions.
    Decompose,
    /// Good-integrator probe: C(eps, n) and its growth exponent.
    Probe,
    /// Cauchy test of dyadic Riemann sums.
    Riemann,
    /// Localization of a bounded model to finite mean variation.
    Theorem1,
    /// Min-norm tail combinations of a weakly null sequence.
    MazurDemo,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Simulate => Command::Simulate,
            Sub::MeanVariation => Command::MeanVariation,
            Sub::Decompose => Command::Decompose,
            Sub::Probe => Command::Probe,
            Sub::Riemann => Command::Riemann,
            Sub::Theorem1 => Command::Theorem1,
            Sub::MazurDemo => Command::MazurDemo,
        }
    }
}

/// Pulls `--a.b value` and `--a.b=value` out of the argument list.
fn split_dotted(args: Vec<OsString>) -> Result<(Vec<OsString>, Vec<(String, String)>)> {
    let mut rest = Vec::new();
    let mut dotted = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(s) = arg.to_str().and_then(|s| s.strip_prefix("--")) else {
            rest.push(arg);
            continue;
        };
        let (key, inline) = match s.split_once('=') {
            Some((k, v)) => (k, Some(v.to_string())),
            None => (s, None),
        };
        if !key.contains('.') {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it
                .next()
                .and_then(|v| v.into_string().ok())
                .ok_or_else(|| anyhow!("--{key} needs a value"))?,
        };
        dotted.push((key.to_string(), value));
    }
    Ok((rest, dotted))
}

fn resolve(cli: &Cli, dotted: &[(String, String)]) -> Result<ScenarioConfig> {
    let mut s = match &cli.config {
        Some(p) => Settings::parse(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("in {}", p.display()))?,
        None => Settings::default(),
    };
    for (k, v) in dotted {
        s.set(k, v)?;
    }
    let named = [
        ("seed", cli.seed.map(|x| x.to_string())),
        ("levels", cli.levels.clone()),
        ("paths", cli.paths.map(|x| x.to_string())),
        ("epsilon", cli.epsilon.map(|x| x.to_string())),
        ("out", cli.out.as_ref().map(|p| p.display().to_string())),
        (
            "format",
            cli.format.map(|f| match f {
                FormatArg::Csv => "csv".to_string(),
                FormatArg::Json => "json".to_string(),
            }),
        ),
        ("threads", cli.threads.map(|x| x.to_string())),
    ];
    for (k, v) in named {
        if let Some(v) = v {
            s.set(k, &v)?;
        }
    }
    ScenarioConfig::from_settings(&s)
}

/// Parses, runs and reports. Exit code 0 when every postcondition holds, 1
/// when some failed (listed in `failures.json`), 2 on usage or runtime errors.
pub fn main(args: impl IntoIterator<Item = OsString>) -> i32 {
    let (rest, dotted) = match split_dotted(args.into_iter().collect()) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(rest) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli, &dotted) {
        Ok(outcome) => report(&outcome),
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn execute(cli: &Cli, dotted: &[(String, String)]) -> Result<Outcome> {
    let cfg = resolve(cli, dotted)?;
    let cmd = Command::from(cli.command);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build()?;
    pool.install(|| run(cmd, &cfg)).with_context(|| format!("{} failed", cmd.name()))
}

fn report(o: &Outcome) -> i32 {
    for w in &o.warnings {
        eprintln!("WARN: {w}");
    }
    for line in &o.summary {
        println!("{line}");
    }
    for f in &o.files {
        println!("wrote {}", f.display());
    }
    if o.passed() {
        0
    } else {
        for f in &o.failures {
            eprintln!(
                "FAIL: {}{}: {} vs bound {}",
                f.check,
                f.level.map(|l| format!(" (level {l})")).unwrap_or_default(),
                f.value,
                f.bound
            );
        }
        1
    }
}
