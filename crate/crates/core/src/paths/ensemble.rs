use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::fft::Fft;
use super::grid::DyadicGrid;
use super::model::{fgn_autocovariance, ProcessModel};
use super::rng::{stream, DOMAIN_SIMULATE};
use crate::error::{Error, Result};
use crate::exec::{Executor, Serial};
use crate::math::{expm1, powf, sqrt};

/// How the sample paths were synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisMethod {
    /// Independent-increment recursion or tabulation.
    Direct,
    /// fBm via circulant embedding of the fGn covariance (Davies–Harte).
    CirculantEmbedding,
    /// fBm via dense Cholesky factorization of the fGn covariance.
    Cholesky,
    /// Not simulated: a transformation of another ensemble.
    Derived,
}

impl SynthesisMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Direct => "direct",
            Self::CirculantEmbedding => "circulant_embedding",
            Self::Cholesky => "cholesky",
            Self::Derived => "derived",
        }
    }
}

/// Preferred fBm synthesis route; circulant embedding still falls back to
/// Cholesky when the embedding has negative eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SynthesisPreference {
    #[default]
    Auto,
    Cholesky,
}

/// Largest fGn length for which the dense Cholesky route is allowed.
const CHOLESKY_MAX_STEPS: usize = 2048;

/// `N` sample paths of a model on a dyadic grid.
///
/// `values` is row-major, one row of `grid.len()` entries per path. For
/// truncated models `latent` holds the inner (unclamped) paths, which generate
/// the filtration used by the drift oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    grid: DyadicGrid,
    n_paths: usize,
    values: Vec<f64>,
    latent: Option<Vec<f64>>,
    model: ProcessModel,
    seed: u64,
    synthesis: SynthesisMethod,
    label: Option<String>,
}

impl PathEnsemble {
    /// Wraps an explicit value matrix; used for hand-built processes and
    /// for reading ensembles back from disk.
    pub fn from_values(
        grid: DyadicGrid,
        values: Vec<f64>,
        model: ProcessModel,
        seed: u64,
        synthesis: SynthesisMethod,
    ) -> Result<Self> {
        let len = grid.len();
        if values.is_empty() || values.len() % len != 0 {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: len,
            });
        }
        if let Some(x) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite path value {x}")));
        }
        Ok(Self {
            grid,
            n_paths: values.len() / len,
            values,
            latent: None,
            model,
            seed,
            synthesis,
            label: None,
        })
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn model(&self) -> &ProcessModel {
        &self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn synthesis(&self) -> SynthesisMethod {
        self.synthesis
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, p: usize) -> &[f64] {
        let len = self.grid.len();
        &self.values[p * len..(p + 1) * len]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.grid.len())
    }

    pub fn value(&self, p: usize, i: usize) -> f64 {
        self.values[p * self.grid.len() + i]
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows().map(|r| r[i]).collect()
    }

    pub fn terminal(&self) -> Vec<f64> {
        self.column(self.grid.last())
    }

    /// Row of the latent inner process, or of `S` itself when there is none.
    pub fn history(&self, p: usize) -> &[f64] {
        let len = self.grid.len();
        match &self.latent {
            Some(l) => &l[p * len..(p + 1) * len],
            None => self.row(p),
        }
    }

    pub fn has_latent(&self) -> bool {
        self.latent.is_some()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// The model's declared bound on `sup |S|` if any, else the empirical
    /// maximum (flagged `false`, since then it is only a heuristic).
    pub fn sup_bound(&self) -> (f64, bool) {
        match self.model.known_sup_bound() {
            Some(b) => (b, true),
            None => (self.max_abs(), false),
        }
    }

    /// Same provenance, new values; keeps the latent history.
    pub fn derive(&self, values: Vec<f64>, label: impl Into<String>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            grid: self.grid,
            n_paths: self.n_paths,
            values,
            latent: self.latent.clone(),
            model: self.model.clone(),
            seed: self.seed,
            synthesis: SynthesisMethod::Derived,
            label: Some(label.into()),
        }
    }

    /// Copy of the ensemble in which path `dst` agrees with path `src` up to
    /// and including index `upto` (values and latent history), keeping its own
    /// continuation afterwards. Used to check adaptedness by prefix duplication.
    pub fn splice_prefix(&self, src: usize, dst: usize, upto: usize) -> Self {
        let len = self.grid.len();
        let mut out = self.clone();
        let shift = |buf: &mut Vec<f64>| {
            for i in 0..=upto {
                buf[dst * len + i] = buf[src * len + i];
            }
        };
        shift(&mut out.values);
        if let Some(l) = out.latent.as_mut() {
            shift(l);
        }
        out
    }

    pub(crate) fn set_latent(&mut self, latent: Option<Vec<f64>>) {
        self.latent = latent;
    }

    pub(crate) fn ensure_grid(&self, grid: DyadicGrid) -> Result<()> {
        if grid != self.grid {
            return Err(Error::GridMismatch {
                expected: self.grid.level(),
                found: grid.level(),
            });
        }
        Ok(())
    }
}

/// Simulates `n_paths` paths serially. See [`simulate_with`].
pub fn simulate(model: &ProcessModel, grid: DyadicGrid, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    simulate_with(&Serial, model, grid, n_paths, seed, SynthesisPreference::Auto)
}

/// Simulates `n_paths` paths of `model` on `grid`.
///
/// Path `p` draws only from the stream `(seed, p)`, so the result is
/// bit-identical for any executor.
pub fn simulate_with(
    exec: &dyn Executor,
    model: &ProcessModel,
    grid: DyadicGrid,
    n_paths: usize,
    seed: u64,
    pref: SynthesisPreference,
) -> Result<PathEnsemble> {
    model.validate()?;
    if n_paths == 0 {
        return Err(Error::Empty("n_paths must be >= 1"));
    }
    let (source, bound) = match model {
        ProcessModel::BoundedTruncation { inner, bound } => (&**inner, Some(*bound)),
        m => (m, None),
    };
    let sampler = Sampler::new(source, grid, pref)?;
    let len = grid.len();
    let mut values = vec![0.0; n_paths * len];
    exec.for_each_row(&mut values, len, &|p, row| sampler.fill(seed, p, row));

    let synthesis = sampler.method();
    let mut ens = PathEnsemble::from_values(grid, values, model.clone(), seed, synthesis)?;
    if let Some(b) = bound {
        let clamped = ens.values.iter().map(|x| x.clamp(-b, b)).collect();
        let inner = core::mem::replace(&mut ens.values, clamped);
        ens.set_latent(Some(inner));
    }
    Ok(ens)
}

enum Sampler<'a> {
    Brownian { drift: f64, vol: f64, dt: f64 },
    Poisson { rate: f64, dt: f64 },
    Squared { dt: f64 },
    Ou { decay: f64, noise: f64 },
    Deterministic { model: &'a ProcessModel, grid: DyadicGrid },
    Fbm(FgnSynth),
}

impl<'a> Sampler<'a> {
    fn new(model: &'a ProcessModel, grid: DyadicGrid, pref: SynthesisPreference) -> Result<Self> {
        let dt = grid.dt();
        Ok(match model {
            ProcessModel::BrownianMotion { drift, volatility } => Self::Brownian {
                drift: *drift,
                vol: *volatility,
                dt,
            },
            ProcessModel::CompensatedPoisson { rate } => Self::Poisson { rate: *rate, dt },
            ProcessModel::SquaredBrownian => Self::Squared { dt },
            ProcessModel::OrnsteinUhlenbeck { reversion, volatility } => {
                let var = if *reversion > 0.0 {
                    -expm1(-2.0 * reversion * dt) / (2.0 * reversion)
                } else {
                    dt
                };
                Self::Ou {
                    decay: crate::math::exp(-reversion * dt),
                    noise: volatility * sqrt(var),
                }
            }
            ProcessModel::DeterministicFunction { .. } => Self::Deterministic { model, grid },
            ProcessModel::FractionalBrownianMotion { hurst } => Self::Fbm(FgnSynth::new(*hurst, grid, pref)?),
            ProcessModel::BoundedTruncation { .. } => {
                return Err(Error::Domain("nested truncations are not supported".into()))
            }
        })
    }

    fn method(&self) -> SynthesisMethod {
        match self {
            Self::Fbm(f) => f.method(),
            _ => SynthesisMethod::Direct,
        }
    }

    fn fill(&self, seed: u64, p: usize, row: &mut [f64]) {
        let mut rng = stream(seed, DOMAIN_SIMULATE, p as u64);
        match self {
            Self::Brownian { drift, vol, dt } => {
                let sd = vol * sqrt(*dt);
                row[0] = 0.0;
                for i in 1..row.len() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    row[i] = row[i - 1] + drift * dt + sd * z;
                }
            }
            Self::Poisson { rate, dt } => {
                let lam = rate * dt;
                let dist = Poisson::new(lam).ok();
                row[0] = 0.0;
                for i in 1..row.len() {
                    let k: f64 = dist.as_ref().map_or(0.0, |d| d.sample(&mut rng));
                    row[i] = row[i - 1] + (k - lam);
                }
            }
            Self::Squared { dt } => {
                let sd = sqrt(*dt);
                let mut w = 0.0;
                row[0] = 0.0;
                for x in row.iter_mut().skip(1) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    w += sd * z;
                    *x = w * w;
                }
            }
            Self::Ou { decay, noise } => {
                row[0] = 0.0;
                for i in 1..row.len() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    row[i] = row[i - 1] * decay + noise * z;
                }
            }
            Self::Deterministic { model, grid } => {
                for (i, x) in row.iter_mut().enumerate() {
                    *x = model.deterministic_value(grid.time(i));
                }
            }
            Self::Fbm(f) => f.fill(&mut rng, row),
        }
    }
}

/// Exact fractional Gaussian noise synthesis for a fixed grid.
struct FgnSynth {
    steps: usize,
    scale: f64,
    route: FgnRoute,
}

enum FgnRoute {
    /// Square roots of the scaled circulant eigenvalues.
    Circulant { fft: Fft, amp: Vec<f64> },
    /// Lower-triangular factor, row-major.
    Cholesky { factor: Vec<f64> },
}

impl FgnSynth {
    fn new(hurst: f64, grid: DyadicGrid, pref: SynthesisPreference) -> Result<Self> {
        let m = grid.steps();
        let scale = powf(grid.dt(), hurst);
        let route = match pref {
            SynthesisPreference::Auto => match circulant(hurst, m) {
                Some(r) => r,
                None => cholesky(hurst, m)?,
            },
            SynthesisPreference::Cholesky => cholesky(hurst, m)?,
        };
        Ok(Self { steps: m, scale, route })
    }

    fn method(&self) -> SynthesisMethod {
        match self.route {
            FgnRoute::Circulant { .. } => SynthesisMethod::CirculantEmbedding,
            FgnRoute::Cholesky { .. } => SynthesisMethod::Cholesky,
        }
    }

    fn fill<R: Rng>(&self, rng: &mut R, row: &mut [f64]) {
        let m = self.steps;
        let mut incr = vec![0.0; m];
        match &self.route {
            FgnRoute::Circulant { fft, amp } => {
                let n = 2 * m;
                let mut re = vec![0.0; n];
                let mut im = vec![0.0; n];
                re[0] = amp[0] * Distribution::<f64>::sample(&StandardNormal, rng);
                for k in 1..m {
                    let a: f64 = StandardNormal.sample(rng);
                    let b: f64 = StandardNormal.sample(rng);
                    re[k] = amp[k] * a;
                    im[k] = amp[k] * b;
                    re[n - k] = amp[k] * a;
                    im[n - k] = -amp[k] * b;
                }
                re[m] = amp[m] * Distribution::<f64>::sample(&StandardNormal, rng);
                fft.forward(&mut re, &mut im);
                incr.copy_from_slice(&re[..m]);
            }
            FgnRoute::Cholesky { factor } => {
                let z: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
                for (i, x) in incr.iter_mut().enumerate() {
                    let r = &factor[i * m..i * m + i + 1];
                    *x = r.iter().zip(&z).map(|(a, b)| a * b).sum();
                }
            }
        }
        row[0] = 0.0;
        for i in 0..m {
            row[i + 1] = row[i] + self.scale * incr[i];
        }
    }
}

fn circulant(hurst: f64, m: usize) -> Option<FgnRoute> {
    let n = 2 * m;
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for k in 0..=m {
        re[k] = fgn_autocovariance(hurst, k);
    }
    for k in 1..m {
        re[n - k] = re[k];
    }
    let fft = Fft::new(n);
    fft.forward(&mut re, &mut im);
    let max = re.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if re.iter().any(|&l| l < -1e-10 * max.max(1.0)) {
        return None;
    }
    let amp = (0..=m)
        .map(|k| {
            let l = re[k].max(0.0);
            if k == 0 || k == m {
                sqrt(l / n as f64)
            } else {
                sqrt(l / (2 * n) as f64)
            }
        })
        .collect();
    Some(FgnRoute::Circulant { fft, amp })
}

fn cholesky(hurst: f64, m: usize) -> Result<FgnRoute> {
    if m > CHOLESKY_MAX_STEPS {
        return Err(Error::Domain(format!(
            "dense Cholesky synthesis limited to {CHOLESKY_MAX_STEPS} steps, got {m}"
        )));
    }
    let gamma: Vec<f64> = (0..m).map(|k| fgn_autocovariance(hurst, k)).collect();
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = gamma[i - j];
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::Invariant("fGn covariance is not positive definite".into()));
                }
                l[i * m + i] = sqrt(s);
            } else {
                l[i * m + j] = s / l[j * m + j];
            }
        }
    }
    Ok(FgnRoute::Cholesky { factor: l })
}
