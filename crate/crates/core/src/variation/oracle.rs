//! Conditional-drift oracles `E[S_{t_{i+1}} - S_{t_i} | F_{t_i}]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::toeplitz::{levinson_solve, Predictors};
use crate::error::{Error, Result};
use crate::exec::{Executor, Serial};
use crate::integrands::{ElementaryIntegrand, Measurability};
use crate::math::{clamped_gaussian_mean, expm1, powf, sign};
use crate::paths::{fgn_autocovariance, DyadicGrid, PathEnsemble, ProcessModel, StoppingTimes, SynthesisMethod};

/// Largest ensemble level for which the Gaussian linear predictor is built.
pub const GAUSSIAN_LINEAR_MAX_LEVEL: u32 = 12;

/// How conditional drifts are obtained.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleKind {
    /// Closed form per model (Brownian, Ornstein–Uhlenbeck, squared Brownian,
    /// compensated Poisson, deterministic, and their truncations).
    Analytic,
    /// Exact Gaussian prediction from the full discrete past (fBm and its truncation).
    GaussianLinear,
    /// Leave-one-out local average of the next increment over paths whose
    /// current value lies within `bandwidth`. Markov models only.
    KernelRegression { bandwidth: f64 },
}

impl OracleKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Analytic => "analytic",
            Self::GaussianLinear => "gaussian_linear",
            Self::KernelRegression { .. } => "kernel_regression",
        }
    }

    /// The exact oracle for a model, when there is one.
    pub fn exact_for(model: &ProcessModel) -> Result<Self> {
        if !model.has_exact_drift_oracle() {
            return Err(Error::IncompatibleOracle {
                oracle: "exact",
                model: model.name(),
                reason: "no closed-form conditional drift",
            });
        }
        Ok(if model.hurst().is_some() {
            Self::GaussianLinear
        } else {
            Self::Analytic
        })
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Self::KernelRegression { .. })
    }
}

fn incompatible(kind: OracleKind, model: &ProcessModel, reason: &'static str) -> Error {
    Error::IncompatibleOracle {
        oracle: kind.name(),
        model: model.name(),
        reason,
    }
}

/// Conditional law of the next increment of a Gaussian (or deterministic)
/// driver given its past: `(mean, variance)`.
#[derive(Debug)]
enum InnerLaw {
    Brownian { mean: f64, var: f64 },
    Ou { factor: f64, var: f64 },
    Deterministic(Vec<f64>),
    Fbm(FbmPredictor),
}

impl InnerLaw {
    fn build(model: &ProcessModel, grid: DyadicGrid, coarse: DyadicGrid) -> Result<Self> {
        let h = coarse.dt();
        Ok(match model {
            ProcessModel::BrownianMotion { drift, volatility } => Self::Brownian {
                mean: drift * h,
                var: volatility * volatility * h,
            },
            ProcessModel::OrnsteinUhlenbeck { reversion, volatility } => {
                let var = if *reversion == 0.0 {
                    volatility * volatility * h
                } else {
                    -volatility * volatility * expm1(-2.0 * reversion * h) / (2.0 * reversion)
                };
                Self::Ou {
                    factor: expm1(-reversion * h),
                    var,
                }
            }
            ProcessModel::DeterministicFunction { .. } => Self::Deterministic(
                (0..coarse.steps())
                    .map(|c| model.deterministic_value(coarse.time(c + 1)) - model.deterministic_value(coarse.time(c)))
                    .collect(),
            ),
            ProcessModel::FractionalBrownianMotion { hurst } => Self::Fbm(FbmPredictor::new(*hurst, grid, coarse)?),
            _ => return Err(incompatible(OracleKind::Analytic, model, "no Gaussian driver")),
        })
    }

    /// `(mean increment, variance)` over coarse cell `c` given the history row.
    fn law(&self, c: usize, stride: usize, hist: &[f64], incr: &[f64]) -> (f64, f64) {
        match self {
            Self::Brownian { mean, var } => (*mean, *var),
            Self::Ou { factor, var } => (hist[c * stride] * factor, *var),
            Self::Deterministic(d) => (d[c], 0.0),
            Self::Fbm(f) => (f.mean(c, incr), f.cond_var[c]),
        }
    }
}

/// Best linear predictor of the sum of the next `stride` fGn increments from
/// all earlier ones, for every coarse cell.
#[derive(Debug)]
struct FbmPredictor {
    weights: Vec<Vec<f64>>,
    cond_var: Vec<f64>,
}

impl FbmPredictor {
    fn new(hurst: f64, grid: DyadicGrid, coarse: DyadicGrid) -> Result<Self> {
        if grid.level() > GAUSSIAN_LINEAR_MAX_LEVEL {
            return Err(Error::Domain(format!(
                "gaussian linear oracle supports grids up to level {GAUSSIAN_LINEAR_MAX_LEVEL}, got {}",
                grid.level()
            )));
        }
        let s = grid.stride_to(coarse)?;
        let cells = coarse.steps();
        let m = grid.steps();
        let gamma: Vec<f64> = (0..=m).map(|k| fgn_autocovariance(hurst, k)).collect();
        let scale = powf(grid.dt(), 2.0 * hurst);
        let block_var = powf(s as f64, 2.0 * hurst);
        // Durbin predictors are needed for s = 1 and for cells past the
        // point where composing one-step predictors beats a fresh solve.
        let need_durbin = s == 1 || cells > s + 1;
        let durbin = if need_durbin {
            Some(Predictors::new(&gamma, m - 1)?)
        } else {
            None
        };
        let mut weights = Vec::with_capacity(cells);
        let mut cond_var = Vec::with_capacity(cells);
        for c in 0..cells {
            let a = c * s;
            let g: Vec<f64> = (0..a)
                .map(|j| (0..s).map(|k| gamma[a + k - j]).sum())
                .collect();
            let w = if a == 0 {
                Vec::new()
            } else if s == 1 {
                let d = durbin.as_ref().expect("durbin predictors");
                (0..a).map(|j| d.coeff(a, a - j)).collect()
            } else if c <= s {
                levinson_solve(&gamma[..a], &g)?
            } else {
                compose(durbin.as_ref().expect("durbin predictors"), a, s)
            };
            let explained: f64 = w.iter().zip(&g).map(|(x, y)| x * y).sum();
            cond_var.push((block_var - explained).max(0.0) * scale);
            weights.push(w);
        }
        Ok(Self {
            weights,
            cond_var,
        })
    }

    fn mean(&self, c: usize, incr: &[f64]) -> f64 {
        let w = &self.weights[c];
        w.iter().zip(&incr[..w.len()]).map(|(x, y)| x * y).sum()
    }
}

/// Weights of `E[X_a + ... + X_{a+s-1} | X_0..X_{a-1}]` obtained by chaining
/// one-step predictors: unknown intermediate values are replaced by their own
/// predictions.
fn compose(d: &Predictors, a: usize, s: usize) -> Vec<f64> {
    let mut parts: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut total = vec![0.0; a];
    for k in 0..s {
        let order = a + k;
        let mut w: Vec<f64> = (0..a).map(|j| d.coeff(order, order - j)).collect();
        for (l, prev) in parts.iter().enumerate() {
            let c = d.coeff(order, order - (a + l));
            for (x, y) in w.iter_mut().zip(prev) {
                *x += c * y;
            }
        }
        for (t, x) in total.iter_mut().zip(&w) {
            *t += x;
        }
        parts.push(w);
    }
    total
}

#[derive(Debug)]
enum Plan {
    Constant(f64),
    Ou(f64),
    Deterministic(Vec<f64>),
    Fbm(FbmPredictor),
    Truncated { inner: InnerLaw, bound: f64 },
    Kernel { bandwidth: f64 },
}

impl Plan {
    fn build(ens: &PathEnsemble, kind: OracleKind, coarse: DyadicGrid) -> Result<Self> {
        let model = ens.model();
        let grid = ens.grid();
        if let OracleKind::KernelRegression { bandwidth } = kind {
            if !model.is_markov() {
                return Err(incompatible(kind, model, "kernel regression needs a Markov model"));
            }
            if !(bandwidth > 0.0 && bandwidth.is_finite()) {
                return Err(Error::Domain(format!("bandwidth must be positive, got {bandwidth}")));
            }
            return Ok(Self::Kernel { bandwidth });
        }
        if ens.synthesis() == SynthesisMethod::Derived {
            return Err(incompatible(kind, model, "the ensemble is a transformation, not a sample of the model"));
        }
        let wants_gaussian = model.hurst().is_some();
        if wants_gaussian != (kind == OracleKind::GaussianLinear) {
            return Err(incompatible(
                kind,
                model,
                if wants_gaussian {
                    "fBm drifts come from the gaussian linear oracle"
                } else {
                    "the gaussian linear oracle is for fBm models"
                },
            ));
        }
        let h = coarse.dt();
        Ok(match model {
            ProcessModel::BrownianMotion { drift, .. } => Self::Constant(drift * h),
            ProcessModel::SquaredBrownian => Self::Constant(h),
            ProcessModel::CompensatedPoisson { .. } => Self::Constant(0.0),
            ProcessModel::OrnsteinUhlenbeck { reversion, .. } => Self::Ou(expm1(-reversion * h)),
            ProcessModel::DeterministicFunction { .. } | ProcessModel::FractionalBrownianMotion { .. } => {
                match InnerLaw::build(model, grid, coarse)? {
                    InnerLaw::Deterministic(d) => Self::Deterministic(d),
                    InnerLaw::Fbm(f) => Self::Fbm(f),
                    _ => unreachable!("deterministic or fBm law"),
                }
            }
            ProcessModel::BoundedTruncation { inner, bound } => {
                if !ens.has_latent() {
                    return Err(incompatible(kind, model, "truncated ensemble carries no latent history"));
                }
                match **inner {
                    ProcessModel::SquaredBrownian | ProcessModel::CompensatedPoisson { .. } => {
                        return Err(incompatible(kind, model, "no closed form for this truncation"))
                    }
                    _ => Self::Truncated {
                        inner: InnerLaw::build(inner, grid, coarse)?,
                        bound: *bound,
                    },
                }
            }
        })
    }

    fn needs_increments(&self) -> bool {
        matches!(
            self,
            Self::Fbm(_)
                | Self::Truncated {
                    inner: InnerLaw::Fbm(_),
                    ..
                }
        )
    }

    /// Drift over coarse cell `c` for one path (not for kernel regression).
    fn drift(&self, c: usize, s: usize, row: &[f64], hist: &[f64], incr: &[f64]) -> f64 {
        match self {
            Self::Constant(d) => *d,
            Self::Ou(f) => row[c * s] * f,
            Self::Deterministic(d) => d[c],
            Self::Fbm(f) => f.mean(c, incr),
            Self::Truncated { inner, bound } => {
                let x = hist[c * s];
                let (m, v) = inner.law(c, s, hist, incr);
                clamped_gaussian_mean(x + m, v, *bound) - row[c * s]
            }
            Self::Kernel { .. } => unreachable!("kernel regression is column-wise"),
        }
    }
}

fn increments(hist: &[f64]) -> Vec<f64> {
    hist.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Conditional drifts of an ensemble over every cell of a sub-grid `π`,
/// row-major with `2^level` entries per path.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftTable {
    grid: DyadicGrid,
    level: u32,
    n_paths: usize,
    values: Vec<f64>,
    kind: OracleKind,
}

/// Drift table computed on the calling thread.
pub fn drift_table(ens: &PathEnsemble, kind: OracleKind, pi: DyadicGrid) -> Result<DriftTable> {
    drift_table_with(&Serial, ens, kind, pi)
}

pub fn drift_table_with(exec: &dyn Executor, ens: &PathEnsemble, kind: OracleKind, pi: DyadicGrid) -> Result<DriftTable> {
    let grid = ens.grid();
    let s = grid.stride_to(pi)?;
    let cells = pi.steps();
    let plan = Plan::build(ens, kind, pi)?;
    let n = ens.n_paths();
    let mut values = vec![0.0; n * cells];
    if let Plan::Kernel { bandwidth } = plan {
        let mut cols = vec![0.0; n * cells];
        exec.for_each_row(&mut cols, n, &|c, out| kernel_column(ens, c, s, bandwidth, out));
        for c in 0..cells {
            for p in 0..n {
                values[p * cells + c] = cols[c * n + p];
            }
        }
    } else {
        let incr_needed = plan.needs_increments();
        exec.for_each_row(&mut values, cells, &|p, out| {
            let row = ens.row(p);
            let hist = ens.history(p);
            let incr = if incr_needed { increments(hist) } else { Vec::new() };
            for (c, o) in out.iter_mut().enumerate() {
                *o = plan.drift(c, s, row, hist, &incr);
            }
        });
    }
    Ok(DriftTable {
        grid,
        level: pi.level(),
        n_paths: n,
        values,
        kind,
    })
}

/// `E[S_{t_{i+1}} - S_{t_i} | F_{t_i}]` per path at grid index `i` of the
/// ensemble's own grid.
pub fn conditional_drift(ens: &PathEnsemble, kind: OracleKind, i: usize) -> Result<Vec<f64>> {
    let grid = ens.grid();
    if i >= grid.steps() {
        return Err(Error::Structural(format!("index {i} has no successor on a grid of {} points", grid.len())));
    }
    let plan = Plan::build(ens, kind, grid)?;
    let n = ens.n_paths();
    if let Plan::Kernel { bandwidth } = plan {
        let mut out = vec![0.0; n];
        kernel_column(ens, i, 1, bandwidth, &mut out);
        return Ok(out);
    }
    let incr_needed = plan.needs_increments();
    Ok((0..n)
        .map(|p| {
            let hist = ens.history(p);
            let incr = if incr_needed { increments(hist) } else { Vec::new() };
            plan.drift(i, 1, ens.row(p), hist, &incr)
        })
        .collect())
}

/// Leave-one-out box-kernel regression of the cell-`c` increment on the value
/// at the left end of the cell.
fn kernel_column(ens: &PathEnsemble, c: usize, s: usize, bandwidth: f64, out: &mut [f64]) {
    let n = ens.n_paths();
    let xs: Vec<f64> = ens.rows().map(|r| r[c * s]).collect();
    let ys: Vec<f64> = ens.rows().map(|r| r[(c + 1) * s] - r[c * s]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
    let mut prefix = vec![0.0; n + 1];
    for (k, &p) in order.iter().enumerate() {
        prefix[k + 1] = prefix[k] + ys[p];
    }
    let total = prefix[n];
    let (mut lo, mut hi) = (0usize, 0usize);
    for (k, &p) in order.iter().enumerate() {
        let x = xs[p];
        while xs[order[lo]] < x - bandwidth {
            lo += 1;
        }
        hi = hi.max(k);
        while hi + 1 < n && xs[order[hi + 1]] <= x + bandwidth {
            hi += 1;
        }
        let count = hi - lo;
        out[p] = if count > 0 {
            (prefix[hi + 1] - prefix[lo] - ys[p]) / count as f64
        } else if n > 1 {
            (total - ys[p]) / (n - 1) as f64
        } else {
            0.0
        };
    }
}

impl DriftTable {
    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    /// Level of the sub-grid `π`.
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn cells(&self) -> usize {
        1usize << self.level
    }

    pub fn stride(&self) -> usize {
        1usize << (self.grid.level() - self.level)
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, p: usize, c: usize) -> f64 {
        self.values[p * self.cells() + c]
    }

    pub fn row(&self, p: usize) -> &[f64] {
        let k = self.cells();
        &self.values[p * k..(p + 1) * k]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.n_paths).map(|p| self.get(p, c)).collect()
    }

    /// Per path, `Σ_c 1{t_c < ρ} |drift_c|` (no gate when `rho` is `None`).
    pub fn abs_sums(&self, rho: Option<&StoppingTimes>) -> Result<Vec<f64>> {
        if let Some(r) = rho {
            self.check_times(r)?;
        }
        let s = self.stride();
        Ok((0..self.n_paths)
            .map(|p| {
                let limit = rho.map_or(usize::MAX, |r| r.raw(p));
                let mut acc = 0.0;
                for (c, d) in self.row(p).iter().enumerate() {
                    if c * s < limit {
                        acc += d.abs();
                    }
                }
                acc
            })
            .collect())
    }

    /// Drift table of `S^ρ` for a `ρ` taking values in `π ∪ {∞}`: entries
    /// with `t_c >= ρ` vanish.
    pub fn of_stopped(&self, rho: &StoppingTimes) -> Result<Self> {
        self.check_times(rho)?;
        let s = self.stride();
        let cells = self.cells();
        let mut values = self.values.clone();
        for (p, row) in values.chunks_mut(cells).enumerate() {
            if let Some(k) = rho.get(p) {
                if k % s != 0 {
                    return Err(Error::Structural(format!(
                        "stopping time index {k} on path {p} is not a point of the sub-grid"
                    )));
                }
                for d in &mut row[k / s..] {
                    *d = 0.0;
                }
            }
        }
        Ok(Self { values, ..self.clone() })
    }

    /// `H^c = sign(drift_c)`, measurable at the left end of its cell.
    pub fn sign_integrand(&self) -> Result<ElementaryIntegrand> {
        let coeffs = self.values.iter().map(|&d| sign(d)).collect();
        ElementaryIntegrand::new(self.grid, self.level, coeffs, Measurability::LagZero)
    }

    fn check_times(&self, rho: &StoppingTimes) -> Result<()> {
        if rho.grid() != self.grid {
            return Err(Error::GridMismatch {
                expected: self.grid.level(),
                found: rho.grid().level(),
            });
        }
        if rho.n_paths() != self.n_paths {
            return Err(Error::LengthMismatch {
                left: self.n_paths,
                right: rho.n_paths(),
            });
        }
        Ok(())
    }
}

/// Drift table of `ens` on its own grid.
pub fn native_drift_table(ens: &PathEnsemble, kind: OracleKind) -> Result<DriftTable> {
    drift_table(ens, kind, ens.grid())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sqrt;
    use crate::paths::{make_grid, simulate};
    use crate::stats;

    fn sim(model: ProcessModel, level: u32, n: usize, seed: u64) -> PathEnsemble {
        simulate(&model, make_grid(level).unwrap(), n, seed).unwrap()
    }

    #[test]
    fn brownian_and_squared_drifts() {
        let e = sim(ProcessModel::brownian(0.7, 2.0), 5, 6, 1);
        for i in [0, 7, 31] {
            assert!(conditional_drift(&e, OracleKind::Analytic, i)
                .unwrap()
                .iter()
                .all(|&d| d == 0.7 / 32.0));
        }
        let w2 = sim(ProcessModel::SquaredBrownian, 4, 5, 2);
        let d = conditional_drift(&w2, OracleKind::Analytic, 3).unwrap();
        assert!(d.iter().all(|&x| x == 1.0 / 16.0));
    }

    #[test]
    fn fbm_first_step_drift_is_correlation_times_increment() {
        let h = 0.75;
        let e = sim(ProcessModel::fbm(h), 6, 20, 3);
        let rho = powf(2.0, 2.0 * h - 1.0) - 1.0;
        let d = conditional_drift(&e, OracleKind::GaussianLinear, 1).unwrap();
        for (p, x) in d.iter().enumerate() {
            let first = e.value(p, 1) - e.value(p, 0);
            assert!((x - rho * first).abs() < 1e-14);
        }
        assert!(conditional_drift(&e, OracleKind::GaussianLinear, 0)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
    }

    /// Coarse-cell drifts must agree with a dense normal-equation solve.
    #[test]
    fn fbm_coarse_predictor_matches_dense_solve() {
        let h = 0.3;
        let grid = make_grid(5).unwrap();
        for m in [1u32, 2, 3, 4] {
            let coarse = make_grid(m).unwrap();
            let pred = FbmPredictor::new(h, grid, coarse).unwrap();
            let s = 1usize << (5 - m);
            let gamma = |k: usize| fgn_autocovariance(h, k);
            for c in 1..coarse.steps() {
                let a = c * s;
                let g: Vec<f64> = (0..a).map(|j| (0..s).map(|k| gamma(a + k - j)).sum()).collect();
                // Gauss-Seidel on the SPD Toeplitz system converges; use many sweeps.
                let mut w = vec![0.0; a];
                for _ in 0..4000 {
                    for i in 0..a {
                        let mut r = g[i];
                        for j in 0..a {
                            if j != i {
                                r -= gamma(i.abs_diff(j)) * w[j];
                            }
                        }
                        w[i] = r;
                    }
                }
                for (x, y) in pred.weights[c].iter().zip(&w) {
                    assert!((x - y).abs() < 1e-8, "m={m} c={c}: {x} vs {y}");
                }
            }
        }
    }

    /// Regression of the next increment on the oracle output has slope 1 and
    /// the residual variance matches the predicted conditional variance.
    #[test]
    fn fbm_oracle_is_calibrated() {
        let e = sim(ProcessModel::fbm(0.75), 6, 4000, 11);
        let pi = make_grid(4).unwrap();
        let t = drift_table(&e, OracleKind::GaussianLinear, pi).unwrap();
        let c = 9;
        let pred = t.column(c);
        let actual: Vec<f64> = e.rows().map(|r| r[(c + 1) * 4] - r[c * 4]).collect();
        let fit = stats::linear_fit(&pred, &actual);
        assert!((fit.slope - 1.0).abs() < 0.1, "slope {}", fit.slope);
        let resid: Vec<f64> = pred.iter().zip(&actual).map(|(p, a)| a - p).collect();
        let predictor = FbmPredictor::new(0.75, e.grid(), pi).unwrap();
        let v = stats::variance(&resid);
        assert!((v / predictor.cond_var[c] - 1.0).abs() < 0.1);
        assert!(stats::mean(&resid).abs() < 3.0 * sqrt(v / 4000.0));
    }

    #[test]
    fn ou_and_deterministic() {
        let e = sim(
            ProcessModel::OrnsteinUhlenbeck {
                reversion: 2.0,
                volatility: 1.0,
            },
            4,
            3,
            5,
        );
        let d = conditional_drift(&e, OracleKind::Analytic, 5).unwrap();
        for p in 0..3 {
            assert_eq!(d[p], e.value(p, 5) * expm1(-2.0 / 16.0));
        }
        let lin = sim(ProcessModel::linear(), 3, 2, 0);
        let t = drift_table(&lin, OracleKind::Analytic, make_grid(2).unwrap()).unwrap();
        assert!(t.values().iter().all(|&x| x == 0.25));
    }

    #[test]
    fn truncated_deterministic_is_clamped_difference() {
        let model = ProcessModel::truncated(ProcessModel::linear(), 0.5);
        let e = sim(model, 3, 2, 0);
        let t = native_drift_table(&e, OracleKind::Analytic).unwrap();
        let expect = [0.125, 0.125, 0.125, 0.125, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(t.row(0), &expect[..]);
    }

    /// Monte Carlo check of the truncated-Brownian drift at one state: many
    /// continuations from the same point average to the oracle value.
    #[test]
    fn truncated_brownian_drift_matches_monte_carlo() {
        let b = 0.3;
        let model = ProcessModel::truncated(ProcessModel::brownian(0.0, 1.0), b);
        let e = sim(model, 4, 1, 8);
        let t = native_drift_table(&e, OracleKind::Analytic).unwrap();
        let x = e.history(0)[6];
        let h = 1.0 / 16.0;
        let n = 20000;
        let cont = sim(ProcessModel::brownian(0.0, 1.0), 4, n, 99);
        let samples: Vec<f64> = cont
            .rows()
            .map(|r| (x + r[1]).clamp(-b, b) - x.clamp(-b, b))
            .collect();
        let est = stats::estimate(&samples);
        let _ = h;
        assert!((est.mean - t.get(0, 6)).abs() < 4.0 * est.stderr + 1e-12);
    }

    #[test]
    fn incompatible_requests() {
        let f = sim(ProcessModel::fbm(0.3), 4, 2, 1);
        assert!(matches!(
            drift_table(&f, OracleKind::KernelRegression { bandwidth: 0.1 }, f.grid()),
            Err(Error::IncompatibleOracle { .. })
        ));
        assert!(drift_table(&f, OracleKind::Analytic, f.grid()).is_err());
        let b = sim(ProcessModel::brownian(0.0, 1.0), 4, 2, 1);
        assert!(drift_table(&b, OracleKind::GaussianLinear, b.grid()).is_err());
        let derived = b.derive(b.values().to_vec(), "copy");
        assert!(drift_table(&derived, OracleKind::Analytic, b.grid()).is_err());
        let big = make_grid(5).unwrap();
        assert!(matches!(drift_table(&b, OracleKind::Analytic, big), Err(Error::NotSubGrid { .. })));
    }

    #[test]
    fn kernel_regression_tracks_brownian_drift() {
        let e = sim(ProcessModel::brownian(2.0, 0.5), 3, 4000, 21);
        let t = native_drift_table(&e, OracleKind::KernelRegression { bandwidth: 0.2 }).unwrap();
        let avg = stats::mean(t.values());
        assert!((avg - 0.25).abs() < 0.02, "{avg}");
    }

    /// Path `p` keeps its prefix up to `upto` and continues like `donor`.
    fn new_future(e: &PathEnsemble, p: usize, upto: usize, donor: usize) -> PathEnsemble {
        let len = e.grid().len();
        let graft = |buf: &mut Vec<f64>| {
            let d: Vec<f64> = buf[donor * len..(donor + 1) * len].to_vec();
            let base = buf[p * len + upto];
            for j in upto + 1..len {
                buf[p * len + j] = base + (d[j] - d[upto]);
            }
        };
        let mut values = e.values().to_vec();
        graft(&mut values);
        let mut out = PathEnsemble::from_values(e.grid(), values, e.model().clone(), e.seed(), e.synthesis()).unwrap();
        if e.has_latent() {
            let mut lat: Vec<f64> = (0..e.n_paths()).flat_map(|q| e.history(q).to_vec()).collect();
            graft(&mut lat);
            let clamp = e.model().known_sup_bound().unwrap();
            let vals: Vec<f64> = lat.iter().map(|x| x.clamp(-clamp, clamp)).collect();
            out = PathEnsemble::from_values(e.grid(), vals, e.model().clone(), e.seed(), e.synthesis()).unwrap();
            out.set_latent(Some(lat));
        }
        out
    }

    #[test]
    fn prefix_dependence_only() {
        let ou = ProcessModel::OrnsteinUhlenbeck {
            reversion: 1.0,
            volatility: 1.0,
        };
        let cases = [
            (sim(ProcessModel::fbm(0.7), 5, 6, 2), OracleKind::GaussianLinear),
            (
                sim(ProcessModel::truncated(ProcessModel::fbm(0.3), 0.4), 5, 6, 3),
                OracleKind::GaussianLinear,
            ),
            (sim(ou, 5, 6, 4), OracleKind::Analytic),
            (
                sim(ProcessModel::brownian(0.0, 1.0), 5, 40, 5),
                OracleKind::KernelRegression { bandwidth: 0.3 },
            ),
        ];
        for (e, kind) in cases {
            let base = native_drift_table(&e, kind).unwrap();
            for upto in [0usize, 9, 20] {
                let changed = new_future(&e, 1, upto, 4);
                let t = native_drift_table(&changed, kind).unwrap();
                for c in 0..=upto {
                    let (a, b) = (t.get(1, c), base.get(1, c));
                    assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{kind:?} upto {upto} cell {c}");
                }
                // the future really changed
                assert_ne!(changed.row(1), e.row(1));
            }
        }
    }
}
