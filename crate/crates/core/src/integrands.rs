//! Simple and elementary integrands and their integrals against a path ensemble.
//!
//! A simple integrand `H = Σ H^i 1_{(τ_i, τ_{i+1}]}` has stopping-time
//! breakpoints and `F_{τ_i}`-measurable values. An elementary integrand lives
//! on a coarse dyadic level `n`, `H = Σ H^i 1_{(i/2^n, (i+1)/2^n]}`, and carries a
//! [`Measurability`] tag saying how far back its coefficients look.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::sign;
use crate::paths::rng::{stream, DOMAIN_PROBE};
use crate::paths::{DyadicGrid, PathEnsemble, StoppingTimes};

/// Which filtration the coefficient `H^i` of cell `(i/2^n, (i+1)/2^n]` is
/// measurable for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measurability {
    /// `F_{i/2^n}`: the Riemann-sum discretization `K^{D_n}`.
    LagZero,
    /// `F_{(i-1)/2^n}` with `H^0 = 0`: the class `E_{D_n}`.
    LagOne,
}

impl Measurability {
    /// Cells of look-back between the coefficient and the left end of its cell.
    pub fn lag(&self) -> usize {
        match self {
            Self::LagZero => 0,
            Self::LagOne => 1,
        }
    }
}

/// Common interface for integrating against a path ensemble.
pub trait Integrand {
    fn grid(&self) -> DyadicGrid;
    fn n_paths(&self) -> usize;
    /// Empirical `‖H‖_∞`: max of `|H_t|` over paths and non-empty intervals.
    fn sup_norm(&self) -> f64;
    /// `I_S(H)` on path `p` given its row of values.
    fn integrate_row(&self, p: usize, row: &[f64]) -> f64;
    /// `(H·S)_t = I_{S^t}(H)` for every grid time of the row.
    fn process_row(&self, p: usize, row: &[f64], out: &mut [f64]);
}

fn check_pair(ens: &PathEnsemble, h: &dyn Integrand) -> Result<()> {
    if ens.grid() != h.grid() {
        return Err(Error::GridMismatch {
            expected: ens.grid().level(),
            found: h.grid().level(),
        });
    }
    if ens.n_paths() != h.n_paths() {
        return Err(Error::LengthMismatch {
            left: ens.n_paths(),
            right: h.n_paths(),
        });
    }
    Ok(())
}

pub fn sup_norm(h: &dyn Integrand) -> f64 {
    h.sup_norm()
}

/// Per-path sample of `I_S(H)`.
pub fn integrate(ens: &PathEnsemble, h: &dyn Integrand) -> Result<Vec<f64>> {
    check_pair(ens, h)?;
    Ok(ens.rows().enumerate().map(|(p, r)| h.integrate_row(p, r)).collect())
}

/// The integral process `H·S`; its last column equals [`integrate`] bit-for-bit.
pub fn integral_process(ens: &PathEnsemble, h: &dyn Integrand) -> Result<PathEnsemble> {
    check_pair(ens, h)?;
    let len = ens.grid().len();
    let mut out = vec![0.0; ens.values().len()];
    for (p, (row, o)) in ens.rows().zip(out.chunks_mut(len)).enumerate() {
        h.process_row(p, row, o);
    }
    Ok(ens.derive(out, "integral"))
}

/// A simple integrand with stopping-time breakpoints `τ_1 <= ... <= τ_{k+1}`.
/// `∞` breakpoints act as `t = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleIntegrand {
    breaks: Vec<StoppingTimes>,
    values: Vec<Vec<f64>>,
    bound: f64,
}

impl SimpleIntegrand {
    /// Checks ordering of the breakpoints and the declared bound.
    pub fn new(breaks: Vec<StoppingTimes>, values: Vec<Vec<f64>>, bound: f64) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(Error::Empty("a simple integrand needs at least two breakpoints"));
        }
        if values.len() + 1 != breaks.len() {
            return Err(Error::LengthMismatch {
                left: values.len() + 1,
                right: breaks.len(),
            });
        }
        let n = breaks[0].n_paths();
        for b in &breaks[1..] {
            breaks[0].check_compatible(b)?;
        }
        for v in &values {
            if v.len() != n {
                return Err(Error::LengthMismatch { left: v.len(), right: n });
            }
            if let Some(x) = v.iter().find(|x| !(x.abs() <= bound)) {
                return Err(Error::Domain(format!("value {x} exceeds the declared bound {bound}")));
            }
        }
        for p in 0..n {
            if breaks.windows(2).any(|w| w[0].effective(p) > w[1].effective(p)) {
                return Err(Error::Structural(format!("breakpoints out of order on path {p}")));
            }
        }
        Ok(Self { breaks, values, bound })
    }

    /// Values produced by evaluating `f(piece, prefix)` on the path prefix up
    /// to `τ_piece`, which makes `H^i` `F_{τ_i}`-measurable by construction.
    pub fn adapted<F>(ens: &PathEnsemble, breaks: Vec<StoppingTimes>, bound: f64, f: F) -> Result<Self>
    where
        F: Fn(usize, &[f64]) -> f64,
    {
        for b in &breaks {
            b.check_ensemble(ens)?;
        }
        let k = breaks.len().saturating_sub(1);
        let values = (0..k)
            .map(|i| {
                ens.rows()
                    .enumerate()
                    .map(|(p, row)| f(i, &row[..=breaks[i].effective(p)]))
                    .collect()
            })
            .collect();
        Self::new(breaks, values, bound)
    }

    /// `c · 1_{(s, t]}` for deterministic grid indices `s <= t`.
    pub fn indicator(grid: DyadicGrid, n_paths: usize, from: usize, to: usize, c: f64) -> Result<Self> {
        let breaks = vec![
            StoppingTimes::constant(grid, n_paths, Some(from))?,
            StoppingTimes::constant(grid, n_paths, Some(to))?,
        ];
        Self::new(breaks, vec![vec![c; n_paths]], c.abs())
    }

    pub fn breaks(&self) -> &[StoppingTimes] {
        &self.breaks
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn pieces(&self) -> usize {
        self.values.len()
    }

    /// `H · 1_{(0, ρ]}`: every breakpoint replaced by `τ_i ∧ ρ`.
    pub fn restrict_to(&self, rho: &StoppingTimes) -> Result<Self> {
        let breaks = self
            .breaks
            .iter()
            .map(|b| b.min(rho))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            breaks,
            values: self.values.clone(),
            bound: self.bound,
        })
    }

    /// `a H + b G` for integrands sharing the same breakpoints.
    pub fn linear_combination(a: f64, h: &Self, b: f64, g: &Self) -> Result<Self> {
        if h.breaks != g.breaks {
            return Err(Error::Structural("linear combination needs identical breakpoints".into()));
        }
        let values = h
            .values
            .iter()
            .zip(&g.values)
            .map(|(x, y)| x.iter().zip(y).map(|(u, v)| a * u + b * v).collect())
            .collect();
        Ok(Self {
            breaks: h.breaks.clone(),
            values,
            bound: a.abs() * h.bound + b.abs() * g.bound,
        })
    }

    /// `H` on the fine interval `(t_j, t_{j+1}]` of path `p`.
    pub fn value_on(&self, p: usize, j: usize) -> f64 {
        for (i, w) in self.breaks.windows(2).enumerate() {
            if w[0].effective(p) <= j && j < w[1].effective(p) {
                return self.values[i][p];
            }
        }
        0.0
    }
}

impl Integrand for SimpleIntegrand {
    fn grid(&self) -> DyadicGrid {
        self.breaks[0].grid()
    }

    fn n_paths(&self) -> usize {
        self.breaks[0].n_paths()
    }

    fn sup_norm(&self) -> f64 {
        let mut m = 0.0f64;
        for (i, v) in self.values.iter().enumerate() {
            for (p, x) in v.iter().enumerate() {
                if self.breaks[i].effective(p) < self.breaks[i + 1].effective(p) {
                    m = m.max(x.abs());
                }
            }
        }
        m
    }

    fn integrate_row(&self, p: usize, row: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let (a, b) = (self.breaks[i].effective(p), self.breaks[i + 1].effective(p));
            acc += v[p] * (row[b] - row[a]);
        }
        acc
    }

    fn process_row(&self, p: usize, row: &[f64], out: &mut [f64]) {
        for (t, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, v) in self.values.iter().enumerate() {
                let a = self.breaks[i].effective(p).min(t);
                let b = self.breaks[i + 1].effective(p).min(t);
                acc += v[p] * (row[b] - row[a]);
            }
            *o = acc;
        }
    }
}

/// Dyadic-cell integrand at level `level` over an ensemble grid at least as fine.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementaryIntegrand {
    grid: DyadicGrid,
    level: u32,
    n_paths: usize,
    coeffs: Vec<f64>,
    tag: Measurability,
}

impl ElementaryIntegrand {
    /// `coeffs` is row-major, `2^level` entries per path. Lag-one integrands
    /// must have `H^0 = 0`.
    pub fn new(grid: DyadicGrid, level: u32, coeffs: Vec<f64>, tag: Measurability) -> Result<Self> {
        let coarse = DyadicGrid::with_cap(level, grid.level())?;
        let cells = coarse.steps();
        if coeffs.is_empty() || coeffs.len() % cells != 0 {
            return Err(Error::LengthMismatch {
                left: coeffs.len(),
                right: cells,
            });
        }
        if let Some(x) = coeffs.iter().find(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite coefficient {x}")));
        }
        if tag == Measurability::LagOne && coeffs.chunks(cells).any(|c| c[0] != 0.0) {
            return Err(Error::Structural("lag-one integrands must vanish on the first cell".into()));
        }
        Ok(Self {
            grid,
            level,
            n_paths: coeffs.len() / cells,
            coeffs,
            tag,
        })
    }

    /// Coefficient `H^i = f(i, prefix)` where `prefix` runs up to the cell's
    /// measurability time (`i/2^n` for lag zero, `(i-1)/2^n` for lag one).
    pub fn from_prefix_fn<F>(ens: &PathEnsemble, level: u32, tag: Measurability, f: F) -> Result<Self>
    where
        F: Fn(usize, &[f64]) -> f64,
    {
        let grid = ens.grid();
        let stride = grid.stride_to(DyadicGrid::with_cap(level, grid.level())?)?;
        let cells = 1usize << level;
        let mut coeffs = Vec::with_capacity(ens.n_paths() * cells);
        for row in ens.rows() {
            for i in 0..cells {
                let x = match tag {
                    Measurability::LagZero => f(i, &row[..=i * stride]),
                    Measurability::LagOne if i == 0 => 0.0,
                    Measurability::LagOne => f(i, &row[..=(i - 1) * stride]),
                };
                coeffs.push(x);
            }
        }
        Self::new(grid, level, coeffs, tag)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn cells(&self) -> usize {
        1usize << self.level
    }

    pub fn stride(&self) -> usize {
        1usize << (self.grid.level() - self.level)
    }

    pub fn tag(&self) -> Measurability {
        self.tag
    }

    pub fn coeff(&self, p: usize, i: usize) -> f64 {
        self.coeffs[p * self.cells() + i]
    }

    pub fn coeff_row(&self, p: usize) -> &[f64] {
        let c = self.cells();
        &self.coeffs[p * c..(p + 1) * c]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `H` on the fine interval `(t_j, t_{j+1}]`.
    pub fn value_on(&self, p: usize, j: usize) -> f64 {
        self.coeff(p, j / self.stride())
    }

    /// The same integrand written with deterministic breakpoints.
    pub fn to_simple(&self) -> Result<SimpleIntegrand> {
        let s = self.stride();
        let breaks = (0..=self.cells())
            .map(|c| StoppingTimes::constant(self.grid, self.n_paths, Some(c * s)))
            .collect::<Result<Vec<_>>>()?;
        let values = (0..self.cells())
            .map(|c| (0..self.n_paths).map(|p| self.coeff(p, c)).collect())
            .collect();
        SimpleIntegrand::new(breaks, values, self.sup_norm())
    }
}

impl Integrand for ElementaryIntegrand {
    fn grid(&self) -> DyadicGrid {
        self.grid
    }

    fn n_paths(&self) -> usize {
        self.n_paths
    }

    fn sup_norm(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    fn integrate_row(&self, p: usize, row: &[f64]) -> f64 {
        let s = self.stride();
        let mut acc = 0.0;
        for (c, h) in self.coeff_row(p).iter().enumerate() {
            acc += h * (row[(c + 1) * s] - row[c * s]);
        }
        acc
    }

    fn process_row(&self, p: usize, row: &[f64], out: &mut [f64]) {
        let s = self.stride();
        let h = self.coeff_row(p);
        let mut acc = 0.0;
        out[0] = 0.0;
        for t in 1..out.len() {
            let c = (t - 1) / s;
            let start = c * s;
            out[t] = acc + h[c] * (row[t] - row[start]);
            if t == start + s {
                acc = out[t];
            }
        }
    }
}

/// Checks that `level` fits inside the ensemble grid and returns the stride.
fn coarse_stride(ens: &PathEnsemble, level: u32) -> Result<usize> {
    let grid = ens.grid();
    if level > grid.level() {
        return Err(Error::NotSubGrid {
            fine: grid.level(),
            coarse: level,
        });
    }
    Ok(1usize << (grid.level() - level))
}

/// `Σ_{i<2^n} K_{i/2^n} (S_{(i+1)/2^n} - S_{i/2^n})` per path.
pub fn riemann_sum(ens: &PathEnsemble, k: &PathEnsemble, level: u32) -> Result<Vec<f64>> {
    if k.grid() != ens.grid() || k.n_paths() != ens.n_paths() {
        return Err(Error::GridMismatch {
            expected: ens.grid().level(),
            found: k.grid().level(),
        });
    }
    let s = coarse_stride(ens, level)?;
    let cells = 1usize << level;
    Ok(ens
        .rows()
        .zip(k.rows())
        .map(|(row, kr)| {
            let mut acc = 0.0;
            for c in 0..cells {
                acc += kr[c * s] * (row[(c + 1) * s] - row[c * s]);
            }
            acc
        })
        .collect())
}

/// `K^{D_n} = Σ K_{i/2^n} 1_{(i/2^n, (i+1)/2^n]}`, tagged lag-zero.
pub fn discretize(k: &PathEnsemble, level: u32) -> Result<ElementaryIntegrand> {
    let s = coarse_stride(k, level)?;
    let cells = 1usize << level;
    let coeffs = k.rows().flat_map(|r| (0..cells).map(move |c| r[c * s])).collect();
    ElementaryIntegrand::new(k.grid(), level, coeffs, Measurability::LagZero)
}

/// Moves each breakpoint `τ_i` to `σ_i = 1 ∧ (j+2)/2^n` on
/// `{j/2^n < τ_i <= (j+1)/2^n}` (with `τ_i = 0` counted in the first cell), so
/// that `τ_i + 2^{-n} <= σ_i` and the result is a lag-one elementary integrand.
pub fn shift_to_elementary(h: &SimpleIntegrand, level: u32) -> Result<ElementaryIntegrand> {
    let grid = h.grid();
    if level > grid.level() {
        return Err(Error::NotSubGrid {
            fine: grid.level(),
            coarse: level,
        });
    }
    let s = 1usize << (grid.level() - level);
    let cells = 1usize << level;
    let n = h.n_paths();
    let sigma = |tau: usize| -> usize {
        let j = tau.div_ceil(s).saturating_sub(1);
        (j + 2).min(cells)
    };
    let mut coeffs = vec![0.0; n * cells];
    for p in 0..n {
        let row = &mut coeffs[p * cells..(p + 1) * cells];
        for i in 0..h.pieces() {
            let a = sigma(h.breaks[i].effective(p));
            let b = sigma(h.breaks[i + 1].effective(p));
            for c in row.iter_mut().take(b).skip(a) {
                *c = h.values[i][p];
            }
        }
    }
    ElementaryIntegrand::new(grid, level, coeffs, Measurability::LagOne)
}

/// `H^i = sign(S_{(i-lag+1)/2^n} - S_{(i-lag)/2^n})` for `i >= lag`, else 0.
///
/// Lag 1 bets on the most recent increment (lag-zero measurable); lag 2 uses
/// the one before and belongs to `E_{D_n}`.
pub fn lagged_sign_integrand(ens: &PathEnsemble, level: u32, lag: usize) -> Result<ElementaryIntegrand> {
    let tag = match lag {
        1 => Measurability::LagZero,
        2 => Measurability::LagOne,
        _ => return Err(Error::Domain(format!("lag must be 1 or 2, got {lag}"))),
    };
    let s = coarse_stride(ens, level)?;
    ElementaryIntegrand::from_prefix_fn(ens, level, tag, |i, prefix| {
        if i < lag {
            return 0.0;
        }
        let a = (i - lag) * s;
        sign(prefix[a + s] - prefix[a])
    })
}

/// Independent fair ±1 coefficients (zero on the first cell), drawn from the
/// stream `(seed, level, path)`.
pub fn random_sign_integrand(grid: DyadicGrid, n_paths: usize, level: u32, seed: u64) -> Result<ElementaryIntegrand> {
    if level > grid.level() {
        return Err(Error::NotSubGrid {
            fine: grid.level(),
            coarse: level,
        });
    }
    let cells = 1usize << level;
    let mut coeffs = Vec::with_capacity(n_paths * cells);
    for p in 0..n_paths {
        let mut rng = stream(seed ^ ((level as u64) << 56), DOMAIN_PROBE, p as u64);
        coeffs.push(0.0);
        for _ in 1..cells {
            coeffs.push(if rng.random::<bool>() { 1.0 } else { -1.0 });
        }
    }
    ElementaryIntegrand::new(grid, level, coeffs, Measurability::LagOne)
}

/// Continuous adapted `K` with `K_{i/2^n} = H^i`, `K_1 = 0`, affine in between,
/// tabulated on the integrand's grid. For a lag-one `H`, `K^{D_n} = H`.
pub fn affine_interpolation(h: &ElementaryIntegrand, like: &PathEnsemble) -> Result<PathEnsemble> {
    if like.grid() != h.grid() || like.n_paths() != h.n_paths() {
        return Err(Error::GridMismatch {
            expected: like.grid().level(),
            found: h.grid().level(),
        });
    }
    let s = h.stride();
    let cells = h.cells();
    let len = h.grid().len();
    let mut values = vec![0.0; h.n_paths() * len];
    for (p, out) in values.chunks_mut(len).enumerate() {
        let c = h.coeff_row(p);
        for (t, o) in out.iter_mut().enumerate() {
            let cell = (t / s).min(cells - 1);
            let left = c[cell];
            let right = if cell + 1 < cells { c[cell + 1] } else { 0.0 };
            let frac = (t - cell * s) as f64 / s as f64;
            *o = if frac == 0.0 { left } else { left + (right - left) * frac };
        }
    }
    Ok(like.derive(values, "affine_interpolation"))
}
