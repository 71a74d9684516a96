//! Forward convex combinations of the indicators `1{ρ_k = ∞}` and the
//! accumulation stopping time built from them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::minnorm::{min_norm_convex, ConvexWeights};
use crate::error::{Error, Result};
use crate::paths::StoppingTimes;

/// Default number of vectors in each tail window.
pub const DEFAULT_WINDOW: usize = 8;

/// Min-norm weights over each tail window `{n, ..., min(n + W, len) - 1}`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MazurSequence {
    pub window: usize,
    pub weights: Vec<ConvexWeights>,
}

impl MazurSequence {
    /// `‖Y_n‖` in `L²(P)` (root mean square over paths).
    pub fn norms(&self, n_paths: usize) -> Vec<f64> {
        let scale = 1.0 / (n_paths.max(1) as f64);
        self.weights
            .iter()
            .map(|w| crate::math::sqrt(w.objective * scale))
            .collect()
    }

    /// `Y_n = Σ_k μ_k^n X_k`.
    pub fn combinations(&self, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.weights.iter().map(|w| w.combine(xs)).collect()
    }

    /// Whether the windows are nested tails, i.e. every window runs to the
    /// end of the sequence. Then `‖Y_n‖` is non-decreasing in `n`.
    pub fn nested(&self) -> bool {
        self.weights
            .last()
            .is_none_or(|last| self.weights.iter().all(|w| w.end == last.end))
    }
}

/// Runs [`min_norm_convex`] on every tail window of `xs`.
pub fn mazur_sequence(xs: &[Vec<f64>], window: usize) -> Result<MazurSequence> {
    if window == 0 {
        return Err(Error::Domain("window must be at least 1".into()));
    }
    if xs.is_empty() {
        return Err(Error::Empty("mazur sequence needs at least one vector"));
    }
    let len = xs.len();
    let weights = (0..len)
        .map(|n| {
            let end = (n + window).min(len);
            let mut w = min_norm_convex(&xs[n..end])?;
            w.start = n;
            w.end = end;
            Ok(w)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MazurSequence { window, weights })
}

/// `1{ρ = ∞}` as a 0/1 vector.
pub fn infinity_indicator(rho: &StoppingTimes) -> Vec<f64> {
    (0..rho.n_paths())
        .map(|p| if rho.is_infinite(p) { 1.0 } else { 0.0 })
        .collect()
}

/// Per path, the largest grid time `t` with `Σ_k μ_k^n 1_{[0,ρ_k]}(s) >= 1/2`
/// for all `s <= t` and every `n`; `∞` when the combinations stay above `1/2`
/// at every grid time and also `Σ_k μ_k^n 1{ρ_k = ∞} >= 1/2` for every `n`.
///
/// The factor-two domination `1_{[0,ρ]}(t) <= 2 Σ_k μ_k^n 1_{[0,ρ_k]}(t)` is
/// re-checked at every grid time of every path; a violation is reported as
/// [`Error::Invariant`].
pub fn accumulation_stopping_time(rhos: &[StoppingTimes], seq: &[ConvexWeights]) -> Result<StoppingTimes> {
    let first = rhos.first().ok_or(Error::Empty("stopping times"))?;
    let grid = first.grid();
    for r in rhos {
        first.check_compatible(r)?;
    }
    for w in seq {
        if w.end > rhos.len() || w.start >= w.end || w.weights.len() != w.end - w.start {
            return Err(Error::Structural(format!(
                "weights for window {}..{} do not fit {} stopping times",
                w.start,
                w.end,
                rhos.len()
            )));
        }
        if w.weights.iter().any(|&x| x < 0.0) || (w.weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Domain("weights must form a convex combination".into()));
        }
    }
    let inf = StoppingTimes::infinity_index(grid);
    let last = grid.last();
    let n = first.n_paths();
    let mut out = vec![0u32; n];
    // scratch: (raw index, weight) sorted descending by index
    let mut pairs: Vec<(usize, f64)> = Vec::new();
    for (p, o) in out.iter_mut().enumerate() {
        let mut rho = inf;
        for w in seq {
            pairs.clear();
            pairs.extend((w.start..w.end).map(|k| rhos[k].raw(p)).zip(w.weights.iter().copied()));
            let at_infinity: f64 = pairs.iter().filter(|(r, _)| *r == inf).map(|(_, m)| m).sum();
            // combo(t) = Σ μ_k 1{t <= ρ_k}; it only drops right after a ρ_k,
            // so the largest t with combo(t) >= 1/2 is last or some ρ_k.
            let combo = |t: usize| -> f64 { pairs.iter().filter(|(r, _)| t <= *r).map(|(_, m)| m).sum() };
            let t_n = if combo(last) >= 0.5 {
                if at_infinity >= 0.5 {
                    inf
                } else {
                    last
                }
            } else {
                pairs
                    .iter()
                    .map(|(r, _)| *r)
                    .filter(|&r| r < last && combo(r) >= 0.5)
                    .max()
                    .unwrap_or(0)
            };
            rho = rho.min(t_n);
        }
        *o = rho as u32;
    }
    let result = StoppingTimes::from_raw(grid, out);
    check_domination(&result, rhos, seq)?;
    Ok(result)
}

/// `1_{[0,ρ]}(t) <= 2 Σ_k μ_k^n 1_{[0,ρ_k]}(t)` at every grid time (and at
/// `∞`), every path and every window.
pub fn check_domination(rho: &StoppingTimes, rhos: &[StoppingTimes], seq: &[ConvexWeights]) -> Result<()> {
    let grid = rho.grid();
    let inf = StoppingTimes::infinity_index(grid);
    let mut order: Vec<(usize, f64)> = Vec::new();
    for p in 0..rho.n_paths() {
        let r = rho.raw(p);
        for w in seq {
            order.clear();
            order.extend((w.start..w.end).map(|k| rhos[k].raw(p)).zip(w.weights.iter().copied()));
            order.sort_by(|a, b| a.0.cmp(&b.0));
            // sweep t = 0..=inf; mass of ρ_k >= t decreases as t passes them
            let mut mass: f64 = order.iter().map(|x| x.1).sum();
            let mut next = 0;
            for t in 0..=inf {
                while next < order.len() && order[next].0 < t {
                    mass -= order[next].1;
                    next += 1;
                }
                if t > r {
                    break;
                }
                if 1.0 > 2.0 * mass + 1e-12 {
                    return Err(Error::Invariant(format!(
                        "domination fails on path {p} at index {t} for window {}..{}",
                        w.start, w.end
                    )));
                }
            }
        }
    }
    Ok(())
}
