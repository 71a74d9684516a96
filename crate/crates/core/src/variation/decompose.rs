//! Discrete Doob and Rao decompositions and the telescoping paste of
//! decompositions of stopped processes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::oracle::{native_drift_table, DriftTable, OracleKind};
use crate::error::{Error, Result};
use crate::math::complement;
use crate::paths::{stop, PathEnsemble, StoppingTimes};

/// `S = M + A` with `M_0 = S_0`, `A_0 = 0` and predictable `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoobDecomposition {
    martingale: PathEnsemble,
    compensator: PathEnsemble,
    drift: Vec<f64>,
}

/// `S = Y - Z` with `Y = M + A⁺` and `Z = A⁻`.
#[derive(Debug, Clone, PartialEq)]
pub struct RaoDecomposition {
    increasing: PathEnsemble,
    decreasing: PathEnsemble,
    plus: Vec<f64>,
    minus: Vec<f64>,
}

fn complement_row(total: &[f64], part: &[f64], out: &mut [f64]) {
    for ((o, &t), &a) in out.iter_mut().zip(total).zip(part) {
        *o = complement(t, a);
    }
}

/// Largest `|fl(x + y) - target|` in units of `ε · max(|x|, |y|, |target|)`;
/// at most 1 for a split that is exact to machine precision.
pub fn reconstruction_ulps(x: &[f64], y: &[f64], target: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(target)
        .map(|((a, b), t)| {
            let err = (a + b - t).abs();
            if err == 0.0 {
                0.0
            } else {
                err / (f64::EPSILON * a.abs().max(b.abs()).max(t.abs()))
            }
        })
        .fold(0.0, f64::max)
}

fn cumulative(steps: &[f64], out: &mut [f64]) {
    out[0] = 0.0;
    for (i, d) in steps.iter().enumerate() {
        out[i + 1] = out[i] + d;
    }
}

/// Builds `M`, `A` from `target` (`S` or `S^σ`) and the per-step drifts.
fn assemble(target: &PathEnsemble, drift: Vec<f64>) -> Result<DoobDecomposition> {
    let len = target.grid().len();
    let steps = len - 1;
    let mut a = vec![0.0; target.values().len()];
    let mut m = vec![0.0; target.values().len()];
    for (p, row) in target.rows().enumerate() {
        let ar = &mut a[p * len..(p + 1) * len];
        cumulative(&drift[p * steps..(p + 1) * steps], ar);
        complement_row(row, ar, &mut m[p * len..(p + 1) * len]);
    }
    Ok(DoobDecomposition {
        martingale: target.derive(m, "M"),
        compensator: target.derive(a, "A"),
        drift,
    })
}

/// Doob decomposition on the ensemble's own grid.
pub fn doob_decompose(ens: &PathEnsemble, kind: OracleKind) -> Result<DoobDecomposition> {
    let table = native_drift_table(ens, kind)?;
    assemble(ens, table.values().to_vec())
}

/// Doob decomposition of `S^σ`: drifts of `S` gated by `1{t_i < σ}`.
pub fn doob_decompose_stopped(ens: &PathEnsemble, kind: OracleKind, sigma: &StoppingTimes) -> Result<DoobDecomposition> {
    let table = native_drift_table(ens, kind)?;
    let gated = table.of_stopped(sigma)?;
    assemble(&stop(ens, sigma)?, gated.values().to_vec())
}

impl DoobDecomposition {
    pub fn martingale(&self) -> &PathEnsemble {
        &self.martingale
    }

    pub fn compensator(&self) -> &PathEnsemble {
        &self.compensator
    }

    /// Compensator increment used at each step, row-major.
    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    /// `M + A` (bit-for-bit the decomposed process whenever floating point allows).
    pub fn reconstruct(&self) -> Vec<f64> {
        self.martingale
            .values()
            .iter()
            .zip(self.compensator.values())
            .map(|(m, a)| m + a)
            .collect()
    }

    /// See [`reconstruction_ulps`].
    pub fn reconstruction_ulps(&self, target: &PathEnsemble) -> f64 {
        reconstruction_ulps(self.martingale.values(), self.compensator.values(), target.values())
    }

    /// `E[ΔM_i | F_{t_i}] = E[ΔS_i | F_{t_i}] - ΔA_i`, using the exact drift
    /// table of `S` (gated by `1{t_i < σ}` for a stopped target). Zero up to
    /// rounding when `M` is a martingale.
    pub fn martingale_drift(&self, table: &DriftTable, sigma: Option<&StoppingTimes>) -> Result<Vec<f64>> {
        let grid = self.compensator.grid();
        if table.grid() != grid || table.level() != grid.level() {
            return Err(Error::GridMismatch {
                expected: grid.level(),
                found: table.level(),
            });
        }
        let gated;
        let t = match sigma {
            Some(s) => {
                gated = table.of_stopped(s)?;
                &gated
            }
            None => table,
        };
        let len = grid.len();
        let mut out = Vec::with_capacity(t.values().len());
        for (p, a) in self.compensator.rows().enumerate() {
            for i in 0..len - 1 {
                out.push(t.get(p, i) - (a[i + 1] - a[i]));
            }
        }
        Ok(out)
    }
}

/// Rao decomposition on the ensemble's own grid. The whole martingale part
/// goes to `Y`, so `Z` is predictable and increasing.
pub fn rao_decompose(ens: &PathEnsemble, kind: OracleKind) -> Result<RaoDecomposition> {
    let table = native_drift_table(ens, kind)?;
    let len = ens.grid().len();
    let steps = len - 1;
    let plus: Vec<f64> = table.values().iter().map(|&d| d.max(0.0)).collect();
    let minus: Vec<f64> = table.values().iter().map(|&d| (-d).max(0.0)).collect();
    let mut y = vec![0.0; ens.values().len()];
    let mut z = vec![0.0; ens.values().len()];
    let mut neg = vec![0.0; len];
    for (p, row) in ens.rows().enumerate() {
        let zr = &mut z[p * len..(p + 1) * len];
        cumulative(&minus[p * steps..(p + 1) * steps], zr);
        for (n, v) in neg.iter_mut().zip(zr.iter()) {
            *n = -v;
        }
        // fl(Y + (-Z)) == S is the same as fl(Y - Z) == S
        complement_row(row, &neg, &mut y[p * len..(p + 1) * len]);
    }
    Ok(RaoDecomposition {
        increasing: ens.derive(y, "Y"),
        decreasing: ens.derive(z, "Z"),
        plus,
        minus,
    })
}

impl RaoDecomposition {
    pub fn y(&self) -> &PathEnsemble {
        &self.increasing
    }

    pub fn z(&self) -> &PathEnsemble {
        &self.decreasing
    }

    /// Conditional increments of `Y` (`drift⁺`), row-major.
    pub fn y_drift(&self) -> &[f64] {
        &self.plus
    }

    /// Conditional increments of `Z` (`drift⁻`), row-major.
    pub fn z_drift(&self) -> &[f64] {
        &self.minus
    }

    /// Per path `A⁺_1 + A⁻_1`, the total absolute drift.
    pub fn total_drift(&self) -> Vec<f64> {
        let len = self.increasing.grid().len();
        let steps = len - 1;
        self.plus
            .chunks(steps)
            .zip(self.minus.chunks(steps))
            .map(|(a, b)| {
                let mut up = vec![0.0; len];
                let mut down = vec![0.0; len];
                cumulative(a, &mut up);
                cumulative(b, &mut down);
                up[len - 1] + down[len - 1]
            })
            .collect()
    }

    /// `Y - Z` (bit-for-bit `S` whenever floating point allows).
    pub fn reconstruct(&self) -> Vec<f64> {
        self.increasing
            .values()
            .iter()
            .zip(self.decreasing.values())
            .map(|(y, z)| y - z)
            .collect()
    }

    /// See [`reconstruction_ulps`].
    pub fn reconstruction_ulps(&self, target: &PathEnsemble) -> f64 {
        let neg: Vec<f64> = self.decreasing.values().iter().map(|z| -z).collect();
        reconstruction_ulps(self.increasing.values(), &neg, target.values())
    }
}

/// Pastes decompositions of `S^{σ_1}, S^{σ_2}, ...` (with `σ_k`
/// non-decreasing) into one decomposition of `S^{σ_K}`.
///
/// On `(σ_{k-1}, σ_k]` the increments of the `k`-th piece are used, so the
/// result agrees with the first piece up to `σ_1` and every later piece only
/// contributes after the previous stopping time.
pub fn telescope_paste(pieces: &[(StoppingTimes, DoobDecomposition)]) -> Result<DoobDecomposition> {
    let (first_sigma, first) = pieces.first().ok_or(Error::Empty("pieces"))?;
    let grid = first.compensator.grid();
    let n = first.compensator.n_paths();
    for (sigma, d) in pieces {
        first_sigma.check_compatible(sigma)?;
        if d.compensator.grid() != grid || d.compensator.n_paths() != n {
            return Err(Error::GridMismatch {
                expected: grid.level(),
                found: d.compensator.grid().level(),
            });
        }
    }
    for w in pieces.windows(2) {
        for p in 0..n {
            if w[1].0.raw(p) < w[0].0.raw(p) {
                return Err(Error::Structural(format!("stopping times decrease on path {p}")));
            }
        }
    }
    let len = grid.len();
    let steps = len - 1;
    let size = n * len;
    let mut a = vec![0.0; size];
    let mut m_tel = vec![0.0; size];
    let mut m = vec![0.0; size];
    let mut drift = vec![0.0; n * steps];
    let last = &pieces[pieces.len() - 1].1;
    for p in 0..n {
        for t in 0..len {
            let at = |d: &DoobDecomposition, s: usize| (d.compensator.value(p, s), d.martingale.value(p, s));
            let (mut av, mut mv) = at(first, t.min(first_sigma.effective(p)));
            for k in 1..pieces.len() {
                let (prev, _) = &pieces[k - 1];
                let (sigma, d) = &pieces[k];
                let hi = at(d, t.min(sigma.effective(p)));
                let lo = at(d, t.min(prev.effective(p)));
                av += hi.0 - lo.0;
                mv += hi.1 - lo.1;
            }
            a[p * len + t] = av;
            m_tel[p * len + t] = mv;
        }
        for i in 0..steps {
            let k = pieces.iter().position(|(s, _)| i < s.raw(p));
            if let Some(k) = k {
                drift[p * steps + i] = pieces[k].1.drift[p * steps + i];
            }
        }
        let target: Vec<f64> = (0..len)
            .map(|t| last.martingale.value(p, t) + last.compensator.value(p, t))
            .collect();
        complement_row(&target, &a[p * len..(p + 1) * len], &mut m[p * len..(p + 1) * len]);
        for t in 0..len {
            let (x, y) = (m[p * len + t], m_tel[p * len + t]);
            if (x - y).abs() > 1e-9 * (1.0 + x.abs() + y.abs()) {
                return Err(Error::Invariant(format!(
                    "path {p}, index {t}: telescoped M {y} disagrees with S - A = {x}"
                )));
            }
        }
    }
    Ok(DoobDecomposition {
        martingale: last.martingale.derive(m, "M"),
        compensator: last.compensator.derive(a, "A"),
        drift,
    })
}
