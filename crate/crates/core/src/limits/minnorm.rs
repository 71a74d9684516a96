//! Minimum-norm point of the convex hull of finitely many vectors (Wolfe's
//! algorithm in Gram-matrix form).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const MAX_MAJOR: usize = 1000;
const MAX_MINOR: usize = 1000;

/// Convex weights `μ_start..μ_{end-1}` over a window of a sequence.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConvexWeights {
    /// Index of the first vector of the window.
    pub start: usize,
    /// One past the last vector of the window.
    pub end: usize,
    pub weights: Vec<f64>,
    /// Squared norm of the combination.
    pub objective: f64,
    /// Frank–Wolfe gap `‖x‖² - min_j ⟨x, v_j⟩`; zero at the optimum. The
    /// objective is within `2 · gap` of the minimum.
    pub gap: f64,
    pub converged: bool,
}

impl ConvexWeights {
    pub fn norm(&self) -> f64 {
        crate::math::sqrt(self.objective)
    }

    /// `Σ μ_k v_k` for the window vectors.
    pub fn combine(&self, vectors: &[Vec<f64>]) -> Vec<f64> {
        let dim = vectors.first().map_or(0, Vec::len);
        let mut out = vec![0.0; dim];
        for (w, v) in self.weights.iter().zip(&vectors[self.start..self.end]) {
            for (o, x) in out.iter_mut().zip(v) {
                *o += w * x;
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves a small dense system by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for i in 0..n {
        let piv = (i..n).max_by(|&p, &q| a[p][i].abs().total_cmp(&a[q][i].abs()))?;
        if a[piv][i].abs() < 1e-300 {
            return None;
        }
        a.swap(i, piv);
        b.swap(i, piv);
        for r in i + 1..n {
            let f = a[r][i] / a[i][i];
            if f != 0.0 {
                for c in i..n {
                    a[r][c] -= f * a[i][c];
                }
                b[r] -= f * b[i];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|c| a[i][c] * x[c]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Minimizer of `‖Σ a_i v_i‖²` over affine weights (`Σ a_i = 1`) on `set`.
fn affine_min(gram: &[Vec<f64>], set: &[usize]) -> Option<Vec<f64>> {
    let k = set.len();
    let mut a = vec![vec![0.0; k + 1]; k + 1];
    for (r, &i) in set.iter().enumerate() {
        for (c, &j) in set.iter().enumerate() {
            a[r][c] = gram[i][j];
        }
        a[r][k] = 1.0;
        a[k][r] = 1.0;
    }
    let mut b = vec![0.0; k + 1];
    b[k] = 1.0;
    solve(a, b).map(|mut x| {
        x.truncate(k);
        x
    })
}

/// Weights of the minimum-norm point of `conv(vectors)`.
pub fn min_norm_convex(vectors: &[Vec<f64>]) -> Result<ConvexWeights> {
    let k = vectors.len();
    if k == 0 {
        return Err(Error::Empty("min-norm needs at least one vector"));
    }
    let dim = vectors[0].len();
    for v in vectors {
        if v.len() != dim {
            return Err(Error::LengthMismatch { left: dim, right: v.len() });
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite entry {x}")));
        }
    }
    let gram: Vec<Vec<f64>> = vectors
        .iter()
        .map(|a| vectors.iter().map(|b| dot(a, b)).collect())
        .collect();
    let scale = (0..k).map(|i| gram[i][i]).fold(0.0f64, f64::max);
    let tol = 1e-14 * scale.max(f64::MIN_POSITIVE);

    let start = (0..k).min_by(|&a, &b| gram[a][a].total_cmp(&gram[b][b])).unwrap_or(0);
    let mut lambda = vec![0.0; k];
    lambda[start] = 1.0;
    let mut set = vec![start];
    let mut converged = false;
    let objective_of = |l: &[f64]| -> (f64, Vec<f64>) {
        let g: Vec<f64> = (0..k).map(|j| (0..k).map(|i| l[i] * gram[i][j]).sum()).collect();
        (dot(l, &g), g)
    };
    for _ in 0..MAX_MAJOR {
        let (xx, g) = objective_of(&lambda);
        let (j, gj) = g
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(j, &v)| (j, v))
            .unwrap_or((0, 0.0));
        if xx - gj <= tol || set.contains(&j) {
            converged = true;
            break;
        }
        set.push(j);
        let mut minor_ok = false;
        for _ in 0..MAX_MINOR {
            let Some(alpha) = affine_min(&gram, &set) else {
                break;
            };
            if alpha.iter().all(|&a| a > 1e-15) {
                for l in lambda.iter_mut() {
                    *l = 0.0;
                }
                for (&i, &a) in set.iter().zip(&alpha) {
                    lambda[i] = a;
                }
                minor_ok = true;
                break;
            }
            // step from λ towards α until a weight hits zero
            let mut theta = 1.0f64;
            for (&i, &a) in set.iter().zip(&alpha) {
                if a <= 1e-15 {
                    let l = lambda[i];
                    if l - a > 0.0 {
                        theta = theta.min(l / (l - a));
                    }
                }
            }
            for (&i, &a) in set.iter().zip(&alpha) {
                lambda[i] = (1.0 - theta) * lambda[i] + theta * a;
            }
            set.retain(|&i| lambda[i] > 1e-15);
            for (i, l) in lambda.iter_mut().enumerate() {
                if !set.contains(&i) {
                    *l = 0.0;
                }
            }
        }
        if !minor_ok {
            break;
        }
    }
    // renormalize away rounding drift
    let total: f64 = lambda.iter().sum();
    for l in lambda.iter_mut() {
        *l = l.max(0.0) / total;
    }
    let (xx, g) = objective_of(&lambda);
    let gap = (xx - g.iter().copied().fold(f64::INFINITY, f64::min)).max(0.0);
    Ok(ConvexWeights {
        start: 0,
        end: k,
        weights: lambda,
        objective: xx.max(0.0),
        gap,
        converged: converged || gap <= tol,
    })
}
