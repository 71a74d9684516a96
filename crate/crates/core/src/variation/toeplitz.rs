//! Levinson-type solvers for symmetric positive-definite Toeplitz systems.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One-step linear predictors of a stationary sequence for every order up to
/// `max_order` (Durbin–Levinson recursion).
///
/// `coeff(order, lag)` is the weight on `X_{order - lag}` in the best linear
/// predictor of `X_order` from `X_0..X_{order-1}`; `mse(order)` is its error
/// variance.
#[derive(Debug, Clone)]
pub struct Predictors {
    phi: Vec<f64>,
    mse: Vec<f64>,
}

fn offset(order: usize) -> usize {
    order * (order - 1) / 2
}

impl Predictors {
    pub fn new(gamma: &[f64], max_order: usize) -> Result<Self> {
        if gamma.len() <= max_order {
            return Err(Error::LengthMismatch {
                left: gamma.len(),
                right: max_order + 1,
            });
        }
        if !(gamma[0] > 0.0) {
            return Err(Error::Domain("autocovariance at lag 0 must be positive".into()));
        }
        let mut phi = vec![0.0; offset(max_order + 1)];
        let mut mse = vec![0.0; max_order + 1];
        mse[0] = gamma[0];
        for order in 1..=max_order {
            let (done, rest) = phi.split_at_mut(offset(order));
            let prev: &[f64] = if order == 1 { &[] } else { &done[offset(order - 1)..] };
            let mut num = gamma[order];
            for (j, p) in prev.iter().enumerate() {
                num -= p * gamma[order - 1 - j];
            }
            let v = mse[order - 1];
            if !(v > 0.0) {
                return Err(Error::Domain("autocovariance is not positive definite".into()));
            }
            let k = num / v;
            let cur = &mut rest[..order];
            for j in 0..order - 1 {
                cur[j] = prev[j] - k * prev[order - 2 - j];
            }
            cur[order - 1] = k;
            mse[order] = v * (1.0 - k * k);
        }
        Ok(Self { phi, mse })
    }

    pub fn max_order(&self) -> usize {
        self.mse.len() - 1
    }

    /// Weight on `X_{order - lag}`, `1 <= lag <= order`.
    pub fn coeff(&self, order: usize, lag: usize) -> f64 {
        self.phi[offset(order) + lag - 1]
    }

    /// Weights for `X_order` indexed by lag `1..=order`.
    pub fn by_lag(&self, order: usize) -> &[f64] {
        &self.phi[offset(order)..offset(order) + order]
    }

    pub fn mse(&self, order: usize) -> f64 {
        self.mse[order]
    }
}

/// Solves `T x = rhs` where `T` is the symmetric Toeplitz matrix with first
/// column `col` (Levinson's algorithm for a general right-hand side).
pub fn levinson_solve(col: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = col.len();
    if rhs.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: rhs.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let scale = col[0];
    if !(scale > 0.0) {
        return Err(Error::Domain("Toeplitz diagonal must be positive".into()));
    }
    let r: Vec<f64> = col[1..].iter().map(|c| c / scale).collect();
    let b: Vec<f64> = rhs.iter().map(|c| c / scale).collect();
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    x[0] = b[0];
    if n == 1 {
        return Ok(x);
    }
    y[0] = -r[0];
    let mut beta = 1.0;
    let mut alpha = -r[0];
    for k in 1..n {
        beta *= 1.0 - alpha * alpha;
        if !(beta > 0.0) {
            return Err(Error::Domain("Toeplitz matrix is not positive definite".into()));
        }
        let mut dot = 0.0;
        for j in 0..k {
            dot += r[j] * x[k - 1 - j];
        }
        let mu = (b[k] - dot) / beta;
        for j in 0..k {
            z[j] = x[j] + mu * y[k - 1 - j];
        }
        x[..k].copy_from_slice(&z[..k]);
        x[k] = mu;
        if k < n - 1 {
            let mut dot = 0.0;
            for j in 0..k {
                dot += r[j] * y[k - 1 - j];
            }
            alpha = (-r[k] - dot) / beta;
            for j in 0..k {
                z[j] = y[j] + alpha * y[k - 1 - j];
            }
            y[..k].copy_from_slice(&z[..k]);
            y[k] = alpha;
        }
    }
    Ok(x)
}
