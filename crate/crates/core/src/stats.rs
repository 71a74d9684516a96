//! Sample statistics over per-path samples.

use alloc::vec::Vec;

use crate::math::sqrt;

/// Mean and Monte Carlo standard error (sample std / sqrt(N)).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

pub fn estimate(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n == 0 {
        return Estimate { mean: 0.0, stderr: 0.0 };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Estimate { mean, stderr: 0.0 };
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    Estimate {
        mean,
        stderr: sqrt(ss / (n - 1) as f64 / n as f64),
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    estimate(xs).mean
}

pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Fraction of `true` entries with its binomial standard error.
pub fn proportion(flags: impl Iterator<Item = bool>) -> Estimate {
    let (mut hits, mut n) = (0usize, 0usize);
    for f in flags {
        n += 1;
        hits += f as usize;
    }
    if n == 0 {
        return Estimate { mean: 0.0, stderr: 0.0 };
    }
    let p = hits as f64 / n as f64;
    Estimate {
        mean: p,
        stderr: sqrt(p * (1.0 - p) / n as f64),
    }
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Smallest `c` such that at most `floor(eps * N)` samples satisfy `x >= c`.
///
/// This is the empirical upper `(1 - eps)`-quantile in the form needed for
/// statements like `P(X >= C) <= eps`; ties at the cut never count against
/// the bound.
pub fn upper_quantile(xs: &[f64], eps: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let v = sorted(xs);
    let n = v.len();
    let allowed = ((eps.clamp(0.0, 1.0)) * n as f64 + 1e-9) as usize;
    if allowed >= n {
        return f64::NEG_INFINITY;
    }
    // the (allowed+1)-th largest sample must sit strictly below c
    v[n - 1 - allowed].next_up()
}

/// Order-statistic standard error of the `(1 - eps)`-quantile: half the spread
/// between the order statistics one binomial standard deviation either side.
pub fn quantile_stderr(xs: &[f64], eps: f64) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let v = sorted(xs);
    let p = 1.0 - eps;
    let half = sqrt(p * (1.0 - p) * n as f64);
    let centre = p * n as f64;
    let idx = |x: f64| -> usize { (x.max(0.0) as usize).min(n - 1) };
    let lo = v[idx(centre - half)];
    let hi = v[idx(centre + half)];
    0.5 * (hi - lo)
}

/// Ordinary least squares `y ~ a + b x`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 when `y` has no spread.
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len().min(y.len());
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r_squared = if syy > 0.0 && sxx > 0.0 {
        (sxy * sxy) / (sxx * syy)
    } else {
        1.0
    };
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    }
}
