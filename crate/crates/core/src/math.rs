//! Scalar helpers on top of `libm`.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

/// `sign(0) = 0`; NaN maps to 0 as well.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    exp(-0.5 * x * x) / sqrt(2.0 * PI)
}

/// `E[clamp(Y, -b, b)]` for `Y ~ N(mean, var)`.
pub fn clamped_gaussian_mean(mean: f64, var: f64, b: f64) -> f64 {
    if var <= 0.0 {
        return mean.clamp(-b, b);
    }
    let sd = sqrt(var);
    let lo = (-b - mean) / sd;
    let hi = (b - mean) / sd;
    let below = normal_cdf(lo);
    // 1 - Phi(hi) without cancellation
    let above = normal_cdf(-hi);
    let inside = 1.0 - below - above;
    let body = mean * inside + sd * (normal_pdf(lo) - normal_pdf(hi));
    (-b * below + b * above + body).clamp(-b, b)
}

/// `total - part`, nudged by a few ulps when that makes `fl(part + r) == total`.
///
/// Bit-exact reconstruction is impossible when `total` carries bits below the
/// ulp of `part` (say a tiny total split around a large part); the plain
/// difference is then within one rounding of the true complement.
pub fn complement(total: f64, part: f64) -> f64 {
    exact_complement(total, part).unwrap_or(total - part)
}

/// Finds `r` with `fl(part + r) == total`, so that a two-way split of
/// `total` reconstructs it bit-for-bit.
pub fn exact_complement(total: f64, part: f64) -> Option<f64> {
    let mut r = total - part;
    if part + r == total {
        return Some(r);
    }
    let base = r;
    for dir in [1.0f64, -1.0] {
        r = base;
        for _ in 0..4 {
            r = if dir > 0.0 { r.next_up() } else { r.next_down() };
            if part + r == total {
                return Some(r);
            }
        }
    }
    None
}
