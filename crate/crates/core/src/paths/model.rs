use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::powf;

/// Law of the adapted process `S` being sampled.
///
/// Every model except the truncation starts at zero; a deterministic function
/// starts at its value at `t = 0`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessModel {
    /// `mu t + sigma W_t`.
    BrownianMotion { drift: f64, volatility: f64 },
    /// Standard fBm with `Var B_1 = 1`.
    FractionalBrownianMotion { hurst: f64 },
    /// `N_t - rate t` for a Poisson process `N`.
    CompensatedPoisson { rate: f64 },
    /// `W_t^2`.
    SquaredBrownian,
    /// `dX = -theta X dt + sigma dW`, `X_0 = 0`.
    OrnsteinUhlenbeck { reversion: f64, volatility: f64 },
    /// Piecewise-linear interpolation of `(t, f(t))` knots, constant outside.
    DeterministicFunction { knots: Vec<(f64, f64)> },
    /// `clamp(X_t, -bound, bound)` for an inner process `X`. The filtration is
    /// the one generated by `X`, whose path is kept as the ensemble's latent
    /// history.
    BoundedTruncation { inner: Box<ProcessModel>, bound: f64 },
}

impl ProcessModel {
    pub fn brownian(drift: f64, volatility: f64) -> Self {
        Self::BrownianMotion { drift, volatility }
    }

    pub fn fbm(hurst: f64) -> Self {
        Self::FractionalBrownianMotion { hurst }
    }

    pub fn linear() -> Self {
        Self::DeterministicFunction {
            knots: alloc::vec![(0.0, 0.0), (1.0, 1.0)],
        }
    }

    pub fn truncated(inner: ProcessModel, bound: f64) -> Self {
        Self::BoundedTruncation {
            inner: Box::new(inner),
            bound,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::BrownianMotion { .. } => "brownian_motion",
            Self::FractionalBrownianMotion { .. } => "fractional_brownian_motion",
            Self::CompensatedPoisson { .. } => "compensated_poisson",
            Self::SquaredBrownian => "squared_brownian",
            Self::OrnsteinUhlenbeck { .. } => "ornstein_uhlenbeck",
            Self::DeterministicFunction { .. } => "deterministic_function",
            Self::BoundedTruncation { .. } => "bounded_truncation",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be finite, got {x}")))
            }
        };
        match self {
            Self::BrownianMotion { drift, volatility } => {
                finite("drift", *drift)?;
                finite("volatility", *volatility)?;
                if *volatility < 0.0 {
                    return Err(Error::Domain(format!("volatility must be >= 0, got {volatility}")));
                }
            }
            Self::FractionalBrownianMotion { hurst } => check_hurst(*hurst)?,
            Self::CompensatedPoisson { rate } => {
                finite("rate", *rate)?;
                if *rate < 0.0 {
                    return Err(Error::Domain(format!("rate must be >= 0, got {rate}")));
                }
            }
            Self::SquaredBrownian => {}
            Self::OrnsteinUhlenbeck { reversion, volatility } => {
                finite("reversion", *reversion)?;
                finite("volatility", *volatility)?;
                if *volatility < 0.0 || *reversion < 0.0 {
                    return Err(Error::Domain(format!(
                        "reversion and volatility must be >= 0, got {reversion}, {volatility}"
                    )));
                }
            }
            Self::DeterministicFunction { knots } => {
                if knots.is_empty() {
                    return Err(Error::Empty("deterministic function knots"));
                }
                for &(t, v) in knots {
                    finite("knot time", t)?;
                    finite("knot value", v)?;
                }
                if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(Error::Domain("knot times must be strictly increasing".into()));
                }
            }
            Self::BoundedTruncation { inner, bound } => {
                finite("bound", *bound)?;
                if *bound <= 0.0 {
                    return Err(Error::Domain(format!("bound must be > 0, got {bound}")));
                }
                if matches!(**inner, Self::BoundedTruncation { .. }) {
                    return Err(Error::Domain("nested truncations are not supported".into()));
                }
                inner.validate()?;
            }
        }
        Ok(())
    }

    /// Whether `E[S_{t+h} - S_t | history]` has a closed form (analytic or
    /// exact Gaussian linear prediction) at every grid index.
    pub fn has_exact_drift_oracle(&self) -> bool {
        match self {
            Self::BoundedTruncation { inner, .. } => matches!(
                **inner,
                Self::BrownianMotion { .. }
                    | Self::OrnsteinUhlenbeck { .. }
                    | Self::FractionalBrownianMotion { .. }
                    | Self::DeterministicFunction { .. }
            ),
            _ => true,
        }
    }

    /// A true almost-sure bound on `sup_t |S_t|`, when the model has one.
    pub fn known_sup_bound(&self) -> Option<f64> {
        match self {
            Self::BoundedTruncation { bound, .. } => Some(*bound),
            Self::DeterministicFunction { knots } => {
                Some(knots.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs())))
            }
            Self::BrownianMotion { volatility, drift } if *volatility == 0.0 => Some(drift.abs()),
            _ => None,
        }
    }

    /// Markov in its own state, so a cross-ensemble regression on `S_t` is a
    /// consistent estimate of the conditional drift.
    pub fn is_markov(&self) -> bool {
        !matches!(
            self,
            Self::FractionalBrownianMotion { .. } | Self::BoundedTruncation { .. }
        )
    }

    pub fn initial_value(&self) -> f64 {
        match self {
            Self::DeterministicFunction { .. } => self.deterministic_value(0.0),
            Self::BoundedTruncation { inner, bound } => inner.initial_value().clamp(-bound, *bound),
            _ => 0.0,
        }
    }

    /// Value of a deterministic function at `t`; zero for random models.
    pub fn deterministic_value(&self, t: f64) -> f64 {
        let Self::DeterministicFunction { knots } = self else {
            return 0.0;
        };
        let first = knots[0];
        if t <= first.0 {
            return first.1;
        }
        for w in knots.windows(2) {
            let ((t0, v0), (t1, v1)) = (w[0], w[1]);
            if t <= t1 {
                if t == t1 {
                    return v1;
                }
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
            }
        }
        knots[knots.len() - 1].1
    }

    pub fn hurst(&self) -> Option<f64> {
        match self {
            Self::FractionalBrownianMotion { hurst } => Some(*hurst),
            Self::BoundedTruncation { inner, .. } => inner.hurst(),
            _ => None,
        }
    }
}

fn check_hurst(h: f64) -> Result<()> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("hurst index must lie in (0, 1), got {h}")))
    }
}

/// `Cov(B_s, B_t) = (s^{2H} + t^{2H} - |t - s|^{2H}) / 2` for standard fBm.
pub fn fbm_covariance(hurst: f64, s: f64, t: f64) -> Result<f64> {
    check_hurst(hurst)?;
    for x in [s, t] {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("time {x} outside [0, 1]")));
        }
    }
    let e = 2.0 * hurst;
    Ok(0.5 * (powf(s, e) + powf(t, e) - powf((t - s).abs(), e)))
}

/// Autocovariance of unit-step fractional Gaussian noise at lag `k`:
/// `(|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) / 2`.
pub fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let e = 2.0 * hurst;
    let k = k as f64;
    0.5 * (powf(k + 1.0, e) - 2.0 * powf(k, e) + powf((k - 1.0).abs(), e))
}
