//! Ky Fan distance and a finite Cauchy test for convergence in probability.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::stats::{estimate, Estimate};

/// Cutoffs used by the verdicts of this module and of the probe.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Thresholds {
    /// Cauchy tolerance: convergent if all top-half distances stay below it.
    pub conv: f64,
    /// Divergence cutoff for the Ky Fan distance.
    pub div: f64,
    /// Probe: bounded if the fitted log2-growth exponent is at most this.
    pub exponent_bounded: f64,
    /// Probe: unbounded if the exponent is at least this ...
    pub exponent_unbounded: f64,
    /// ... and the fit's R² is at least this.
    pub min_fit: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            conv: 0.05,
            div: 0.2,
            exponent_bounded: 0.05,
            exponent_unbounded: 0.15,
            min_fit: 0.9,
        }
    }
}

/// `E[min(1, |X - Y|)]` over the shared sample.
pub fn ky_fan_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(ky_fan_estimate(x, y)?.mean)
}

/// Ky Fan distance with its Monte Carlo standard error.
pub fn ky_fan_estimate(x: &[f64], y: &[f64]) -> Result<Estimate> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::Empty("samples"));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - b).abs().min(1.0)).collect();
    Ok(estimate(&d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceVerdict {
    Convergent,
    Divergent,
    Inconclusive,
}

impl ConvergenceVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Convergent => "convergent",
            Self::Divergent => "divergent",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConvergenceReport {
    pub levels: Vec<u32>,
    /// `distances[i][j] = d(levels[i], levels[j])`.
    pub distances: Vec<Vec<f64>>,
    pub verdict: ConvergenceVerdict,
    pub thresholds: Thresholds,
    /// Largest distance among the top half of the levels.
    pub top_max: f64,
}

impl ConvergenceReport {
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances[i][j]
    }
}

/// Cauchy verdict for a sequence of per-path samples indexed by level.
///
/// Only the top half of the levels (from index `len / 2` on) is judged:
/// convergent if every pairwise distance there is below `conv`; divergent if
/// the distance from the first top level to the last is at least `div` and
/// the distances from that first top level grow with the level (up to a
/// slack of `conv`); inconclusive otherwise.
pub fn convergence_in_probability(levels: &[u32], samples: &[Vec<f64>], thresholds: Thresholds) -> Result<ConvergenceReport> {
    if samples.len() != levels.len() {
        return Err(Error::LengthMismatch {
            left: levels.len(),
            right: samples.len(),
        });
    }
    if levels.len() < 3 {
        return Err(Error::InsufficientLevels {
            got: levels.len(),
            need: 3,
        });
    }
    let k = levels.len();
    let mut distances = alloc::vec![alloc::vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let d = ky_fan_distance(&samples[i], &samples[j])?;
            distances[i][j] = d;
            distances[j][i] = d;
        }
    }
    let lo = k / 2;
    let mut top_max = 0.0f64;
    for i in lo..k {
        for j in i + 1..k {
            top_max = top_max.max(distances[i][j]);
        }
    }
    let from_first: Vec<f64> = (lo + 1..k).map(|j| distances[lo][j]).collect();
    let growing = from_first.windows(2).all(|w| w[1] >= w[0] - thresholds.conv);
    let verdict = if top_max < thresholds.conv {
        ConvergenceVerdict::Convergent
    } else if distances[lo][k - 1] >= thresholds.div && growing {
        ConvergenceVerdict::Divergent
    } else {
        ConvergenceVerdict::Inconclusive
    };
    Ok(ConvergenceReport {
        levels: levels.to_vec(),
        distances,
        verdict,
        thresholds,
        top_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn distance_examples() {
        let x = [0.1, -3.0, 2.0];
        assert_eq!(ky_fan_distance(&x, &x).unwrap(), 0.0);
        let y = [5.0, 1.0, -2.0];
        assert_eq!(ky_fan_distance(&x, &y).unwrap(), 1.0);
        assert!(ky_fan_distance(&x, &y[..2]).is_err());
    }

    #[test]
    fn uniform_difference_has_distance_one_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 20000;
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y = alloc::vec![0.0; n];
        let e = ky_fan_estimate(&x, &y).unwrap();
        assert!((e.mean - 0.5).abs() <= 3.0 * e.stderr);
    }

    #[test]
    fn verdict_examples() {
        let levels = [4u32, 5, 6, 7];
        let constant: Vec<Vec<f64>> = (0..4).map(|_| alloc::vec![1.5; 10]).collect();
        let r = convergence_in_probability(&levels, &constant, Thresholds::default()).unwrap();
        assert_eq!(r.verdict, ConvergenceVerdict::Convergent);
        assert!(r.distances.iter().flatten().all(|&d| d == 0.0));

        let growing: Vec<Vec<f64>> = levels.iter().map(|&n| alloc::vec![n as f64; 10]).collect();
        let r = convergence_in_probability(&levels, &growing, Thresholds::default()).unwrap();
        assert_eq!(r.verdict, ConvergenceVerdict::Divergent);

        assert!(matches!(
            convergence_in_probability(&levels[..2], &growing[..2], Thresholds::default()),
            Err(Error::InsufficientLevels { .. })
        ));
    }
}
