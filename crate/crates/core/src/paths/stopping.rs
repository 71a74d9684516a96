use alloc::vec::Vec;

use super::ensemble::PathEnsemble;
use super::grid::DyadicGrid;
use crate::error::{Error, Result};

/// Per-path stopping time on a grid, valued in grid indices or `∞`.
///
/// Public constructors either evaluate a predicate on path prefixes or
/// combine existing stopping times, so adaptedness holds by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoppingTimes {
    grid: DyadicGrid,
    idx: Vec<u32>,
}

impl StoppingTimes {
    /// The reserved `∞` index, one past the last grid point.
    pub fn infinity_index(grid: DyadicGrid) -> usize {
        grid.len()
    }

    pub fn infinite(grid: DyadicGrid, n_paths: usize) -> Self {
        Self {
            grid,
            idx: alloc::vec![grid.len() as u32; n_paths],
        }
    }

    /// The deterministic time `index` (or `∞` for `None`) on every path.
    pub fn constant(grid: DyadicGrid, n_paths: usize, index: Option<usize>) -> Result<Self> {
        let v = match index {
            Some(i) if i <= grid.last() => i as u32,
            Some(i) => {
                return Err(Error::Structural(alloc::format!(
                    "index {i} is outside a grid of {} points",
                    grid.len()
                )))
            }
            None => grid.len() as u32,
        };
        Ok(Self {
            grid,
            idx: alloc::vec![v; n_paths],
        })
    }

    pub(crate) fn from_raw(grid: DyadicGrid, idx: Vec<u32>) -> Self {
        debug_assert!(idx.iter().all(|&i| i as usize <= grid.len()));
        Self { grid, idx }
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.idx.len()
    }

    /// `Some(index)` if finite, `None` for `∞`.
    pub fn get(&self, p: usize) -> Option<usize> {
        let i = self.idx[p] as usize;
        (i < self.grid.len()).then_some(i)
    }

    pub fn is_infinite(&self, p: usize) -> bool {
        self.get(p).is_none()
    }

    /// Index at which a process stopped at this time is frozen: `min(ρ, 1)`.
    pub fn effective(&self, p: usize) -> usize {
        (self.idx[p] as usize).min(self.grid.last())
    }

    /// Raw index with `∞` encoded as `grid.len()`; order-compatible with time.
    pub fn raw(&self, p: usize) -> usize {
        self.idx[p] as usize
    }

    pub fn time(&self, p: usize) -> Option<f64> {
        self.get(p).map(|i| self.grid.time(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = Option<usize>> + '_ {
        (0..self.idx.len()).map(|p| self.get(p))
    }

    pub fn fraction_infinite(&self) -> f64 {
        let n = self.idx.len().max(1);
        (0..self.idx.len()).filter(|&p| self.is_infinite(p)).count() as f64 / n as f64
    }

    /// Pathwise minimum `ρ ∧ σ`.
    pub fn min(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let idx = self.idx.iter().zip(&other.idx).map(|(&a, &b)| a.min(b)).collect();
        Ok(Self { grid: self.grid, idx })
    }

    /// Pathwise maximum `ρ ∨ σ`.
    pub fn max(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let idx = self.idx.iter().zip(&other.idx).map(|(&a, &b)| a.max(b)).collect();
        Ok(Self { grid: self.grid, idx })
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                expected: self.grid.level(),
                found: other.grid.level(),
            });
        }
        if self.idx.len() != other.idx.len() {
            return Err(Error::LengthMismatch {
                left: self.idx.len(),
                right: other.idx.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_ensemble(&self, ens: &PathEnsemble) -> Result<()> {
        ens.ensure_grid(self.grid)?;
        if self.idx.len() != ens.n_paths() {
            return Err(Error::LengthMismatch {
                left: self.idx.len(),
                right: ens.n_paths(),
            });
        }
        Ok(())
    }
}

/// First grid index at which `pred(prefix)` holds, where `prefix` is the
/// path up to and including the index under test; `∞` if it never holds.
pub fn first_passage<F>(ens: &PathEnsemble, pred: F) -> StoppingTimes
where
    F: Fn(&[f64]) -> bool,
{
    let grid = ens.grid();
    let idx = ens
        .rows()
        .map(|row| {
            (0..row.len())
                .find(|&i| pred(&row[..=i]))
                .map_or(grid.len() as u32, |i| i as u32)
        })
        .collect();
    StoppingTimes::from_raw(grid, idx)
}

/// Like [`first_passage`] but only tests the points of the coarser grid `pi`.
/// The result is indexed on the ensemble's own grid.
pub fn first_passage_on<F>(ens: &PathEnsemble, pi: DyadicGrid, pred: F) -> Result<StoppingTimes>
where
    F: Fn(&[f64]) -> bool,
{
    let grid = ens.grid();
    let stride = grid.stride_to(pi)?;
    let idx = ens
        .rows()
        .map(|row| {
            (0..pi.len())
                .map(|c| c * stride)
                .find(|&i| pred(&row[..=i]))
                .map_or(grid.len() as u32, |i| i as u32)
        })
        .collect();
    Ok(StoppingTimes::from_raw(grid, idx))
}

/// `inf { t : |S_t| >= level }`.
pub fn level_crossing(ens: &PathEnsemble, level: f64) -> StoppingTimes {
    first_passage(ens, |prefix| prefix[prefix.len() - 1].abs() >= level)
}

/// `S^ρ`: each path frozen at its value at `ρ`; unchanged where `ρ = ∞`.
pub fn stop(ens: &PathEnsemble, rho: &StoppingTimes) -> Result<PathEnsemble> {
    rho.check_ensemble(ens)?;
    let len = ens.grid().len();
    let mut values = ens.values().to_vec();
    for (p, row) in values.chunks_mut(len).enumerate() {
        if let Some(k) = rho.get(p) {
            let frozen = row[k];
            for x in &mut row[k + 1..] {
                *x = frozen;
            }
        }
    }
    Ok(ens.derive(values, "stopped"))
}

/// `ρ+ = inf { t ∈ π : t >= ρ }`, indexed on `ρ`'s grid.
pub fn rho_plus(rho: &StoppingTimes, pi: DyadicGrid) -> Result<StoppingTimes> {
    let grid = rho.grid();
    let stride = grid.stride_to(pi)?;
    let idx = (0..rho.n_paths())
        .map(|p| match rho.get(p) {
            Some(i) => (i.div_ceil(stride) * stride) as u32,
            None => grid.len() as u32,
        })
        .collect();
    Ok(StoppingTimes::from_raw(grid, idx))
}
