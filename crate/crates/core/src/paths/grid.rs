use crate::error::{Error, Result};

/// Largest level accepted by [`make_grid`].
pub const DEFAULT_LEVEL_CAP: u32 = 20;

/// The dyadic partition `D_n = {0, 1/2^n, ..., 1}` of the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct DyadicGrid {
    level: u32,
}

pub fn make_grid(level: u32) -> Result<DyadicGrid> {
    DyadicGrid::with_cap(level, DEFAULT_LEVEL_CAP)
}

impl DyadicGrid {
    pub fn new(level: u32) -> Result<Self> {
        make_grid(level)
    }

    pub fn with_cap(level: u32, cap: u32) -> Result<Self> {
        if level > cap {
            return Err(Error::LevelCap { level, cap });
        }
        Ok(Self { level })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Number of intervals, `2^n`.
    pub fn steps(&self) -> usize {
        1usize << self.level
    }

    /// Number of grid points, `2^n + 1`.
    pub fn len(&self) -> usize {
        self.steps() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn last(&self) -> usize {
        self.steps()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.steps() as f64
    }

    /// `i / 2^n`, exact in binary floating point.
    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.steps() as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.time(i))
    }

    /// Index of `t` if it is a grid point.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = t * self.steps() as f64;
        let i = x as usize;
        if x >= 0.0 && i as f64 == x && i <= self.steps() {
            Some(i)
        } else {
            None
        }
    }

    /// Number of fine steps per step of `coarse`; errors unless `coarse ⊆ self`.
    pub fn stride_to(&self, coarse: DyadicGrid) -> Result<usize> {
        if coarse.level > self.level {
            return Err(Error::NotSubGrid {
                fine: self.level,
                coarse: coarse.level,
            });
        }
        Ok(1usize << (self.level - coarse.level))
    }

    pub fn refines(&self, coarse: DyadicGrid) -> bool {
        coarse.level <= self.level
    }
}
