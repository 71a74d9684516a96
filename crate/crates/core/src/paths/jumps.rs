use alloc::format;
use alloc::vec;

use super::ensemble::PathEnsemble;
use crate::error::{Error, Result};
use crate::math::complement;

/// Splits `S = J + R` where `J` accumulates exactly the grid increments with
/// `|ΔS| >= threshold` and `R = S - J`. `J + R` reproduces `S` bit-for-bit
/// whenever floating point allows it (see [`complement`]).
pub fn split_large_jumps(ens: &PathEnsemble, threshold: f64) -> Result<(PathEnsemble, PathEnsemble)> {
    if !(threshold > 0.0) {
        return Err(Error::Domain(format!("jump threshold must be > 0, got {threshold}")));
    }
    let len = ens.grid().len();
    let mut jumps = vec![0.0; ens.values().len()];
    let mut residual = vec![0.0; ens.values().len()];
    for (p, row) in ens.rows().enumerate() {
        let j = &mut jumps[p * len..(p + 1) * len];
        let r = &mut residual[p * len..(p + 1) * len];
        for i in 0..len {
            if i > 0 {
                let d = row[i] - row[i - 1];
                j[i] = if d.abs() >= threshold { j[i - 1] + d } else { j[i - 1] };
            }
            r[i] = complement(row[i], j[i]);
        }
    }
    Ok((ens.derive(jumps, "jumps"), ens.derive(residual, "residual")))
}
