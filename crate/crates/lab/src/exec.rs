use bdlab_core::Executor;
use rayon::prelude::*;

/// Rows spread over the current rayon pool. Each row is still computed by a
/// single kernel call, so results match [`bdlab_core::Serial`] bit for bit.
#[derive(Debug, Clone, Copy, Default)]
pub struct Parallel;

impl Executor for Parallel {
    fn for_each_row(&self, data: &mut [f64], row_len: usize, f: &(dyn Fn(usize, &mut [f64]) + Sync)) {
        if row_len == 0 {
            return;
        }
        data.par_chunks_mut(row_len).enumerate().for_each(|(i, row)| f(i, row));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bdlab_core::paths::{make_grid, simulate_with, SynthesisPreference};
    use bdlab_core::{ProcessModel, Serial};

    #[test]
    fn matches_serial() {
        let grid = make_grid(8).unwrap();
        let m = ProcessModel::fbm(0.7);
        let a = simulate_with(&Serial, &m, grid, 64, 5, SynthesisPreference::Auto).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let b = pool.install(|| simulate_with(&Parallel, &m, grid, 64, 5, SynthesisPreference::Auto).unwrap());
        assert_eq!(a.values(), b.values());
    }
}
