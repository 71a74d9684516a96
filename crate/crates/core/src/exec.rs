/// Strategy for running independent per-row work over a row-major buffer.
///
/// Implementations must call `f(row_index, row)` exactly once for every row.
/// Row kernels never read other rows, so any schedule gives identical output.
pub trait Executor: Sync {
    fn for_each_row(
        &self,
        data: &mut [f64],
        row_len: usize,
        f: &(dyn Fn(usize, &mut [f64]) + Sync),
    );
}

/// Runs rows in order on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn for_each_row(
        &self,
        data: &mut [f64],
        row_len: usize,
        f: &(dyn Fn(usize, &mut [f64]) + Sync),
    ) {
        if row_len == 0 {
            return;
        }
        for (i, row) in data.chunks_mut(row_len).enumerate() {
            f(i, row);
        }
    }
}
