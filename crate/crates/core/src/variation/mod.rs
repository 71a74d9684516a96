//! Conditional drifts, mean variation and discrete decompositions.

mod decompose;
mod mean;
mod oracle;
mod toeplitz;

pub use decompose::{reconstruction_ulps, doob_decompose, doob_decompose_stopped, rao_decompose, telescope_paste, DoobDecomposition, RaoDecomposition};
pub use mean::{
    bounded_variation_stopping, mean_variation, mean_variation_report, mean_variation_stopped, sign_integrand,
    MeanVariationEntry, MeanVariationReport, Trend,
};
pub use oracle::{
    conditional_drift, drift_table, drift_table_with, native_drift_table, DriftTable, OracleKind,
    GAUSSIAN_LINEAR_MAX_LEVEL,
};
pub use toeplitz::{levinson_solve, Predictors};
