use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("grid level {level} exceeds the cap of {cap}")]
    LevelCap { level: u32, cap: u32 },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("grid mismatch: expected level {expected}, found {found}")]
    GridMismatch { expected: u32, found: u32 },

    #[error("level {coarse} is not a coarsening of level {fine}")]
    NotSubGrid { fine: u32, coarse: u32 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("oracle {oracle} is not available for model {model}: {reason}")]
    IncompatibleOracle {
        oracle: &'static str,
        model: &'static str,
        reason: &'static str,
    },

    #[error("structural violation: {0}")]
    Structural(String),

    #[error("internal invariant failed: {0}")]
    Invariant(String),

    #[error("need at least {need} levels for a verdict, got {got}")]
    InsufficientLevels { got: usize, need: usize },

    #[error("floating-point reconstruction is not representable at {0}")]
    NotRepresentable(f64),
}
