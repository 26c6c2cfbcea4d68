use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("size mismatch: expected {expected}x{expected} values, got {rows}x{cols}")]
    SizeMismatch { expected: usize, rows: usize, cols: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),

    #[error("invalid Sobolev index: {0}")]
    InvalidSobolev(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("region outside lattice: {0}")]
    RegionOutsideLattice(String),

    #[error("horizon T={horizon} exceeds the local existence time T0={existence_time}")]
    HorizonBeyondExistence { horizon: f64, existence_time: f64 },

    #[error("Picard iteration diverged on horizon T={horizon} after {iterations} sweeps")]
    PicardDiverged { horizon: f64, iterations: usize },

    #[error("Picard iteration did not converge in {iterations} sweeps (last residual {residual:e})")]
    PicardNotConverged { iterations: usize, residual: f64 },

    #[error("non-finite state detected at t={time}")]
    BlowUp { time: f64 },

    #[error("sweep point delta={delta} failed: {source}")]
    SweepFailed {
        delta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
