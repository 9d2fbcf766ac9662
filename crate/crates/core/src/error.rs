use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("bad magic: expected \"DMDSNAP1\"")]
    BadMagic,

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },

    #[error("trailing bytes after payload: {0}")]
    TrailingBytes(u64),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("snapshot size overflow: {rows} x {cols}")]
    SizeOverflow { rows: u64, cols: u64 },

    #[error("invalid snapshot matrix: {0}")]
    InvalidSnapshots(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error("insufficient snapshots for stacking: {snapshots} snapshots, stack {stack}")]
    InsufficientSnapshots { snapshots: usize, stack: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("zero matrix has no compact SVD")]
    ZeroMatrix,

    #[error("svd failed to converge")]
    SvdNoConvergence,

    #[error("eigensolver failed to converge")]
    EigenNoConvergence,

    #[error("singular system")]
    SingularSystem,

    #[error("invalid singular values: {0}")]
    InvalidSingularValues(String),

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error("frequency undefined for zero eigenvalue")]
    ZeroEigenvalue,

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid wave config: {0}")]
    InvalidConfig(String),

    #[error("CFL violation or blow-up at step {step}")]
    BlowUp { step: usize },
}
