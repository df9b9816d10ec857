use thiserror::Error;

#[derive(Debug, Error)]
pub enum AtrtError {
    #[error("harmonic index {k} outside [-{k_max}, {k_max}]")]
    HarmonicOutOfRange { k: i32, k_max: i32 },
    #[error("point {0} lies outside the closed unit disc")]
    OutsideDisc(f64),
    #[error("misaligned boundary grid: {0}")]
    MisalignedGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("basis index {0} is not canonical")]
    NonCanonicalIndex(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("linear solve failed for angular mode {0}")]
    SolverFailure(i64),
    #[error("glancing-ray division: {0}")]
    GlancingDivision(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AtrtError>;
