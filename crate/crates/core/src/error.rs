use thiserror::Error;

use crate::bench::Diagnostic;
use crate::state::Wire;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operator is not unitary")]
    NonUnitary,
    #[error("operator is not Hermitian")]
    NonHermitian,
    #[error("control and target are both the {0} wire")]
    SameWire(Wire),
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("state has zero norm")]
    ZeroVector,
    #[error("all intensity is on blocked path {path}")]
    TotalBlockage { path: u8 },
    #[error("s-waveplate input must be horizontal (0°) or vertical (90°), got {0}°")]
    UnsupportedPolarization(f64),
    #[error("calibration probe has support on both input paths")]
    ProbeOnBothPaths,
    #[error("blocker at line {line} cannot be compiled into a unitary circuit")]
    BlockerInCircuit { line: usize },
    #[error("total port intensity {0:e} is below the readout threshold")]
    NoIntensity(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("rewrite rule `{0}` does not preserve the circuit unitary")]
    UnsoundRule(String),
    #[error("no configuration reproduces the targets; best residuals {residuals:?}")]
    Infeasible { residuals: [f64; 4], best: Box<crate::imperfection::ImperfectionConfig> },
    #[error("{0}")]
    Parse(#[from] Diagnostic),
}
