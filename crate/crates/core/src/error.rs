use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("kernel returned a non-finite value at t={t}")]
    NonFinite { t: f64 },
    #[error("mark has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("kernel is not separable: G(t,x)/x1 varies with the mark (spread {spread:e})")]
    NotSeparable { spread: f64 },
    #[error("kernel vanishes at the origin: |H(0)| = {value:e}")]
    ZeroAtOrigin { value: f64 },
    #[error("kernel G and derivative g disagree: residual {residual:e} at t={t}")]
    InconsistentKernel { t: f64, residual: f64 },
    #[error("rate {rate} at t={t} exceeds the bound {bound}")]
    InvalidBound { t: f64, rate: f64, bound: f64 },
    #[error("adaptive quadrature on [{a}, {b}] did not reach tolerance {tol:e} within the depth limit")]
    QuadratureFailure { a: f64, b: f64, tol: f64 },
    #[error("mark distribution is sample-only and cannot be integrated analytically")]
    UnsupportedMarks,
    #[error("operation requires an exponential kernel")]
    KernelNotExponential,
    #[error("integrability check failed: {0}")]
    IntegrabilityFailure(&'static str),
    #[error("event count exceeded the cap of {cap}")]
    ExplosionGuard { cap: usize },
    #[error("Riccati solution exceeded the overflow guard at t={t}")]
    BlowUp { t: f64 },
    #[error("moment generating function diverges")]
    MgfDiverges,
    #[error("exponential moment of the jump sizes diverges under the target measure")]
    ExponentialMomentDiverges,
    #[error("jump second moment vanishes at t={t}; no jump risk to absorb the drift")]
    DegenerateJumps { t: f64 },
    #[error("compensator is not time-homogeneous")]
    NotStationary,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

impl Error {
    /// Stable, machine-readable name of the variant.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NonFinite { .. } => "NonFinite",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotSeparable { .. } => "NotSeparable",
            Error::ZeroAtOrigin { .. } => "ZeroAtOrigin",
            Error::InconsistentKernel { .. } => "InconsistentKernel",
            Error::InvalidBound { .. } => "InvalidBound",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::UnsupportedMarks => "UnsupportedMarks",
            Error::KernelNotExponential => "KernelNotExponential",
            Error::IntegrabilityFailure(_) => "IntegrabilityFailure",
            Error::ExplosionGuard { .. } => "ExplosionGuard",
            Error::BlowUp { .. } => "BlowUp",
            Error::MgfDiverges => "MgfDiverges",
            Error::ExponentialMomentDiverges => "ExponentialMomentDiverges",
            Error::DegenerateJumps { .. } => "DegenerateJumps",
            Error::NotStationary => "NotStationary",
            Error::InvalidParameter(_) => "InvalidParameter",
        }
    }
}
