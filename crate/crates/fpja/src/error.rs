//! Error types shared across the crate.

use std::fmt;

/// Coarse classification used by the command-line frontend to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Configuration could not be parsed or validated.
    Config,
    /// The requested operating point is outside the physical domain
    /// (unstable, unreachable, out of the analytic regime).
    Physics,
    /// A numerical procedure failed (ill-conditioned inversion, flat
    /// objective, non-physical covariance).
    Numerical,
}

/// Crate-wide error enum.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A configuration document could not be parsed.
    ParseError(String),
    /// A configuration parsed but violates invariants; lists every problem.
    ConfigValidation(Vec<String>),
    /// Mode or pump parameters violate an invariant.
    InvalidParameter(String),
    /// The coupling matrix is too close to singular to invert reliably;
    /// usually means the configuration sits at or beyond an oscillation
    /// threshold.
    NearSingular { rcond: f64 },
    /// The loop determinant vanished, so the closed-form elements are
    /// undefined.
    DegenerateLoop { c_mag: f64 },
    /// The amplification ratio reached the gain pole r >= 1.
    PoleReached { r: f64 },
    /// The conversion magnitudes to mode b differ, so the scalar
    /// parameters s and r are undefined.
    AsymmetricConversion { beta_ab: f64, beta_bc: f64 },
    /// An output covariance violated the per-mode uncertainty product with
    /// vacuum inputs; `variance` is the smaller quadrature variance of the
    /// offending mode.
    NonPhysical { port: usize, variance: f64 },
    /// The factored stability analysis was requested outside its regime
    /// (|beta_ac| = 1/2, |beta_ab| = |beta_bc|).
    OutOfRegime(String),
    /// The polynomial interpolation lost too many digits.
    InterpolationIllConditioned { rcond: f64 },
    /// An iterative numerical routine exhausted its budget.
    NoConvergence(String),
    /// The calibration objective is flat; no minimum can be bracketed.
    NoMinimum,
    /// Circulation was programmed but the measured isolation fell short.
    IsolationNotReached { achieved_db: f64, required_db: f64 },
    /// The requested conversion strength violates the stability bound
    /// |beta_ab|^2 < (kappa_a + kappa_c) / (4 kappa_b).
    StabilityBoundViolated { beta_ab_sq: f64, bound: f64 },
    /// The gain target cannot be reached stably; reports the ceiling.
    TargetUnreachable { max_gx_db: f64, detail: String },
    /// A tuning stage produced an unstable pump set.
    Unstable { margin: f64 },
    /// Failed to read or write a data file.
    Io(String),
}

impl Error {
    /// Classification used by the CLI for exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::ParseError(_) | Error::ConfigValidation(_) | Error::InvalidParameter(_) => {
                ErrorKind::Config
            }
            Error::PoleReached { .. }
            | Error::AsymmetricConversion { .. }
            | Error::OutOfRegime(_)
            | Error::IsolationNotReached { .. }
            | Error::StabilityBoundViolated { .. }
            | Error::TargetUnreachable { .. }
            | Error::Unstable { .. } => ErrorKind::Physics,
            Error::NearSingular { .. }
            | Error::DegenerateLoop { .. }
            | Error::NonPhysical { .. }
            | Error::InterpolationIllConditioned { .. }
            | Error::NoConvergence(_)
            | Error::NoMinimum
            | Error::Io(_) => ErrorKind::Numerical,
        }
    }

    /// Stable machine-readable category name.
    pub fn category(&self) -> &'static str {
        match self {
            Error::ParseError(_) => "ParseError",
            Error::ConfigValidation(_) => "ValidationError",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::NearSingular { .. } => "NearSingular",
            Error::DegenerateLoop { .. } => "DegenerateLoop",
            Error::PoleReached { .. } => "PoleReached",
            Error::AsymmetricConversion { .. } => "AsymmetricConversion",
            Error::NonPhysical { .. } => "NonPhysical",
            Error::OutOfRegime(_) => "OutOfRegime",
            Error::InterpolationIllConditioned { .. } => "InterpolationIllConditioned",
            Error::NoConvergence(_) => "NoConvergence",
            Error::NoMinimum => "NoMinimum",
            Error::IsolationNotReached { .. } => "IsolationNotReached",
            Error::StabilityBoundViolated { .. } => "StabilityBoundViolated",
            Error::TargetUnreachable { .. } => "TargetUnreachable",
            Error::Unstable { .. } => "Unstable",
            Error::Io(_) => "Io",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ParseError(msg) => write!(f, "config parse error: {msg}"),
            Error::ConfigValidation(problems) => {
                write!(f, "config validation failed: {}", problems.join("; "))
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::NearSingular { rcond } => write!(
                f,
                "coupling matrix near singular (rcond = {rcond:.3e}); configuration is at or \
                 beyond an oscillation threshold"
            ),
            Error::DegenerateLoop { c_mag } => {
                write!(
                    f,
                    "loop determinant |C| = {c_mag:.3e} too small for closed forms"
                )
            }
            Error::PoleReached { r } => {
                write!(
                    f,
                    "amplification ratio r = {r:.6} reached the gain pole (r >= 1)"
                )
            }
            Error::AsymmetricConversion { beta_ab, beta_bc } => write!(
                f,
                "|beta_ab| = {beta_ab:.9} and |beta_bc| = {beta_bc:.9} differ; s and r are \
                 undefined"
            ),
            Error::NonPhysical { port, variance } => write!(
                f,
                "output covariance of mode {port} violates the uncertainty product with vacuum \
                 inputs (smaller quadrature variance {variance:.6e}); covariance convention bug"
            ),
            Error::OutOfRegime(msg) => write!(f, "outside the factored stability regime: {msg}"),
            Error::InterpolationIllConditioned { rcond } => write!(
                f,
                "determinant interpolation ill-conditioned (rcond = {rcond:.3e}); retry with \
                 rescaled sample points"
            ),
            Error::NoConvergence(msg) => write!(f, "no convergence: {msg}"),
            Error::NoMinimum => write!(f, "calibration objective is flat; no minimum bracketed"),
            Error::IsolationNotReached {
                achieved_db,
                required_db,
            } => write!(
                f,
                "on-resonance isolation {achieved_db:.2} dB below the {required_db:.2} dB \
                 threshold; conversion magnitudes look miscalibrated"
            ),
            Error::StabilityBoundViolated { beta_ab_sq, bound } => write!(
                f,
                "|beta_ab|^2 = {beta_ab_sq:.6} exceeds the stability bound (kappa_a + kappa_c) / \
                 (4 kappa_b) = {bound:.6}"
            ),
            Error::TargetUnreachable { max_gx_db, detail } => write!(
                f,
                "gain target unreachable ({detail}); maximum achievable stable G_X is \
                 {max_gx_db:.2} dB"
            ),
            Error::Unstable { margin } => {
                write!(f, "configuration is unstable (margin = {margin:.6e} rad/s)")
            }
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
