use alloc::string::String;

/// Failures raised by the solvers and the tracking engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("state is not supersonic: u = {u}, c = {c}")]
    SubsonicState { u: f64, c: f64 },
    #[error("speed {q} outside the Prandtl-Meyer domain [{lo}, {hi})")]
    OutOfRange { q: f64, lo: f64, hi: f64 },
    #[error("rarefaction curve left the supersonic region at parameter {alpha}")]
    LeftSupersonicLost { alpha: f64 },
    #[error("integrator step size underflow at parameter {alpha}")]
    StepFailure { alpha: f64 },
    #[error("shock branch has the wrong direction for parameter {alpha}")]
    EntropyViolation { alpha: f64 },
    #[error("no admissible root: {0}")]
    NoRoot(&'static str),
    #[error("pressure {target} not reachable, admissible range [{lo}, {hi}]")]
    Unreachable { target: f64, lo: f64, hi: f64 },
    #[error("Newton iteration did not converge, last residual {residual:e}")]
    NoConvergence { residual: f64 },
    #[error("pressure gate violated: {gate}")]
    PressureOutOfRange { gate: &'static str },
    #[error("initial total variation {tv} exceeds {limit}")]
    TvTooLarge { tv: f64, limit: f64 },
    #[error("unclassifiable interaction geometry: {0}")]
    UnclassifiableGeometry(String),
    #[error("Glimm functional increased at x = {x}: case {case}, excess {excess:e}")]
    AuditFailure { x: f64, case: u8, excess: f64 },
    #[error("invalid initial profile: {0}")]
    InvalidProfile(String),
    #[error("front budget exhausted: {0}")]
    TooManyFronts(usize),
    #[error("invalid constants: {0}")]
    ConstantsInvalid(String),
}

pub type Result<T> = core::result::Result<T, Error>;
