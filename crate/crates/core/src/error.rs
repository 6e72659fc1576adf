use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A closed-form quantity was requested outside its domain (e.g. r <= 2M).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tortoise inversion did not converge for s = {0}")]
    NonConvergence(f64),

    #[error("integration failed at t = {at}: {reason}")]
    Integration { at: f64, reason: String },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("certificate failure: {0}")]
    Certificate(String),

    #[error("CFL condition violated: dt/ds = {0} exceeds 1")]
    Cfl(f64),

    #[error("light-cone violation at t = {t}: support reaches |s| = {extent}, bound is {bound}")]
    ConeViolation { t: f64, extent: f64, bound: f64 },

    #[error("insufficient snapshots: {0}")]
    InsufficientSnapshots(String),

    #[error("pilot run at eps = {epsilon} reached t = {t_max} without blowing up")]
    PilotCensored { epsilon: f64, t_max: f64 },

    #[error("insufficient span: {0}")]
    InsufficientSpan(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Certificate(_) | Error::ConeViolation { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
