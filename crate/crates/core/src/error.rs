use thiserror::Error;

use crate::hilbert::SpaceSignature;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the CLI to pick an exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Fock cutoff {0}: at least 3 levels are required")]
    InvalidCutoff(usize),

    #[error("signature mismatch: {left} vs {right}")]
    SignatureMismatch {
        left: SpaceSignature,
        right: SpaceSignature,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "cutoff too small: population {population:e} in the top two Fock levels \
         at t = {time} (cutoff {cutoff})"
    )]
    CutoffTooSmall {
        cutoff: usize,
        population: f64,
        time: f64,
    },

    #[error("step size underflow at t = {time} (h = {step:e})")]
    StepSizeUnderflow { time: f64, step: f64 },

    #[error("trace drift {drift:e} at t = {time} exceeds tolerance")]
    TraceDrift { time: f64, drift: f64 },

    #[error("state at t = {time} lost positivity (min eigenvalue {min_eigenvalue:e})")]
    PositivityLost { time: f64, min_eigenvalue: f64 },

    #[error("emission window not converged: <a^dag a> = {population:e} at t = {time}")]
    WindowNotConverged { time: f64, population: f64 },

    #[error("steady state requires a constant drive")]
    NonConstantDrive,

    #[error("steady state is not unique (second smallest singular value {0:e})")]
    DegenerateSteadyState(f64),

    #[error("steady-state solve failed: {0}")]
    SteadyStateFailed(String),

    #[error("trajectory has no recorded states")]
    MissingStates,

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("no emission: photon-number integral vanishes")]
    NoEmission,

    #[error("no bracketing interval for target efficiency at omega = {omega}")]
    NoBracket { omega: f64 },

    #[error("{0}")]
    Config(#[from] crate::io::config::ConfigErrors),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidCutoff(_)
            | Error::InvalidModel(_)
            | Error::InvalidArgument(_)
            | Error::Config(_) => ErrorClass::Config,
            Error::Io(_) | Error::Serialize(_) => ErrorClass::Io,
            _ => ErrorClass::Numerical,
        }
    }
}
