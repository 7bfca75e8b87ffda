use thiserror::Error;

/// Broad class of a failure, used by drivers to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Inputs violate a documented precondition.
    Precondition,
    /// A numerical procedure (shooting, eigensolve, flow) failed to deliver.
    Numerical,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid too small: need at least {needed} nodes per axis, got {got}")]
    GridTooSmall { needed: usize, got: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("point ({q}, {p}) lies outside the domain")]
    OutsideDomain { q: f64, p: f64 },
    #[error("path needs at least {needed} points, got {got}")]
    PathTooShort { needed: usize, got: usize },
    #[error("polygon needs at least 3 vertices, got {0}")]
    DegeneratePolygon(usize),
    #[error("invalid cover parameters: {0}")]
    InvalidCover(String),
    #[error("empty rectangle")]
    EmptyRectangle,
    #[error("cover has no overlaps of arity {0}")]
    NoOverlaps(usize),
    #[error("cover overlap graph is disconnected")]
    DisconnectedCover,
    #[error("invalid hamiltonian: {0}")]
    InvalidHamiltonian(String),
    #[error("invalid flow parameters: {0}")]
    InvalidFlow(String),
    #[error("flow needs {needed} steps, limit is {limit}")]
    StepLimit { needed: usize, limit: usize },
    #[error("energy drift {drift:e} exceeds tolerance {tol:e}")]
    EnergyDrift { drift: f64, tol: f64 },
    #[error("shooting failed: {0}")]
    Shooting(String),
    #[error("motion at energy {0} is unbounded")]
    Unbounded(f64),
    #[error("no classically allowed region at energy {0}")]
    NoAllowedRegion(f64),
    #[error("eigensolver: {0}")]
    Eigen(String),
    #[error("loop is not closed (gap {0:e})")]
    OpenLoop(f64),
    #[error("grid under-resolves the lift phase along {axis}: spacing x max|df|/hbar = {value:.4} > {limit}")]
    Nyquist {
        axis: &'static str,
        value: f64,
        limit: f64,
    },
    #[error("unsupported potential degree {0} (maximum is 4)")]
    UnsupportedDegree(usize),
    #[error("polynomial parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::StepLimit { .. }
            | Error::EnergyDrift { .. }
            | Error::Shooting(_)
            | Error::Eigen(_) => ErrorClass::Numerical,
            _ => ErrorClass::Precondition,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
