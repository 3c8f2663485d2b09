use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("gamma = {0} is outside the admissible interval (6/5, 2)")]
    InvalidGamma(f64),
    #[error("invalid gas law parameter: {0}")]
    InvalidParameter(String),
    #[error("polytropic index nu = {0} >= 5 has no finite radius")]
    NoFiniteRadius(f64),
    #[error("no zero of the Lane-Emden function below xi = {0}")]
    ZeroNotFound(f64),
    #[error("radius {r} outside [0, {radius}]")]
    OutOfDomain { r: f64, radius: f64 },
    #[error("constraint vector is zero")]
    ConstraintDegenerate,
    #[error("mass matrix is not positive definite on the admissible subspace")]
    MassNotPD,
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("source violates the compatibility condition (integral {0:e})")]
    IncompatibleSource(f64),
    #[error("lambda = {lambda} lies within {distance:e} of the computed spectrum")]
    NearSpectrum { lambda: f64, distance: f64 },
    #[error("initial velocity is incompatible with the mode (mismatch {0:e})")]
    IncompatibleInitialData(f64),
    #[error("eigenvalue {0} is not negative")]
    NotUnstable(f64),
    #[error("surface model could not be fitted: {0}")]
    EndpointModelError(String),
    #[error("operator not representable on this grid: {0}")]
    NonConforming(String),
    #[error("grid too coarse: {0}")]
    InvalidGrid(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
