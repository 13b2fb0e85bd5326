use thiserror::Error;

use crate::acg::InnerCertificate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The ACG stopping inequality did not hold within the iteration cap.
    /// Usually a sign that the supplied curvature constants are wrong.
    #[error("ACG did not certify a solution within {iterations} iterations")]
    AcgMaxIterations {
        iterations: usize,
        best: Box<InnerCertificate>,
    },

    #[error("eigendecomposition did not converge")]
    Eigen,

    #[error("instance calibration failed: {0}")]
    Calibration(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
