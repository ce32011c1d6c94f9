use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("division by an interval containing zero")]
    DivisionByZeroInterval,
    #[error("domain error: {0}")]
    DomainError(&'static str),
    #[error("approximate inverse not certified: defect {defect:e} >= 1")]
    NotInvertibleCandidate { defect: f64 },
    #[error("ball inverse not certified: {what} = {value:e} >= 1")]
    BallNotInvertible { what: String, value: f64 },
    #[error("contraction failed: {0}")]
    ContractionFailed(String),
    #[error("Newton diverged at node {node} (eta = {eta}): residual {residual:e} after {iterations} iterations")]
    NewtonDiverged { node: usize, eta: f64, residual: f64, iterations: usize },
    #[error("singular node matrix at node {0}")]
    SingularNodeMatrix(usize),
    #[error("no viable nu among the candidates")]
    NoViableNu,
    #[error("crossing unverified: {0}")]
    CrossingUnverified(String),
    #[error("approximate eigenbasis not certified invertible")]
    XiNotInvertible,
    #[error("stability unverified at {0}")]
    StabilityUnverified(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures that mean "the inequalities did not close" rather
    /// than "something went wrong while running".
    pub fn is_verification_failure(&self) -> bool {
        matches!(
            self,
            Error::NotInvertibleCandidate { .. }
                | Error::BallNotInvertible { .. }
                | Error::ContractionFailed(_)
                | Error::NoViableNu
                | Error::CrossingUnverified(_)
                | Error::XiNotInvertible
                | Error::StabilityUnverified(_)
        )
    }
}
