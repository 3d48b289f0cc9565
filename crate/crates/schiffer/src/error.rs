use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("zero search for order {nu} exhausted radius cap {cap} after {found} zeros")]
    ZeroSearch { nu: f64, cap: f64, found: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("profile not admissible: {0}")]
    Admissibility(String),
    #[error("boundary flag violated: {0}")]
    Flag(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("newton did not converge at s={s}: residual {residual:e} after {iters} iterations")]
    NoConvergence { s: f64, residual: f64, iters: usize },
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("no sign change of sigma_{ell} on (0, {lambda0})")]
    NoSignChange { ell: u32, lambda0: f64 },
    #[error("singular linear system: {0}")]
    Singular(String),
}
