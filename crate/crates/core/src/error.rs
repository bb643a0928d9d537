use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {0} outside the domain (must be > 0)")]
    Domain(f64),
    #[error("order {0} not supported (0..=8)")]
    UnsupportedOrder(u32),
    #[error("kernel evaluated at zero distance")]
    SingularDistance,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite matrix entry at node pair ({row}, {col})")]
    Assembly { row: usize, col: usize },
    #[error("requested {requested} items but only {available} exist")]
    Range { requested: usize, available: usize },
    #[error("potential vanishes identically; U and v are undefined")]
    EmptyPotential,
    #[error("threshold is ambiguous: singular value {sigma:e} within the refinement band of {tol:e}; refine the grid")]
    AmbiguousThreshold { sigma: f64, tol: f64 },
    #[error("resonance cannot be normalized (<v psi, v psi> = {0:e})")]
    DegenerateResonance(f64),
    #[error("M(lambda) numerically singular at lambda = {lambda:e} (condition {cond:e})")]
    NearSingular { lambda: f64, cond: f64 },
    #[error("no sign change of the defect on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
    #[error("time {t} beyond the box oracle horizon {t_box}")]
    StaleOracle { t: f64, t_box: f64 },
    #[error("design matrix condition {0:e} too large; widen the time range")]
    CollinearBasis(f64),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("shooting failed: {0}")]
    Shooting(String),
    #[error("unknown identifier: {0}")]
    Unknown(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
