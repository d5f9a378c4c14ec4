use thiserror::Error;

/// Errors raised by mesh construction, assembly and time integration.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("point {point:?} lies outside the computational domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("integral of {0} diverges on the requested interval")]
    NonIntegrable(String),

    #[error("operation needs separable kernels: {0}")]
    NotSeparable(String),

    #[error("problem too large for {what}: {size} > {limit}")]
    SizeGuard { what: &'static str, size: usize, limit: usize },

    #[error("unknown test case `{0}`")]
    UnknownCase(String),

    #[error("no closed form available: {0}")]
    NoClosedForm(String),

    #[error("singular or indefinite matrix: {0}")]
    Singular(String),

    #[error(
        "Newton iteration did not converge at t = {time} after {iterations} iterations \
         (last scaled residual {residual:e})"
    )]
    NonConvergence {
        time: f64,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("malformed operator dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
