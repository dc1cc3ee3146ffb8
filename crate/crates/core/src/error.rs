use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the inputs does not hold (bad sizes, out-of-range parameters, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("{what} broke down at iteration {iteration}: {detail}")]
    Breakdown {
        what: &'static str,
        iteration: usize,
        detail: String,
    },

    /// A monotone sequence or a sub/super-solution pair lost its ordering.
    #[error("ordering violated: {0}")]
    Ordering(String),

    #[error("no bracket for {what}: value {f_lo:.6e} at {lo:.6e}, {f_hi:.6e} at {hi:.6e}")]
    BracketNotFound {
        what: &'static str,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("time integration unstable at t = {t:.4}: sup u = {sup:.6e} exceeds bound {bound:.6e}")]
    Unstable { t: f64, sup: f64, bound: f64 },

    /// Spreading-speed measurement could not be made from the level-set track.
    #[error("no sustained front: {0}")]
    NoFront(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
