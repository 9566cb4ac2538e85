use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("argument {re} + {im}i lies on the branch cut (-inf, 0]")]
    BranchCut { re: f64, im: f64 },

    #[error("|z| = {modulus} exceeds the supported range {limit}")]
    OutOfRange { modulus: f64, limit: f64 },

    #[error("zero search for order {order} found {found} zeros, expected {expected}")]
    ZeroCount {
        order: f64,
        found: usize,
        expected: usize,
    },

    #[error("zero set for order {zeros_order} used with mu = {mu}")]
    InconsistentZeros { zeros_order: f64, mu: f64 },

    #[error("no convergence: best estimate {value}, error estimate {error} ({context})")]
    NonConvergence {
        value: f64,
        error: f64,
        context: &'static str,
    },

    #[error("integrand exceeded the declared exponential envelope near u = {at}")]
    Envelope { at: f64 },

    #[error("moment of order {m} is not integrable for mu = {mu}")]
    Integrability { m: u32, mu: f64 },

    #[error("{0} is not available on this branch")]
    Branch(&'static str),
}

impl Error {
    /// True for failures of a numerical method, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Envelope { .. }
                | Error::ZeroCount { .. }
                | Error::Overflow(_)
        )
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
