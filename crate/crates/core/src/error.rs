use crate::C64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid {field} = {value}: {reason}")]
    Domain {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("response denominator vanishes at omega = {omega}")]
    SingularInput { omega: f64 },

    #[error("operation requires the {expected} family")]
    WrongFamily { expected: &'static str },

    #[error(
        "quadrature did not converge: estimate {estimate}, achieved error {achieved:e}, requested {requested:e}"
    )]
    ConvergenceFailure {
        estimate: C64,
        achieved: f64,
        requested: f64,
    },

    #[error("{what} is UV divergent without an explicit omega cutoff")]
    UvDivergent { what: &'static str },

    #[error("unsupported: {0}")]
    Unsupported(&'static str),

    #[error("degenerate denominator ({pair}) in closed form")]
    NumericalDegeneracy { pair: &'static str },

    #[error("time step {dt} exceeds the stability limit {limit}")]
    Stability { dt: f64, limit: f64 },
}

impl Error {
    pub(crate) fn domain(field: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            field,
            value,
            reason,
        }
    }
}
