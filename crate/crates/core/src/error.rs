use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Variants are grouped by how a caller should react: precondition
/// violations (`Domain`, `InvalidPoint`, `InvalidMatrix`) mean the request
/// itself was malformed, while the remaining variants are numerical guard
/// trips where the inputs were legal but the computation cannot be trusted.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("point must lie in the upper half-plane (got y = {0})")]
    InvalidPoint(f64),

    #[error("matrix ({a} {b}; {c} {d}) does not have determinant 1")]
    InvalidMatrix { a: i64, b: i64, c: i64, d: i64 },

    #[error("precondition violated: {0}")]
    Domain(String),

    #[error("pole: {0}")]
    Pole(String),

    #[error("series term magnitude {magnitude:e} exceeds guard {guard:e}; point is too close to a pole orbit")]
    TermOverflow { magnitude: f64, guard: f64 },

    #[error("aliasing detected: out-of-window spectral mass {mass:e} exceeds {threshold:e}")]
    Aliasing { mass: f64, threshold: f64 },

    #[error("two-radius solve is ill-conditioned at n = {n} (separation {separation:e})")]
    IllConditioned { n: i64, separation: f64 },

    #[error("integrand magnitude {magnitude:e} exceeds guard; integrand is not integrable on the domain")]
    NonIntegrable { magnitude: f64 },

    #[error("requested {0} nested derivative levels; refusing beyond the double-precision budget")]
    PrecisionBudget(usize),
}

impl Error {
    /// True for guard trips (pole proximity, ill-conditioning, aliasing)
    /// as opposed to malformed requests.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::Pole(_)
                | Error::TermOverflow { .. }
                | Error::Aliasing { .. }
                | Error::IllConditioned { .. }
                | Error::NonIntegrable { .. }
                | Error::PrecisionBudget(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
