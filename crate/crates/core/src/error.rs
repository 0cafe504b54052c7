//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by shift combinatorics, potential evaluation and the
/// operator/zeta machinery.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// No power of the matrix within the Wielandt bound is entrywise positive.
    #[error("matrix is not aperiodic{}", zero_line_message(.zero_row, .zero_column))]
    NotAperiodic {
        /// First all-zero row (1-based), if any.
        zero_row: Option<usize>,
        /// First all-zero column (1-based), if any.
        zero_column: Option<usize>,
    },

    /// An enumeration would exceed the configured cap.
    #[error("enumeration of {required} items exceeds cap {cap}")]
    DepthTooLarge { required: u128, cap: usize },

    /// A prefix/tail pair does not describe an admissible sequence.
    #[error("inadmissible transition {from}->{to} at position {position}")]
    InadmissibleJunction {
        from: usize,
        to: usize,
        position: usize,
    },

    /// A function has positive variation at a depth where the profile vanishes.
    #[error("function lies outside B: var_{k} = {var:.6e} > 0 but theta_{} = 0", k + 1)]
    NotInSpace { k: usize, var: f64 },

    /// Variation bounds are not available beyond the empirical horizon.
    #[error("no analytic variation bound available beyond depth {horizon}")]
    NoAnalyticBound { horizon: usize },

    /// The variation profile cannot be certified against the theta sequence.
    #[error("profile certification failed at depth {k}: var bound {var:.6e} vs theta_k^k = {theta_pow:.6e}")]
    ProfileViolation { k: usize, var: f64, theta_pow: f64 },

    /// A lemma hypothesis does not hold for the supplied parameters.
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    /// The counting radius must exceed the entropy scale.
    #[error("R = {r} must exceed e^h_top = {entropy_scale}")]
    RTooSmall { r: f64, entropy_scale: f64 },

    /// The dense eigensolver did not converge.
    #[error("eigensolve failed to converge for a {dim}x{dim} matrix")]
    EigensolveFailure { dim: usize },

    /// Malformed input (dimension mismatches, bad parameters, parse errors).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn zero_line_message(row: &Option<usize>, col: &Option<usize>) -> String {
    match (row, col) {
        (Some(r), _) => format!(" (row {r} is all zero)"),
        (None, Some(c)) => format!(" (column {c} is all zero)"),
        (None, None) => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
