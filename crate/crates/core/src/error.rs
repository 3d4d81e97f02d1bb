//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CoreError>;

/// Errors produced by construction and verification routines.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A parameter was outside its admissible range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A map failed its monotonicity certificate: the minimum derivative found on
    /// the certification grid was at or below the admissible floor.
    #[error("degenerate map: min derivative {min_deriv:.3e} at x = {at:.17} (floor {floor:.1e})")]
    Degenerate {
        min_deriv: f64,
        at: f64,
        floor: f64,
    },

    /// Bracketed root finding failed to converge.
    #[error("root finding failed on [{a:.17}, {b:.17}]: {reason}")]
    RootFind { a: f64, b: f64, reason: String },

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("quadrature did not reach tolerance {tol:.1e} on [{a}, {b}]: error estimate {err_est:.3e}")]
    Quadrature {
        a: f64,
        b: f64,
        tol: f64,
        err_est: f64,
    },

    /// The continued-fraction coefficient list was too short to pin the limit
    /// down to the requested gap.
    #[error("continued fraction: {have} coefficients leave gap {gap:.3e} > {need:.1e}")]
    InsufficientCoefficients { have: usize, gap: f64, need: f64 },

    /// A translate of a marked interval by a multiple of the rotation angle
    /// came too close to a same-level marked interval.
    #[error(
        "translate by {k}·α of level-{level} interval '{word}' meets interval '{other}' \
         (clearance {clearance:.3e} < margin {margin:.1e})"
    )]
    Recurrence {
        level: usize,
        word: String,
        other: String,
        k: i64,
        clearance: f64,
        margin: f64,
    },

    /// Two same-level marked intervals overlap, or a child is wider than a
    /// quarter of its parent.
    #[error("level-{level} interval separation violated: {detail}")]
    SiblingOverlap { level: usize, detail: String },

    /// Interval-scale escalation hit its hard cap without satisfying the
    /// disjointness and low-recurrence constraints.
    #[error("scale escalation exceeded cap {cap} at level {level}: {reason}")]
    EscalationCap {
        level: usize,
        cap: u32,
        reason: String,
    },

    /// No admissible perturbation window pair was found within the horizon.
    #[error("window search failed within horizon {horizon}: {reason}")]
    WindowSearch { horizon: usize, reason: String },

    /// The envelope staircase produced a negative value (its construction
    /// from one-sided partial sums makes this impossible for positive
    /// cocycle tables, so this flags corrupted input).
    #[error("envelope value e_{index} = {value:.3e} is negative")]
    NegativeEnvelope { index: i64, value: f64 },

    /// The linearizing conjugacy could not reach the requested derivative
    /// closeness within the interval-halving budget.
    #[error(
        "linearizer: requested |Dh − 1| < {requested:.3e} unreachable \
         (best {best:.3e} after {halvings} halvings, floor {floor:.1e})"
    )]
    DeltaUnreachable {
        requested: f64,
        best: f64,
        halvings: u32,
        floor: f64,
    },

    /// No centered subinterval with affinely-mapped iterates could be found.
    #[error("empty affine core: {0}")]
    EmptyCore(String),

    /// A perturbation step exceeded one of its closeness budgets.
    #[error("closeness budget exceeded: {quantity} = {measured:.3e} > {budget:.3e}")]
    ClosenessFailure {
        quantity: &'static str,
        measured: f64,
        budget: f64,
    },

    /// A structural precondition of a construction step failed.
    #[error("construction failed: {0}")]
    Construction(String),

    /// Deserialized map description failed validation.
    #[error("invalid map description: {0}")]
    InvalidSpec(String),
}

impl CoreError {
    /// Convenience constructor for parameter errors.
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        CoreError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
