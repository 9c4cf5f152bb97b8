//! Error type shared by all modules of the crate.
//!
//! Diagnostic payloads are stored as `f64` regardless of the scalar type the
//! computation ran in, so the error enum itself stays non-generic.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A fixed point whose differential is too close to having eigenvalue 1.
    #[error("non-simple fixed point at {location:?}: |det(dphi - I)| = {det_abs:.3e} is below tolerance {tolerance:.1e}")]
    NonSimpleFixedPoint {
        location: Vec<f64>,
        det_abs: f64,
        tolerance: f64,
    },

    /// Affine map with det(A - I) = 0 whose fixed-point congruence is
    /// solvable: the solution set is a continuum of non-simple fixed points,
    /// so no finite enumeration exists.
    #[error("degenerate affine map: det(A - I) = 0 and the fixed-point set is a continuum of non-simple fixed points")]
    DegenerateMap,

    /// Lattice truncation of the theta kernel cannot reach the requested
    /// relative tail bound.
    #[error("theta truncation radius {radius} too small: tail bound {tail_bound:.3e} exceeds {limit:.1e} of the kernel value {value:.3e}")]
    TruncationTooSmall {
        radius: f64,
        tail_bound: f64,
        value: f64,
        limit: f64,
    },

    /// The symbol fails the positivity sample on the unit sphere.
    #[error("symbol is not elliptic: minimum eigenvalue {min_eigenvalue:.3e} in direction {direction:?}")]
    EllipticityFailure {
        min_eigenvalue: f64,
        direction: Vec<f64>,
    },

    /// exp(-q) has not decayed below the declared edge bound on the
    /// frequency box used for the inverse transform.
    #[error("frequency box half-width {half_width} too small: exp(-q) = {edge_value:.3e} at the box edge exceeds {limit:.1e}")]
    FrequencyBoxTooSmall {
        half_width: f64,
        edge_value: f64,
        limit: f64,
    },

    /// Expanding-box quadrature of a boundary kernel failed to stabilize.
    #[error("boundary integrand failed to stabilize: shell increment {increment:.3e} at box half-width {half_width}")]
    NonDecayingBoundary { half_width: f64, increment: f64 },

    /// A quadrature loop hit its expansion cap before meeting its tolerance.
    #[error("{what}: quadrature stalled with increment {increment:.3e}")]
    QuadratureStalled { what: String, increment: f64 },

    /// Point outside the domain of a deformation chart.
    #[error("point {point:?} outside chart domain (half-width {half_width} about {center:?})")]
    OutOfChart {
        point: Vec<f64>,
        center: Vec<f64>,
        half_width: f64,
    },

    /// The rescaled trace ladder grows instead of stabilizing, violating the
    /// uniform-boundedness hypothesis of the limit.
    #[error("ladder values grow unboundedly: |f| increased monotonically from {first:.3e} to {last:.3e}")]
    UnboundedLadder { first: f64, last: f64 },

    /// The direct-quadrature and determinant-formula evaluations of a
    /// boundary trace disagree.
    #[error("cross-check failed: direct quadrature {direct:.12e} vs determinant formula {determinant:.12e} (tolerance {tolerance:.1e})")]
    CrossCheckFailure {
        direct: f64,
        determinant: f64,
        tolerance: f64,
    },

    /// A boundary-trace operation was invoked on a kernel that is not flagged
    /// translation invariant at t = 0.
    #[error("kernel is not flagged translation invariant at t = 0")]
    NotTranslationInvariant,

    /// Malformed ladder specification (non-geometric, too few rungs, ...).
    #[error("invalid ladder: {0}")]
    InvalidLadder(String),

    /// Malformed configuration or operand (dimension mismatch, bad field).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
