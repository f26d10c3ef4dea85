//! Error taxonomy shared by every module.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Coefficient data violating the conjugate-pairing rule that keeps
    /// evaluations real on the diagonal.
    #[error("non-Hermitian coefficient set: c[{alpha}|{beta}] = {found}, but c[{beta}|{alpha}] conjugates to {expected}")]
    NonHermitian {
        alpha: String,
        beta: String,
        found: String,
        expected: String,
    },

    /// An evaluation that must be real carried too large an imaginary part.
    #[error("imaginary residue {residue:.3e} exceeds realness tolerance {tolerance:.3e} in {context}")]
    ImaginaryResidue {
        residue: f64,
        tolerance: f64,
        context: &'static str,
    },

    /// Polarization evaluated on its branch cut (antipodal pair).
    #[error("polarization domain violation: 1 + z·w̄ = {value} lies on the log branch cut")]
    PolarizationDomain { value: String },

    /// A mixed complex Hessian drifted away from Hermitian symmetry.
    #[error("mixed Hessian asymmetry {asymmetry:.3e} exceeds 1e-10")]
    HessianAsymmetry { asymmetry: f64 },

    /// Non-finite intermediate or result.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// No tube radius passed the convexity sweep even at the coarsest scale.
    #[error("degenerate potential: no admissible tube radius found (smallest tried {smallest:.3e})")]
    DegeneratePotential { smallest: f64 },

    /// A maximizer landed on the search-ball boundary.
    #[error("neighborhood violation at query {query}: maximizer distance {distance:.6e} vs radius {radius:.6e}")]
    NeighborhoodViolation {
        query: String,
        distance: f64,
        radius: f64,
    },

    /// Newton and the brute-force fallback both failed to locate a maximizer.
    #[error("solver failed at query {query}: {detail}")]
    SolverFailure { query: String, detail: String },

    /// Two well-separated near-equal maxima: the objective is not concave.
    #[error("ambiguous maximum at query {query}: candidates {first} and {second} differ by {value_gap:.3e} in value but {separation:.3e} in position")]
    AmbiguousMaximum {
        query: String,
        first: String,
        second: String,
        value_gap: f64,
        separation: f64,
    },

    /// The map Jacobian lost orientation.
    #[error("diffeomorphism failure at {query}: jacobian determinant {determinant:.6e} is not positive")]
    DiffeomorphismFailure { query: String, determinant: f64 },

    /// Monge–Ampère density must stay positive for admissible potentials.
    #[error("admissibility violation at {location}: Monge–Ampère density {density:.6e} is not positive")]
    AdmissibilityViolation { location: String, density: f64 },

    /// A point (or a finite-difference stencil around it) left the grid.
    #[error("point outside domain in {context}")]
    OutOfDomain { context: String },

    /// Mismatched grid shapes or dimensions.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    /// Invalid configuration or scenario description.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
