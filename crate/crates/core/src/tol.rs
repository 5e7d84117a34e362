//! Default numerical tolerances.
//!
//! Every threshold used by the library is named here; operations that accept
//! an explicit tolerance default to these values.

/// Unitarity check at construction: `max |U†U - I|`.
pub const UNITARITY: f64 = 1e-9;

/// Eigendecomposition acceptance: `max |U v - lambda v|` per eigenpair.
pub const EIG_RECONSTRUCTION: f64 = 1e-10;

/// Circular phase matching when anchoring the alcove form of an SU(n) element.
pub const ALCOVE_MATCH: f64 = 1e-8;

/// Determinant-one check for special-unitary inputs.
pub const SU_DET: f64 = 1e-8;

/// Refusal radius around polytope facets for Lax evaluation.
pub const FACET_MARGIN: f64 = 1e-8;

/// Two diagonal entries closer than this make a W-factor singular.
pub const SINGULAR_SEPARATION: f64 = 1e-12;

/// Largest imaginary part tolerated in a W-factor bracket.
pub const BRACKET_IMAG: f64 = 1e-10;

/// Minimal circular eigenphase gap for a matrix to count as regular.
pub const REGULAR_GAP: f64 = 1e-8;

/// Maximal deviation allowed between the base points of paired tangents.
pub const BASE_POINT_MATCH: f64 = 1e-12;

/// Anti-Hermiticity / tracelessness defect allowed in tangent data.
pub const TANGENT_DEFECT: f64 = 1e-9;

/// Alcove point construction: component non-negativity and sum-to-pi slack.
pub const ALCOVE_POINT: f64 = 1e-9;

/// Central-difference step for Poisson brackets.
pub const BRACKET_STEP: f64 = 1e-4;

/// Central-difference step for the gradients driving RK4 flows.  Smaller than
/// [`BRACKET_STEP`] so the O(step^2) gradient bias stays below the 1e-8
/// energy-conservation budget over unit-time integrations.
pub const FLOW_GRAD_STEP: f64 = 1e-5;
