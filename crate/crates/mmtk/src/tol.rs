//! Central tolerance and cap constants.
//!
//! Every numerical gate in the crate reads its threshold from here so that
//! the accuracy contract is visible in one place. The values fall into three
//! bands:
//!
//! * `1e-12` for identities that hold to machine precision on well-formed
//!   input (Hermiticity of tagged generators, unit norms, exact agreement of
//!   two constructions of the same object);
//! * `1e-10` .. `1e-8` for quantities that pass through one eigensolve or
//!   Gram-Schmidt sweep and accumulate a few hundred rounding errors;
//! * `1e-8` .. `1e-6` for quantities differentiated numerically or driven to
//!   a limit by an iterative method, where the truncation error of the scheme
//!   dominates. The finite-difference step `1e-6` balances the `O(h^2)`
//!   truncation error of a central difference against the `O(eps/h)`
//!   cancellation error, leaving roughly `1e-10` of headroom under the
//!   `1e-8` gradient gate.

/// Max entrywise deviation from (anti-)Hermitian symmetry tolerated in a
/// tagged generator matrix.
pub const HERMITICITY: f64 = 1e-12;

/// Max entrywise norm of a commutator between torus generators.
pub const TORUS_COMMUTE: f64 = 1e-10;

/// Max deviation of the stored algebra basis Gram matrix from the identity.
pub const GRAM_IDENTITY: f64 = 1e-10;

/// Max residual of a bracket after projection back onto the algebra span.
pub const BRACKET_CLOSURE: f64 = 1e-9;

/// Max Jacobi identity residual over basis triples.
pub const JACOBI: f64 = 1e-9;

/// Gap separating distinct eigenvalue clusters (weights, grading levels).
pub const CLUSTER_GAP: f64 = 1e-8;

/// Unit-norm defect tolerated in a projective point representative.
pub const UNIT_NORM: f64 = 1e-12;

/// Two projective points are equal when `|<v,w>|` is within this of 1.
pub const POINT_EQUALITY: f64 = 1e-9;

/// Max tolerated inner product between a tangent vector and its base point.
pub const TANGENT_ORTH: f64 = 1e-10;

/// Central finite-difference step for all derivative oracles.
pub const FD_STEP: f64 = 1e-6;

/// Agreement bound between the finite-difference gradient and the
/// one-parameter vector field.
pub const GRADIENT_MATCH: f64 = 1e-8;

/// Velocity threshold below which a point counts as stationary for
/// monotonicity checks.
pub const MONOTONY_VELOCITY: f64 = 1e-6;

/// Feasibility tolerance of the floating-point convex-combination solver and
/// facet slack of the hull.
pub const GEOMETRY: f64 = 1e-9;

/// Strict-exposure margin required of an exposing vector.
pub const EXPOSURE_MARGIN: f64 = 1e-9;

/// Singular-value threshold when counting the rank of a vertex's incident
/// facet normals (unit vectors, so the scale is absolute).
pub const FACET_RANK: f64 = 1e-7;

/// Eigencomponents with norm at or below this are dropped before reading off
/// a one-parameter limit.
pub const COMPONENT_DROP: f64 = 1e-10;

/// A point is fixed by a one-parameter subgroup when its velocity is below
/// this.
pub const FIXED_POINT: f64 = 1e-8;

/// Max residual allowed when checking that a subspace is carried into itself
/// by the algebra action.
pub const INVARIANCE: f64 = 1e-9;

/// Smallest singular value of the orbit map below which a chart is refused.
pub const ORBIT_RANK: f64 = 1e-10;

/// Top-level coefficient below which a point is outside the affine cell.
pub const TOP_COEFF: f64 = 1e-10;

/// Round-trip error bound for chart forward/inverse composition.
pub const ROUND_TRIP: f64 = 1e-9;

/// Error bound for the twisted equivariance identity of the chart.
pub const EQUIVARIANCE: f64 = 1e-7;

/// Minimum projective separation a nonidentity unipotent translate must
/// produce (freeness battery).
pub const FREENESS_SEPARATION: f64 = 1e-8;

/// Invariance bound for the quotient projection under unipotent translates.
pub const QUOTIENT_INVARIANCE: f64 = 1e-8;

/// Default gradient-norm stopping tolerance of the flow integrator.
pub const FLOW_STOP: f64 = 1e-9;

/// Slack allowed in the discrete monotonicity of the flow objective.
pub const ETA_SLACK: f64 = 1e-12;

/// Distance bound for matching a flow limit against a polytope vertex.
pub const CERTIFICATE_VERTEX: f64 = 1e-6;

/// Residual bound for stabilizer directions at a certified flow limit.
pub const CERTIFICATE_KILL: f64 = 1e-6;

/// Residual of the unipotent conjugation decay check, evaluated at `t = 40`.
pub const UNIPOTENT_DECAY: f64 = 1e-8;

/// Largest principal angle tolerated between the flipped negative subspace
/// and the positive subspace of a grading.
pub const PRINCIPAL_ANGLE: f64 = 1e-8;

/// Membership tolerance for the top-stratum / momentum-fiber equality
/// battery.
pub const MAX_CELL_MEMBERSHIP: f64 = 1e-7;

/// Kill bound for repelling directions acting on the top stratum.
pub const RPLUS_KILL: f64 = 1e-8;

/// Lower bound on the smallest singular value of the orbit map on the top
/// stratum for an exposing direction.
pub const ORBIT_SIGMA_MIN: f64 = 1e-8;

/// Dimension cap on the ambient space `C^N`.
pub const DIM_V_CAP: usize = 64;

/// Dimension cap of the bracket closure; exceeding it signals non-reductive
/// or mis-entered generators.
pub const CLOSURE_CAP: usize = 64;

/// Cap on the torus rank accepted by the polytope code.
pub const RANK_CAP: usize = 8;

/// Cap on the number of input points accepted by the polytope code.
pub const POINT_COUNT_CAP: usize = 10_000;
