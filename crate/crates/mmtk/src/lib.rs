//! Momentum-map toolkit for matrix group actions on complex projective space.
//!
//! The library takes a finite set of generator matrices for a reductive matrix
//! group acting on `C^N`, closes them into a Lie algebra, and computes:
//!
//! * momentum map values, restricted momentum maps, and the one-parameter
//!   vector fields they generate on `P(V)` ([`moment`]);
//! * weight polytopes with extreme points, facets, normal cones, and exposing
//!   vectors ([`polytope`]);
//! * eigenvalue gradings of `V` and of the Lie algebra by a one-parameter
//!   direction, attracting/repelling limits, and stratum classification
//!   ([`strata`]);
//! * invertible slice charts for the attracting cell of the top stratum,
//!   including the reducible-ambient variant, with freeness, equivariance,
//!   and quotient-projection batteries ([`chart`]);
//! * the gradient flow of the momentum-map norm square with extreme-point
//!   certificates for its limits ([`flow`]);
//! * seeded verification batteries for all of the structural identities
//!   ([`verify`]).
//!
//! Example representations (binary quadratics under `sl(2,R)`, a rank-one
//! torus on `C^3`, and the quadratics-plus-trivial sum on `C^4`) ship as JSON
//! documents embedded in [`reps`] and as files under `reps/` in the source
//! tree.

pub mod chart;
pub mod flow;
pub mod linalg;
pub mod moment;
pub mod polytope;
pub mod rep;
pub mod reps;
pub mod sample;
pub mod strata;
pub mod tol;
pub mod verify;

pub use chart::{
    blv_chart, build_chart, equivariance_check, verify_freeness, ChartCoords, ChartError,
    LstChart, UnipotentElement,
};
pub use flow::{
    batch_maximizers, extreme_certificate, flow_eta, Certificate, FlowError, FlowParams,
    Trajectory, TrajectorySample,
};
pub use moment::{
    eta, fs_gradient, moment_matrix, moment_torus, moment_value, mu_beta, vector_field,
    ProjectivePoint, TangentVector,
};
pub use polytope::{extreme_points, ExposedFace, Facet, NormalCone, Polytope, PolytopeError};
pub use rep::{load_representation, AlgebraBasis, RepError, RepresentationSpec};
pub use strata::{
    bb_limit, build_grading, classify_point, theta_flip_angle, x_beta_max, BetaGrading,
    Direction, MaxCell, StrataError, StratumRecord,
};
pub use verify::CheckReport;
