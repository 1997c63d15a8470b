//! Embedded example representation documents.
//!
//! The same documents ship as files under `reps/` in the source tree; they
//! are embedded here so that library consumers and tests can load them
//! without touching the filesystem.

use crate::rep::{load_representation, RepresentationSpec};

/// Binary quadratics under `sl(2,R)`: the three-dimensional representation
/// on `Sym^2 C^2` in the orthonormalized monomial basis `(x^2, sqrt2 xy,
/// y^2)`. Generators: the coweight `h = diag(2,0,-2)` (Hermitian), the
/// symmetric combination `e+f` (Hermitian), and the rotation `e-f`
/// (anti-Hermitian).
pub const SL2_SYM2: &str = include_str!("../../../reps/sl2_sym2.json");

/// Rank-one torus acting on `C^3` with weights `(2, 1, 0)`.
pub const TORUS_P2: &str = include_str!("../../../reps/torus_p2.json");

/// The quadratics representation extended by a trivial summand on
/// `C^4 = Sym^2 C^2 + C`.
pub const SL2_SYM2_PLUS_TRIVIAL: &str = include_str!("../../../reps/sl2_sym2_plus_trivial.json");

/// Load the embedded quadratics example.
pub fn sl2_sym2() -> RepresentationSpec {
    load_representation(SL2_SYM2).expect("embedded document is valid")
}

/// Load the embedded torus example.
pub fn torus_p2() -> RepresentationSpec {
    load_representation(TORUS_P2).expect("embedded document is valid")
}

/// Load the embedded quadratics-plus-trivial example.
pub fn sl2_sym2_plus_trivial() -> RepresentationSpec {
    load_representation(SL2_SYM2_PLUS_TRIVIAL).expect("embedded document is valid")
}

/// All embedded examples, paired with their names.
pub fn all() -> Vec<(&'static str, RepresentationSpec)> {
    vec![
        ("sl2_sym2", sl2_sym2()),
        ("torus_p2", torus_p2()),
        ("sl2_sym2_plus_trivial", sl2_sym2_plus_trivial()),
    ]
}
