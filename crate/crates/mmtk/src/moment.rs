//! Momentum map evaluation on `P(V)`.
//!
//! For a unit representative `v` the momentum value against a Hermitian
//! direction `A` is the Rayleigh quotient `v^* A v`; the full restricted
//! momentum map collects these against the orthonormal Hermitian basis. The
//! one-parameter vector field of a direction `beta` is the projection of
//! `rho(beta) v` onto `v^perp`, and it coincides with the Riemannian
//! gradient of `mu^beta` in the Fubini-Study normalization used here (the
//! squared length of a tangent representative `t` is `2 Re <t,t>`; the
//! finite-difference suite pins this convention operationally).

use crate::linalg::{
    herm_eigen, orthonormal_complement, CMat, CVec, HermEigen, RVec, C64,
};
use crate::rep::RepresentationSpec;
use crate::tol;

/// A point of `P(V)` held as a unit representative vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectivePoint {
    v: CVec,
}

impl ProjectivePoint {
    /// Normalize a representative. Panics on a vector with norm below
    /// `1e-12`; callers that ingest untrusted coordinates must reject zero
    /// vectors beforehand.
    pub fn new(v: CVec) -> Self {
        let n = v.norm();
        assert!(n > 1e-12, "zero vector does not represent a projective point");
        ProjectivePoint { v: v.scale(1.0 / n) }
    }

    /// Wrap an already-unit representative (defect checked).
    pub fn from_unit(v: CVec) -> Self {
        debug_assert!((v.norm() - 1.0).abs() < tol::UNIT_NORM * 10.0);
        ProjectivePoint { v }
    }

    pub fn vector(&self) -> &CVec {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// Projective equality: `|<v,w>|` within `tol` of 1.
    pub fn equals(&self, other: &ProjectivePoint, tol: f64) -> bool {
        (1.0 - self.v.dotc(&other.v).norm()) <= tol
    }

    /// Chordal distance: the norm of the difference after aligning the
    /// phase, `min over phases of |v - e^{i phi} w|`. Zero iff the points
    /// agree up to phase, and exact near zero, unlike the sine formula,
    /// whose `1 - |<v,w>|^2` cancellation floors out near `sqrt(eps)`.
    pub fn distance(&self, other: &ProjectivePoint) -> f64 {
        let ip = other.v.dotc(&self.v);
        let phase = if ip.norm() > 1e-300 { ip / ip.norm() } else { C64::new(1.0, 0.0) };
        (self.v.clone() * phase.conj() - &other.v).norm()
    }
}

/// A tangent vector of `P(V)` at a base point, represented in the horizontal
/// space `v^perp`.
#[derive(Debug, Clone)]
pub struct TangentVector {
    pub base: ProjectivePoint,
    pub t: CVec,
}

impl TangentVector {
    /// Build from any representative, projecting out the base direction.
    pub fn new(base: ProjectivePoint, t: CVec) -> Self {
        let overlap = base.v.dotc(&t);
        let t = t - &base.v * overlap;
        debug_assert!(base.v.dotc(&t).norm() < tol::TANGENT_ORTH);
        TangentVector { base, t }
    }

    pub fn norm(&self) -> f64 {
        self.t.norm()
    }
}

/// Momentum coordinates of `x` against the orthonormal Hermitian basis.
pub fn moment_value(spec: &RepresentationSpec, x: &ProjectivePoint) -> RVec {
    let v = x.vector();
    RVec::from_fn(spec.p_dim(), |k, _| {
        v.dotc(&(spec.p_element(k) * v)).re
    })
}

/// The momentum value of `x` as a Hermitian matrix in the algebra (the
/// orthonormal-basis expansion of [`moment_value`]).
pub fn moment_matrix(spec: &RepresentationSpec, x: &ProjectivePoint) -> CMat {
    spec.rho_p(&moment_value(spec, x))
}

/// Torus momentum coordinates of `x`: Rayleigh quotients against the input
/// `a_basis` matrices in file order. Weights and polytope coordinates use
/// this same scale.
pub fn moment_torus(spec: &RepresentationSpec, x: &ProjectivePoint) -> RVec {
    let v = x.vector();
    RVec::from_fn(spec.a_rank(), |j, _| v.dotc(&(&spec.a_input[j] * v)).re)
}

/// Momentum value of `x` against the direction `beta` (orthonormal Hermitian
/// coordinates): `v^* rho(beta) v`.
pub fn mu_beta(spec: &RepresentationSpec, x: &ProjectivePoint, beta_p: &RVec) -> f64 {
    moment_value(spec, x).dot(beta_p)
}

/// Norm square of the restricted momentum map, the objective of the gradient
/// flow.
pub fn eta(spec: &RepresentationSpec, x: &ProjectivePoint) -> f64 {
    let m = moment_value(spec, x);
    m.dot(&m)
}

/// Velocity at `x` of the one-parameter flow of `beta`: the projection of
/// `rho(beta) v` onto `v^perp`.
pub fn vector_field(spec: &RepresentationSpec, x: &ProjectivePoint, beta_p: &RVec) -> TangentVector {
    let b = spec.rho_p(beta_p);
    vector_field_of_matrix(&b, x)
}

/// Velocity of the one-parameter flow of an explicit Hermitian matrix.
pub fn vector_field_of_matrix(b: &CMat, x: &ProjectivePoint) -> TangentVector {
    let v = x.vector();
    let w = b * v;
    TangentVector::new(x.clone(), w)
}

/// Riemannian gradient of `mu^beta` at `x`, computed by central finite
/// differences over a real orthonormal frame of the horizontal space. This
/// is deliberately an independent route from [`vector_field`]: their
/// agreement within `1e-8` is the defining gradient identity and the
/// module's central self-test.
pub fn fs_gradient(spec: &RepresentationSpec, x: &ProjectivePoint, beta_p: &RVec) -> TangentVector {
    let b = spec.rho_p(beta_p);
    fs_gradient_of_matrix(&b, x)
}

/// Finite-difference gradient against an explicit Hermitian matrix.
pub fn fs_gradient_of_matrix(b: &CMat, x: &ProjectivePoint) -> TangentVector {
    let v = x.vector();
    let h = tol::FD_STEP;
    let frame = orthonormal_complement(v);
    let mut grad = CVec::zeros(v.len());
    let mu_of = |w: &CVec| -> f64 {
        let n2 = w.dotc(w).re;
        w.dotc(&(b * w)).re / n2
    };
    for f in &frame {
        for dir in [f.clone(), f * C64::new(0.0, 1.0)] {
            let plus = v + dir.scale(h);
            let minus = v - dir.scale(h);
            let d = (mu_of(&plus) - mu_of(&minus)) / (2.0 * h);
            // Metric normalization: |u|^2_FS = 2 Re <u,u> on the horizontal
            // space, so the gradient halves the Euclidean Riesz vector.
            grad += dir.scale(0.5 * d);
        }
    }
    TangentVector::new(x.clone(), grad)
}

/// The one-parameter orbit `t -> [exp(t rho(beta)) v]`, evaluated through a
/// single eigendecomposition of the flow generator.
pub struct OneParamFlow {
    eig: HermEigen,
}

impl OneParamFlow {
    pub fn new(spec: &RepresentationSpec, beta_p: &RVec) -> Self {
        OneParamFlow {
            eig: herm_eigen(&spec.rho_p(beta_p)),
        }
    }

    pub fn of_matrix(b: &CMat) -> Self {
        OneParamFlow { eig: herm_eigen(b) }
    }

    /// Evaluate the orbit of `x` at time `t`.
    pub fn at(&self, x: &ProjectivePoint, t: f64) -> ProjectivePoint {
        let coords = self.eig.vectors.adjoint() * x.vector();
        let n = coords.len();
        let scaled = CVec::from_fn(n, |i, _| coords[i] * (t * self.eig.values[i]).exp());
        ProjectivePoint::new(&self.eig.vectors * scaled)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rep::load_representation;
    use crate::reps;
    use crate::sample::Sampler;
    use nalgebra::DVector;

    const P1_DOC: &str = r#"{
        "dim": 2,
        "generators": [
            {"name": "h", "tag": "p", "matrix": [[[1,0],[0,0]],[[0,0],[0,0]]]}
        ],
        "a_basis": ["h"],
        "p_basis": ["h"]
    }"#;

    fn cx(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn point(coords: &[C64]) -> ProjectivePoint {
        ProjectivePoint::new(DVector::from_vec(coords.to_vec()))
    }

    #[test]
    fn rayleigh_quotient_on_the_balanced_line() {
        // Weights (1, 0): the balanced point averages them to 1/2.
        let spec = load_representation(P1_DOC).unwrap();
        let x = point(&[cx(1.0, 0.0), cx(1.0, 0.0)]);
        let mu = moment_torus(&spec, &x);
        assert!((mu[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn weight_line_takes_its_eigenvalue() {
        let spec = load_representation(P1_DOC).unwrap();
        let x = point(&[cx(1.0, 0.0), cx(0.0, 0.0)]);
        assert!((moment_torus(&spec, &x)[0] - 1.0).abs() < 1e-14);
        let beta = RVec::from_vec(vec![1.0]);
        assert!(vector_field(&spec, &x, &beta).norm() < 1e-14);
    }

    #[test]
    fn velocity_on_the_balanced_line_matches_the_closed_form() {
        // d/dt [(e^t, 1)]/norm at t=0, orthogonal part: (1,-1)/(2 sqrt 2)
        // against the unit generator diag(1,0).
        let spec = load_representation(P1_DOC).unwrap();
        let x = point(&[cx(1.0, 0.0), cx(1.0, 0.0)]);
        let beta = RVec::from_vec(vec![1.0]);
        let t = vector_field(&spec, &x, &beta);
        let s = 1.0 / (2.0 * 2.0_f64.sqrt());
        assert!((t.t[0] - cx(s, 0.0)).norm() < 1e-14);
        assert!((t.t[1] - cx(-s, 0.0)).norm() < 1e-14);
        assert!((t.norm() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_velocity_on_the_balanced_line() {
        let spec = load_representation(P1_DOC).unwrap();
        let x = point(&[cx(1.0, 0.0), cx(1.0, 0.0)]);
        let beta = RVec::from_vec(vec![1.0]);
        let g = fs_gradient(&spec, &x, &beta);
        let t = vector_field(&spec, &x, &beta);
        assert!((g.t - t.t).norm() < tol::GRADIENT_MATCH);
    }

    #[test]
    fn zero_direction_has_zero_field_everywhere() {
        let spec = reps::sl2_sym2();
        let mut s = Sampler::new(1);
        let beta = RVec::zeros(spec.p_dim());
        for _ in 0..10 {
            let x = ProjectivePoint::new(s.unit_complex_vector(3));
            assert!(vector_field(&spec, &x, &beta).norm() < 1e-14);
        }
    }

    #[test]
    fn symmetric_mixture_of_quadratic_weights_cancels() {
        let spec = reps::sl2_sym2();
        let x = point(&[cx(1.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0)]);
        // mu_a = (2 + 0 - 2)/3 = 0, and the h-component of mu_p vanishes.
        assert!(moment_torus(&spec, &x)[0].abs() < 1e-14);
        let beta_unit_h = {
            let mut b = RVec::zeros(spec.p_dim());
            b[0] = 1.0;
            b
        };
        assert!(mu_beta(&spec, &x, &beta_unit_h).abs() < 1e-14);
    }

    #[test]
    fn torus_momentum_frozen_values_on_quadratics() {
        let spec = reps::sl2_sym2();
        let top = point(&[cx(1.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0)]);
        assert!((moment_torus(&spec, &top)[0] - 2.0).abs() < 1e-14);
        let half = point(&[cx(1.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0)]);
        assert!((moment_torus(&spec, &half)[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn moment_value_on_the_top_weight_line() {
        let spec = reps::sl2_sym2();
        let top = point(&[cx(1.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0)]);
        let m = moment_value(&spec, &top);
        // h-hat has top entry 2/sqrt(8); the symmetric generator has zero
        // diagonal.
        assert!((m[0] - 2.0 / 8.0_f64.sqrt()).abs() < 1e-14);
        assert!(m[1].abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_velocity_on_seeded_samples() {
        let mut s = Sampler::new(11);
        for (_, spec) in reps::all() {
            for _ in 0..50 {
                let x = ProjectivePoint::new(s.unit_complex_vector(spec.dim_v));
                let beta = s.unit_real_vector(spec.p_dim());
                let g = fs_gradient(&spec, &x, &beta);
                let t = vector_field(&spec, &x, &beta);
                let err = (g.t - t.t).norm();
                assert!(err < tol::GRADIENT_MATCH, "{}: gradient defect {err}", spec.name);
            }
        }
    }

    #[test]
    fn momentum_is_phase_invariant() {
        let spec = reps::sl2_sym2();
        let mut s = Sampler::new(5);
        let v = s.unit_complex_vector(3);
        let w = &v * cx(0.6, 0.8);
        let a = moment_value(&spec, &ProjectivePoint::new(v));
        let b = moment_value(&spec, &ProjectivePoint::new(w));
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn one_parameter_orbit_matches_dense_exponential() {
        let spec = reps::sl2_sym2();
        let mut s = Sampler::new(9);
        let beta = s.unit_real_vector(spec.p_dim());
        let flow = OneParamFlow::new(&spec, &beta);
        let x = ProjectivePoint::new(s.unit_complex_vector(3));
        for t in [-1.5, -0.3, 0.0, 0.7, 2.0] {
            let via_eig = flow.at(&x, t);
            let dense = crate::linalg::expm(&spec.rho_p(&beta).scale(t)) * x.vector();
            let direct = ProjectivePoint::new(dense);
            assert!(via_eig.equals(&direct, 1e-11));
        }
    }

    #[test]
    fn momentum_increases_along_its_own_flow() {
        let spec = reps::sl2_sym2();
        let mut s = Sampler::new(13);
        for _ in 0..20 {
            let x = ProjectivePoint::new(s.unit_complex_vector(3));
            let beta = s.unit_real_vector(spec.p_dim());
            if vector_field(&spec, &x, &beta).norm() <= tol::MONOTONY_VELOCITY {
                continue;
            }
            let flow = OneParamFlow::new(&spec, &beta);
            let mut prev = mu_beta(&spec, &flow.at(&x, -1.0), &beta);
            for k in 1..=20 {
                let t = -1.0 + 0.1 * k as f64;
                let cur = mu_beta(&spec, &flow.at(&x, t), &beta);
                assert!(cur > prev - 1e-12, "monotonicity violated at t={t}");
                prev = cur;
            }
        }
    }

    #[test]
    fn tangent_vectors_are_horizontal() {
        let spec = reps::sl2_sym2();
        let mut s = Sampler::new(17);
        for _ in 0..20 {
            let x = ProjectivePoint::new(s.unit_complex_vector(3));
            let beta = s.unit_real_vector(spec.p_dim());
            let t = vector_field(&spec, &x, &beta);
            assert!(x.vector().dotc(&t.t).norm() < tol::TANGENT_ORTH);
        }
    }

    #[test]
    fn point_equality_and_distance_are_phase_blind() {
        let a = point(&[cx(1.0, 0.0), cx(2.0, -1.0), cx(0.0, 3.0)]);
        let b = ProjectivePoint::new(a.vector() * cx(0.0, 1.0));
        assert!(a.equals(&b, 1e-12));
        assert!(a.distance(&b) < 1e-7);
        let c = point(&[cx(0.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0)]);
        assert!(!a.equals(&c, tol::POINT_EQUALITY));
    }
}
