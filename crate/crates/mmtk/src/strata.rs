//! Gradings by a Hermitian algebra direction and the induced limit
//! decomposition of projective space.
//!
//! A direction `beta` grades both the module (eigenspaces of `rho(beta)`)
//! and the algebra (eigenspaces of `ad rho(beta)`, which is symmetric for
//! the real trace form precisely because `rho(beta)` is Hermitian). Flowing
//! `exp(t beta)` sends a point to the eigenspace of its highest occupied
//! level as `t -> +infinity`; classification of points into strata reads off
//! that level.

use crate::linalg::{cluster_desc, herm_eigen, max_principal_angle, sym_eigen, CMat, CVec, RMat, RVec};
use crate::moment::{vector_field_of_matrix, ProjectivePoint};
use crate::rep::RepresentationSpec;
use crate::tol;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum StrataError {
    /// The subspace handed to [`x_beta_max`] is not stable under the
    /// represented algebra.
    #[error("subspace is not invariant under the action; residual {residual:.3e}")]
    NotInvariant { residual: f64 },
}

impl StrataError {
    pub fn code(&self) -> &'static str {
        match self {
            StrataError::NotInvariant { .. } => "not_invariant",
        }
    }
}

/// One `rho(beta)` eigenlevel: clustered eigenvalue and an orthonormal
/// basis of its eigenspace.
#[derive(Debug, Clone)]
pub struct VLevel {
    pub value: f64,
    pub basis: CMat,
}

/// One `ad`-eigenlevel of the algebra, as coordinate columns against the
/// orthonormal algebra basis.
#[derive(Debug, Clone)]
pub struct GLevel {
    pub value: f64,
    pub coords: RMat,
}

/// Eigenlevel data of a direction `beta`: module levels descending, algebra
/// levels descending, and the aggregated negative/zero/positive algebra
/// subspaces.
#[derive(Debug, Clone)]
pub struct BetaGrading {
    /// Direction in orthonormal Hermitian coordinates.
    pub beta: RVec,
    pub rho_beta: CMat,
    pub v_levels: Vec<VLevel>,
    pub g_levels: Vec<GLevel>,
    pub r_minus: RMat,
    pub g_zero: RMat,
    pub r_plus: RMat,
}

impl BetaGrading {
    /// Top module eigenvalue.
    pub fn top_value(&self) -> f64 {
        self.v_levels[0].value
    }

    pub fn algebra_dim(&self) -> usize {
        self.g_zero.nrows()
    }
}

/// Limit direction of the one-parameter flow `exp(t beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `t -> +infinity`: the highest occupied level wins.
    Forward,
    /// `t -> -infinity`: the lowest occupied level wins.
    Backward,
}

/// Stratum data of a single point.
#[derive(Debug, Clone)]
pub struct StratumRecord {
    pub point: ProjectivePoint,
    /// The point is fixed by the flow of `beta`.
    pub fixed: bool,
    /// Momentum value of `beta` at the forward limit.
    pub level_value: f64,
    /// The forward limit sits in the top eigenlevel of the ambient space.
    pub in_beta_minus_max: bool,
    pub forward_limit: ProjectivePoint,
    pub backward_limit: ProjectivePoint,
}

/// Grade the module and the algebra by `beta` (orthonormal Hermitian
/// coordinates). `beta = 0` degenerates gracefully: one module level and
/// everything central.
pub fn build_grading(spec: &RepresentationSpec, beta_p: &RVec) -> BetaGrading {
    let rho_beta = spec.rho_p(beta_p);
    let eig = herm_eigen(&rho_beta);
    let clusters = cluster_desc(&eig.values, tol::CLUSTER_GAP);
    let v_levels: Vec<VLevel> = clusters
        .iter()
        .map(|(value, members)| VLevel {
            value: *value,
            basis: CMat::from_fn(rho_beta.nrows(), members.len(), |r, c| {
                eig.vectors[(r, members[c])]
            }),
        })
        .collect();

    let n = spec.basis.dim();
    let ad = spec.basis.ad_matrix(&spec.p_to_full(beta_p));
    let adeig = sym_eigen(&ad);
    let gclusters = cluster_desc(&adeig.values, tol::CLUSTER_GAP);
    let g_levels: Vec<GLevel> = gclusters
        .iter()
        .map(|(value, members)| GLevel {
            value: *value,
            coords: RMat::from_fn(n, members.len(), |r, c| adeig.vectors[(r, members[c])]),
        })
        .collect();

    let collect = |pred: &dyn Fn(f64) -> bool| {
        let cols: Vec<&GLevel> = g_levels.iter().filter(|l| pred(l.value)).collect();
        let total: usize = cols.iter().map(|l| l.coords.ncols()).sum();
        let mut m = RMat::zeros(n, total);
        let mut at = 0;
        for l in cols {
            m.view_mut((0, at), (n, l.coords.ncols()))
                .copy_from(&l.coords);
            at += l.coords.ncols();
        }
        m
    };
    let r_plus = collect(&|v| v > tol::CLUSTER_GAP);
    let g_zero = collect(&|v| v.abs() <= tol::CLUSTER_GAP);
    let r_minus = collect(&|v| v < -tol::CLUSTER_GAP);

    debug_assert_eq!(r_plus.ncols() + g_zero.ncols() + r_minus.ncols(), n);
    BetaGrading {
        beta: beta_p.clone(),
        rho_beta,
        v_levels,
        g_levels,
        r_minus,
        g_zero,
        r_plus,
    }
}

fn occupied_levels(grading: &BetaGrading, x: &ProjectivePoint, drop: f64) -> Vec<(usize, CVec)> {
    let v = x.vector();
    grading
        .v_levels
        .iter()
        .enumerate()
        .filter_map(|(i, level)| {
            let comp = &level.basis * (level.basis.adjoint() * v);
            if comp.norm() > drop {
                Some((i, comp))
            } else {
                None
            }
        })
        .collect()
}

fn bb_limit_indexed(
    grading: &BetaGrading,
    x: &ProjectivePoint,
    direction: Direction,
    drop: f64,
) -> (usize, ProjectivePoint) {
    let occ = occupied_levels(grading, x, drop);
    assert!(!occ.is_empty(), "point has no eigencomponent above the drop tolerance");
    let (idx, comp) = match direction {
        Direction::Forward => occ.first().unwrap(),
        Direction::Backward => occ.last().unwrap(),
    };
    (*idx, ProjectivePoint::new(comp.clone()))
}

/// Limit of `exp(t beta) x` as `t -> +infinity` (forward) or `-infinity`
/// (backward): the normalized projection onto the extreme occupied level.
/// Components with norm at or below `1e-10` do not count as occupied.
pub fn bb_limit(grading: &BetaGrading, x: &ProjectivePoint, direction: Direction) -> ProjectivePoint {
    bb_limit_with_drop(grading, x, direction, tol::COMPONENT_DROP)
}

/// [`bb_limit`] with an explicit component-drop tolerance.
pub fn bb_limit_with_drop(
    grading: &BetaGrading,
    x: &ProjectivePoint,
    direction: Direction,
    drop: f64,
) -> ProjectivePoint {
    bb_limit_indexed(grading, x, direction, drop).1
}

/// Stratum classification of a point under the grading's flow.
pub fn classify_point(
    spec: &RepresentationSpec,
    grading: &BetaGrading,
    x: &ProjectivePoint,
) -> StratumRecord {
    let fixed = vector_field_of_matrix(&grading.rho_beta, x).norm() < tol::FIXED_POINT;
    let (fwd_idx, fwd) = bb_limit_indexed(grading, x, Direction::Forward, tol::COMPONENT_DROP);
    let (_, bwd) = bb_limit_indexed(grading, x, Direction::Backward, tol::COMPONENT_DROP);
    let (forward_limit, backward_limit) = if fixed {
        (x.clone(), x.clone())
    } else {
        (fwd, bwd)
    };
    let level_value = crate::moment::mu_beta(spec, &forward_limit, &grading.beta);
    StratumRecord {
        point: x.clone(),
        fixed,
        level_value,
        in_beta_minus_max: fwd_idx == 0,
        forward_limit,
        backward_limit,
    }
}

/// The maximal-momentum cell of `P(W)`: top eigenspace and clustered
/// eigenvalue of `rho(beta)` restricted to an invariant subspace.
#[derive(Debug, Clone)]
pub struct MaxCell {
    /// Orthonormal ambient columns spanning the cell's linear hull.
    pub basis: CMat,
    pub level: f64,
}

fn orthonormalize_cols(w: &CMat) -> CMat {
    let mut cols: Vec<CVec> = Vec::new();
    for j in 0..w.ncols() {
        let mut v: CVec = w.column(j).into_owned();
        for _ in 0..2 {
            for u in &cols {
                let c = u.dotc(&v);
                v -= u * c;
            }
        }
        let n = v.norm();
        if n > 1e-10 {
            cols.push(v.scale(1.0 / n));
        }
    }
    let mut q = CMat::zeros(w.nrows(), cols.len());
    for (j, c) in cols.iter().enumerate() {
        q.set_column(j, c);
    }
    q
}

/// Top-eigenlevel cell of an invariant subspace `W` (columns spanning it;
/// they are orthonormalized here). Fails with [`StrataError::NotInvariant`]
/// when some represented generator maps `W` outside itself beyond `1e-9`.
pub fn x_beta_max(
    spec: &RepresentationSpec,
    grading: &BetaGrading,
    w: &CMat,
) -> Result<MaxCell, StrataError> {
    assert!(w.ncols() > 0, "subspace must have positive dimension");
    let q = orthonormalize_cols(w);
    let proj_out = |m: &CMat| m - &q * (q.adjoint() * m);
    let mut residual = 0.0_f64;
    for e in &spec.basis.elements {
        let image = e * &q;
        residual = residual.max(proj_out(&image).norm());
    }
    if residual > tol::INVARIANCE {
        return Err(StrataError::NotInvariant { residual });
    }
    let m = q.adjoint() * (&grading.rho_beta * &q);
    let eig = herm_eigen(&m);
    let clusters = cluster_desc(&eig.values, tol::CLUSTER_GAP);
    let (level, members) = &clusters[0];
    let sub = CMat::from_fn(q.ncols(), members.len(), |r, c| eig.vectors[(r, members[c])]);
    Ok(MaxCell {
        basis: &q * sub,
        level: *level,
    })
}

/// Defect of the claim that the antilinear flip exchanges the negative and
/// positive algebra subspaces, measured as a principal angle.
pub fn theta_flip_angle(spec: &RepresentationSpec, grading: &BetaGrading) -> f64 {
    let n = grading.algebra_dim();
    let flipped = RMat::from_fn(n, grading.r_minus.ncols(), |r, c| {
        let col: RVec = grading.r_minus.column(c).into_owned();
        spec.basis.theta_coords(&col)[r]
    });
    max_principal_angle(&flipped, &grading.r_plus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm;
    use crate::moment::mu_beta;
    use crate::reps;
    use crate::sample::Sampler;
    use nalgebra::DVector;
    use num_complex::Complex;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    fn point(coords: &[f64]) -> ProjectivePoint {
        ProjectivePoint::new(DVector::from_iterator(coords.len(), coords.iter().map(|&x| c(x))))
    }

    fn h_grading(spec: &RepresentationSpec) -> BetaGrading {
        let rho_h = spec.a_input[0].clone();
        build_grading(spec, &spec.p_coords_of(&rho_h))
    }

    #[test]
    fn grading_of_h_splits_the_algebra_into_three_lines() {
        let spec = reps::sl2_sym2();
        let g = h_grading(&spec);
        let values: Vec<f64> = g.g_levels.iter().map(|l| l.value).collect();
        assert_eq!(values.len(), 3);
        assert!((values[0] - 2.0).abs() < 1e-9);
        assert!(values[1].abs() < 1e-9);
        assert!((values[2] + 2.0).abs() < 1e-9);
        assert_eq!(g.r_plus.ncols(), 1);
        assert_eq!(g.g_zero.ncols(), 1);
        assert_eq!(g.r_minus.ncols(), 1);
        // The raising line is (x + y)/sqrt2 in the Hermitian/skew basis, the
        // lowering line (x - y)/sqrt2, the centralizer h itself.
        let e_dir = g.r_plus.column(0);
        assert!((e_dir[1].abs() - 0.5_f64.sqrt()).abs() < 1e-9);
        assert!((e_dir[2].abs() - 0.5_f64.sqrt()).abs() < 1e-9);
        assert!(e_dir[0].abs() < 1e-9);
        assert!(theta_flip_angle(&spec, &g) < tol::PRINCIPAL_ANGLE);
    }

    #[test]
    fn module_levels_of_h_are_the_weight_lines() {
        let spec = reps::sl2_sym2();
        let g = h_grading(&spec);
        let values: Vec<f64> = g.v_levels.iter().map(|l| l.value).collect();
        assert_eq!(values.len(), 3);
        assert!((values[0] - 2.0).abs() < 1e-9);
        assert!(values[1].abs() < 1e-9);
        assert!((values[2] + 2.0).abs() < 1e-9);
        for l in &g.v_levels {
            assert_eq!(l.basis.ncols(), 1);
        }
    }

    #[test]
    fn zero_direction_centralizes_everything() {
        let spec = reps::sl2_sym2();
        let g = build_grading(&spec, &RVec::zeros(spec.p_dim()));
        assert_eq!(g.g_zero.ncols(), 3);
        assert_eq!(g.r_plus.ncols(), 0);
        assert_eq!(g.r_minus.ncols(), 0);
        assert_eq!(g.v_levels.len(), 1);
        assert_eq!(g.v_levels[0].basis.ncols(), 3);
    }

    #[test]
    fn limits_on_the_standard_torus_weights() {
        let spec = reps::torus_p2();
        let g = h_grading(&spec);
        let balanced = point(&[1.0, 1.0, 1.0]);
        let fwd = bb_limit(&g, &balanced, Direction::Forward);
        assert!(fwd.equals(&point(&[1.0, 0.0, 0.0]), 1e-12));
        let bwd = bb_limit(&g, &balanced, Direction::Backward);
        assert!(bwd.equals(&point(&[0.0, 0.0, 1.0]), 1e-12));
        let partial = point(&[0.0, 1.0, 1.0]);
        let fwd = bb_limit(&g, &partial, Direction::Forward);
        assert!(fwd.equals(&point(&[0.0, 1.0, 0.0]), 1e-12));
    }

    #[test]
    fn classification_on_quadratics() {
        let spec = reps::sl2_sym2();
        let g = h_grading(&spec);
        let rec = classify_point(&spec, &g, &point(&[1.0, 1.0, 1.0]));
        assert!(!rec.fixed);
        assert!(rec.forward_limit.equals(&point(&[1.0, 0.0, 0.0]), 1e-12));
        assert!((rec.level_value - 2.0).abs() < 1e-9);
        assert!(rec.in_beta_minus_max);

        let mid = classify_point(&spec, &g, &point(&[0.0, 1.0, 0.0]));
        assert!(mid.fixed);
        assert!(mid.level_value.abs() < 1e-9);
        assert!(!mid.in_beta_minus_max);
        assert!(mid.forward_limit.equals(&mid.point, 1e-14));
        assert!(mid.backward_limit.equals(&mid.point, 1e-14));

        let bottom = classify_point(&spec, &g, &point(&[0.0, 0.0, 1.0]));
        assert!(bottom.fixed);
        assert!((bottom.level_value + 2.0).abs() < 1e-9);
    }

    #[test]
    fn max_cell_of_the_full_space_is_the_top_weight_line() {
        let spec = reps::sl2_sym2();
        let g = h_grading(&spec);
        let cell = x_beta_max(&spec, &g, &CMat::identity(3, 3)).unwrap();
        assert_eq!(cell.basis.ncols(), 1);
        assert!((cell.level - 2.0).abs() < 1e-9);
        assert!((cell.basis[(0, 0)].norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn max_cell_of_zero_direction_is_everything() {
        let spec = reps::sl2_sym2();
        let g = build_grading(&spec, &RVec::zeros(spec.p_dim()));
        let cell = x_beta_max(&spec, &g, &CMat::identity(3, 3)).unwrap();
        assert_eq!(cell.basis.ncols(), 3);
        assert!(cell.level.abs() < 1e-12);
    }

    #[test]
    fn max_cell_of_the_trivial_summand_sits_at_level_zero() {
        let spec = reps::sl2_sym2_plus_trivial();
        let rho_h = spec.a_input[0].clone();
        let g = build_grading(&spec, &spec.p_coords_of(&rho_h));
        let mut w = CMat::zeros(4, 1);
        w[(3, 0)] = c(1.0);
        let cell = x_beta_max(&spec, &g, &w).unwrap();
        assert_eq!(cell.basis.ncols(), 1);
        assert!(cell.level.abs() < 1e-12);
    }

    #[test]
    fn non_invariant_subspace_is_rejected() {
        let spec = reps::sl2_sym2();
        let g = h_grading(&spec);
        let mut w = CMat::zeros(3, 1);
        w[(0, 0)] = c(1.0);
        // The raising generator moves e1 to e2/2 after basis normalization.
        match x_beta_max(&spec, &g, &w) {
            Err(StrataError::NotInvariant { residual }) => assert!(residual > 0.4),
            other => panic!("expected NotInvariant, got {other:?}"),
        }
    }

    #[test]
    fn grading_dimensions_and_multiplicativity_on_random_directions() {
        let mut s = Sampler::new(41);
        for (_, spec) in reps::all() {
            let n = spec.basis.dim();
            for _ in 0..20 {
                let beta = s.unit_real_vector(spec.p_dim());
                let g = build_grading(&spec, &beta);
                let total = g.r_minus.ncols() + g.g_zero.ncols() + g.r_plus.ncols();
                assert_eq!(total, n);
                let vdims: usize = g.v_levels.iter().map(|l| l.basis.ncols()).sum();
                assert_eq!(vdims, spec.dim_v);
                for la in &g.g_levels {
                    for lb in &g.g_levels {
                        let target = la.value + lb.value;
                        for i in 0..la.coords.ncols() {
                            for j in 0..lb.coords.ncols() {
                                let u: RVec = la.coords.column(i).into_owned();
                                let v: RVec = lb.coords.column(j).into_owned();
                                let w = spec.basis.bracket_coords(&u, &v);
                                let mut resid = w.clone();
                                for lc in &g.g_levels {
                                    if (lc.value - target).abs() <= 10.0 * tol::CLUSTER_GAP {
                                        resid -= &lc.coords * (lc.coords.transpose() * &w);
                                    }
                                }
                                assert!(
                                    resid.norm() < tol::JACOBI,
                                    "{}: grading leak {:.3e}",
                                    spec.name,
                                    resid.norm()
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn limits_are_fixed_points_of_the_flow() {
        let mut s = Sampler::new(43);
        let spec = reps::sl2_sym2();
        for _ in 0..25 {
            let beta = s.unit_real_vector(spec.p_dim());
            let g = build_grading(&spec, &beta);
            let x = ProjectivePoint::new(s.unit_complex_vector(3));
            for dir in [Direction::Forward, Direction::Backward] {
                let lim = bb_limit(&g, &x, dir);
                let vel = vector_field_of_matrix(&g.rho_beta, &lim).norm();
                assert!(vel < tol::FIXED_POINT, "limit drifts with speed {vel:.3e}");
            }
        }
    }

    #[test]
    fn forward_limit_is_equivariant_under_the_centralizer() {
        let mut s = Sampler::new(47);
        let spec = reps::sl2_sym2();
        for _ in 0..15 {
            let beta = s.unit_real_vector(spec.p_dim());
            let g = build_grading(&spec, &beta);
            if g.g_zero.ncols() == 0 {
                continue;
            }
            let x = ProjectivePoint::new(s.unit_complex_vector(3));
            let mut coords = RVec::zeros(spec.basis.dim());
            for k in 0..g.g_zero.ncols() {
                let col: RVec = g.g_zero.column(k).into_owned();
                coords += col * s.uniform(-0.5, 0.5);
            }
            let gmat = expm(&spec.basis.matrix_of(&coords));
            let moved = ProjectivePoint::new(&gmat * x.vector());
            let left = bb_limit(&g, &moved, Direction::Forward);
            let right = ProjectivePoint::new(&gmat * bb_limit(&g, &x, Direction::Forward).vector());
            assert!(
                left.distance(&right) < tol::EQUIVARIANCE,
                "equivariance defect {:.3e}",
                left.distance(&right)
            );
        }
    }

    #[test]
    fn top_weight_line_kills_the_positive_radical_and_not_the_negative() {
        let spec = reps::sl2_sym2();
        let g = h_grading(&spec);
        let top = point(&[1.0, 0.0, 0.0]);
        // p-part of the centralizer fixes the cell.
        for k in 0..g.g_zero.ncols() {
            let col: RVec = g.g_zero.column(k).into_owned();
            let m = spec.basis.matrix_of(&col);
            assert!(vector_field_of_matrix(&m, &top).norm() < tol::FIXED_POINT);
        }
        for k in 0..g.r_plus.ncols() {
            let col: RVec = g.r_plus.column(k).into_owned();
            let m = spec.basis.matrix_of(&col);
            assert!(vector_field_of_matrix(&m, &top).norm() < tol::RPLUS_KILL);
        }
        for k in 0..g.r_minus.ncols() {
            let col: RVec = g.r_minus.column(k).into_owned();
            let m = spec.basis.matrix_of(&col);
            assert!(vector_field_of_matrix(&m, &top).norm() > tol::ORBIT_SIGMA_MIN);
        }
    }

    #[test]
    fn level_value_matches_momentum_of_the_limit() {
        let spec = reps::sl2_sym2();
        let g = h_grading(&spec);
        let mut s = Sampler::new(53);
        for _ in 0..10 {
            let x = ProjectivePoint::new(s.unit_complex_vector(3));
            let rec = classify_point(&spec, &g, &x);
            let direct = mu_beta(&spec, &rec.forward_limit, &g.beta);
            assert!((rec.level_value - direct).abs() < 1e-12);
        }
    }
}
