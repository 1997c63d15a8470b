//! Convex geometry of finite weight sets: extreme points, facet hulls,
//! exposed faces, normal cones, and exposing vectors.
//!
//! The extreme-point question is answered by two deliberately independent
//! routes. [`extreme_points`] is primal: a point is kept iff a phase-1
//! simplex certifies it is not a convex combination of the others, in exact
//! rational arithmetic when the input is integral. [`Polytope::from_points`]
//! is dual: it enumerates facet half-spaces and reads vertices off the
//! incidence structure. Tests (and the acceptance battery) hold the two
//! routes against each other and against a brute-force oracle.

mod hull;
pub mod lp;

use crate::linalg::RVec;
use crate::tol;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum PolytopeError {
    /// All input points coincide within tolerance; the hull is a single
    /// point and carries no facet structure. The representative index (the
    /// first of the coincidence class) is reported.
    #[error("all {count} input points coincide within tolerance; representative index {representative}")]
    DegenerateInput { representative: usize, count: usize },
    /// The candidate exposing vector failed to expose its vertex alone,
    /// which only happens on numerically degenerate hulls.
    #[error("no candidate vector exposes vertex {vertex} alone")]
    ExposureFailure { vertex: usize },
}

impl PolytopeError {
    /// Stable machine-readable error code for CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            PolytopeError::DegenerateInput { .. } => "degenerate_input",
            PolytopeError::ExposureFailure { .. } => "exposure_failure",
        }
    }
}

/// A half-space `<normal, x> <= offset` valid for the whole point set and
/// tight on one of its faces.
#[derive(Debug, Clone)]
pub struct Facet {
    pub normal: RVec,
    pub offset: f64,
}

/// Convex hull of a finite point set, with vertices indexed into the input
/// list and facet half-spaces in the ambient coordinates.
#[derive(Debug, Clone)]
pub struct Polytope {
    /// The input points, unmodified (duplicates included).
    pub points: Vec<RVec>,
    /// Indices of the extreme input points, ascending. A duplicated extreme
    /// point is represented by its first occurrence.
    pub vertices: Vec<usize>,
    /// Facet half-spaces; every input point satisfies each within `1e-9`.
    pub facets: Vec<Facet>,
    /// For each vertex index, the facets tight at it.
    pub vertex_facets: BTreeMap<usize, Vec<usize>>,
}

/// The outer normal cone of a vertex, spanned by the normals of its
/// incident facets.
#[derive(Debug, Clone)]
pub struct NormalCone {
    pub vertex: RVec,
    pub generators: Vec<RVec>,
}

/// The vertex set exposed by a linear functional. `total` marks the
/// degenerate direction `beta = 0`, which exposes everything.
#[derive(Debug, Clone)]
pub struct ExposedFace {
    pub indices: Vec<usize>,
    pub total: bool,
}

fn validate_points(points: &[RVec]) {
    assert!(!points.is_empty(), "point list must be nonempty");
    let r = points[0].len();
    assert!(
        r >= 1 && r <= tol::RANK_CAP,
        "ambient dimension {r} outside supported range 1..={}",
        tol::RANK_CAP
    );
    assert!(
        points.len() <= tol::POINT_COUNT_CAP,
        "point count {} exceeds cap {}",
        points.len(),
        tol::POINT_COUNT_CAP
    );
    for p in points {
        assert_eq!(p.len(), r, "points must share one ambient dimension");
        assert!(p.iter().all(|c| c.is_finite()), "point coordinates must be finite");
    }
}

/// Indices of the input points that are not convex combinations of the
/// others. Coincident points count once, through their first occurrence.
///
/// Integral inputs are decided in exact rational arithmetic; general inputs
/// by a floating-point feasibility solve with tolerance `1e-9`.
pub fn extreme_points(points: &[RVec]) -> Result<Vec<usize>, PolytopeError> {
    validate_points(points);
    let reps = hull::dedupe_reps(points, tol::GEOMETRY);
    if reps.len() == 1 {
        return Err(PolytopeError::DegenerateInput {
            representative: reps[0],
            count: points.len(),
        });
    }
    let exact = lp::all_integral(points);
    let mut out = Vec::new();
    for (pos, &i) in reps.iter().enumerate() {
        let others: Vec<RVec> = reps
            .iter()
            .enumerate()
            .filter(|(q, _)| *q != pos)
            .map(|(_, &j)| points[j].clone())
            .collect();
        let member = if exact {
            lp::membership_exact(&points[i], &others)
        } else {
            lp::membership_f64(&points[i], &others)
        };
        if !member {
            out.push(i);
        }
    }
    Ok(out)
}

impl Polytope {
    /// Build the hull of a finite point set by facet enumeration.
    pub fn from_points(points: &[RVec]) -> Result<Polytope, PolytopeError> {
        validate_points(points);
        let reps = hull::dedupe_reps(points, tol::GEOMETRY);
        if reps.len() == 1 {
            return Err(PolytopeError::DegenerateInput {
                representative: reps[0],
                count: points.len(),
            });
        }
        let data = hull::build(points, &reps);
        Ok(Polytope {
            points: points.to_vec(),
            vertices: data.vertices,
            facets: data
                .facets
                .into_iter()
                .map(|(normal, offset)| Facet { normal, offset })
                .collect(),
            vertex_facets: data.vertex_facets.into_iter().collect(),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.points[0].len()
    }

    /// Vertices attaining `max <beta, .>` within `1e-9`. A zero direction
    /// exposes every vertex; the result flags that as a total face.
    pub fn exposed_face(&self, beta: &RVec) -> ExposedFace {
        if beta.norm() < 1e-12 {
            return ExposedFace {
                indices: self.vertices.clone(),
                total: true,
            };
        }
        let best = self
            .vertices
            .iter()
            .map(|&i| beta.dot(&self.points[i]))
            .fold(f64::NEG_INFINITY, f64::max);
        ExposedFace {
            indices: self
                .vertices
                .iter()
                .copied()
                .filter(|&i| beta.dot(&self.points[i]) >= best - tol::GEOMETRY)
                .collect(),
            total: false,
        }
    }

    /// Outer normal cone at a vertex. The index must be one of
    /// `self.vertices`.
    pub fn normal_cone(&self, vertex_index: usize) -> NormalCone {
        let incident = self
            .vertex_facets
            .get(&vertex_index)
            .unwrap_or_else(|| panic!("index {vertex_index} is not a vertex"));
        NormalCone {
            vertex: self.points[vertex_index].clone(),
            generators: incident.iter().map(|&f| self.facets[f].normal.clone()).collect(),
        }
    }

    /// A vector in the interior of the normal cone exposing exactly this
    /// vertex: the vertex itself when it strictly dominates all others in
    /// self-pairing, otherwise the normalized sum of the cone generators.
    pub fn exposing_vector(&self, vertex_index: usize) -> Result<RVec, PolytopeError> {
        let sigma = &self.points[vertex_index];
        let self_pairing = sigma.dot(sigma);
        let self_exposes = self.vertices.iter().all(|&i| {
            i == vertex_index || sigma.dot(&self.points[i]) < self_pairing - tol::EXPOSURE_MARGIN
        });
        let beta = if self_exposes {
            sigma.clone()
        } else {
            let cone = self.normal_cone(vertex_index);
            let mut sum = RVec::zeros(self.ambient_dim());
            for g in &cone.generators {
                sum += g;
            }
            let n = sum.norm();
            if n < 1e-12 {
                return Err(PolytopeError::ExposureFailure { vertex: vertex_index });
            }
            sum / n
        };
        let face = self.exposed_face(&beta);
        if face.total || face.indices != [vertex_index] {
            return Err(PolytopeError::ExposureFailure { vertex: vertex_index });
        }
        Ok(beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{lstsq, RMat};
    use crate::sample::Sampler;

    // Brute-force extreme-point oracle, written against the definition and
    // nothing else: a point is extreme iff no subset of at most d+1 other
    // points (Caratheodory bound) contains it in its convex hull, decided
    // per subset by a direct barycentric least-squares solve. No simplex, no
    // facet enumeration; this is the yardstick the fast routes are measured
    // against.
    fn oracle_is_extreme(points: &[RVec], i: usize) -> bool {
        let d = points[0].len();
        let q = &points[i];
        let others: Vec<usize> = (0..points.len())
            .filter(|&j| j != i && (&points[j] - q).norm() > 1e-9)
            .collect();
        for size in 1..=(d + 1).min(others.len()) {
            for subset in subsets(&others, size) {
                let a = RMat::from_fn(d + 1, size, |r, c| {
                    if r < d {
                        points[subset[c]][r]
                    } else {
                        1.0
                    }
                });
                let mut rhs = RVec::zeros(d + 1);
                for r in 0..d {
                    rhs[r] = q[r];
                }
                rhs[d] = 1.0;
                let sol = lstsq(&a, &rhs);
                if sol.residual < 1e-8 && sol.solution.iter().all(|&l| l >= -1e-9) {
                    return false;
                }
            }
        }
        true
    }

    fn oracle_extreme_set(points: &[RVec]) -> Vec<usize> {
        (0..points.len())
            .filter(|&i| {
                // First occurrence represents a coincidence class.
                let first_of_class = (0..i).all(|j| (&points[j] - &points[i]).norm() > 1e-9);
                first_of_class && oracle_is_extreme(points, i)
            })
            .collect()
    }

    fn subsets(pool: &[usize], size: usize) -> Vec<Vec<usize>> {
        if size == 0 {
            return vec![Vec::new()];
        }
        if pool.len() < size {
            return Vec::new();
        }
        let mut out = Vec::new();
        for (k, &first) in pool.iter().enumerate() {
            for mut rest in subsets(&pool[k + 1..], size - 1) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }

    fn pts(raw: &[&[f64]]) -> Vec<RVec> {
        raw.iter().map(|p| RVec::from_vec(p.to_vec())).collect()
    }

    fn random_instance(s: &mut Sampler, dim: usize, count: usize) -> Vec<RVec> {
        (0..count).map(|_| s.box_vector(dim, 3.0)).collect()
    }

    #[test]
    fn membership_route_matches_the_brute_force_oracle() {
        let mut s = Sampler::new(301);
        for k in 0..30 {
            let dim = 1 + k % 3;
            let count = 4 + (k * 7) % 9;
            let points = random_instance(&mut s, dim, count);
            let fast = extreme_points(&points).unwrap();
            let slow = oracle_extreme_set(&points);
            assert_eq!(fast, slow, "instance {k} (dim {dim}, {count} points)");
        }
    }

    #[test]
    fn hull_vertices_match_the_primal_route() {
        let mut s = Sampler::new(302);
        for k in 0..30 {
            let dim = 1 + k % 3;
            let count = 5 + (k * 5) % 8;
            let points = random_instance(&mut s, dim, count);
            let poly = Polytope::from_points(&points).unwrap();
            let primal = extreme_points(&points).unwrap();
            assert_eq!(poly.vertices, primal, "instance {k} (dim {dim}, {count} points)");
        }
    }

    #[test]
    fn integral_square_with_interior_point_drops_the_center() {
        let points = pts(&[&[0.0, 0.0], &[2.0, 0.0], &[0.0, 2.0], &[2.0, 2.0], &[1.0, 1.0]]);
        assert!(lp::all_integral(&points));
        assert_eq!(extreme_points(&points).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn half_integral_interior_point_still_excluded_in_floating_point() {
        let points = pts(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0], &[0.5, 0.5]]);
        assert!(!lp::all_integral(&points));
        assert_eq!(extreme_points(&points).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn quadratic_weights_take_their_endpoints() {
        let points = pts(&[&[2.0], &[0.0], &[-2.0]]);
        assert_eq!(extreme_points(&points).unwrap(), vec![0, 2]);
        let poly = Polytope::from_points(&points).unwrap();
        assert_eq!(poly.vertices, vec![0, 2]);
    }

    #[test]
    fn disk_samples_inside_a_square_leave_the_corners() {
        let mut s = Sampler::new(303);
        let mut points = pts(&[&[-1.5, -1.5], &[1.5, -1.5], &[-1.5, 1.5], &[1.5, 1.5]]);
        while points.len() < 54 {
            let p = s.box_vector(2, 1.0);
            if p.norm() <= 1.0 {
                points.push(p);
            }
        }
        let fast = extreme_points(&points).unwrap();
        assert_eq!(fast, vec![0, 1, 2, 3]);
        assert_eq!(oracle_extreme_set(&points), vec![0, 1, 2, 3]);
    }

    #[test]
    fn facet_inequalities_are_valid_tight_and_slack_where_expected() {
        let mut s = Sampler::new(304);
        let points = random_instance(&mut s, 2, 10);
        let poly = Polytope::from_points(&points).unwrap();
        for p in &poly.points {
            for f in &poly.facets {
                assert!(f.normal.dot(p) <= f.offset + tol::GEOMETRY);
            }
        }
        for &v in &poly.vertices {
            let incident = &poly.vertex_facets[&v];
            for (fid, f) in poly.facets.iter().enumerate() {
                let gap = f.offset - f.normal.dot(&poly.points[v]);
                if incident.contains(&fid) {
                    assert!(gap.abs() <= tol::GEOMETRY);
                } else {
                    assert!(gap > tol::GEOMETRY, "vertex {v} not slack on facet {fid}");
                }
            }
        }
    }

    #[test]
    fn integral_cube_has_six_facets_and_eight_vertices() {
        let mut points = Vec::new();
        for x in [0.0, 2.0] {
            for y in [0.0, 2.0] {
                for z in [0.0, 2.0] {
                    points.push(RVec::from_vec(vec![x, y, z]));
                }
            }
        }
        points.push(RVec::from_vec(vec![1.0, 1.0, 1.0]));
        let poly = Polytope::from_points(&points).unwrap();
        assert_eq!(poly.vertices, (0..8).collect::<Vec<_>>());
        assert_eq!(poly.facets.len(), 6);
        for &v in &poly.vertices {
            assert_eq!(poly.vertex_facets[&v].len(), 3);
        }
        assert_eq!(extreme_points(&points).unwrap(), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn exposed_face_square_examples() {
        let points = pts(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let poly = Polytope::from_points(&points).unwrap();
        let right = poly.exposed_face(&RVec::from_vec(vec![1.0, 0.0]));
        assert!(!right.total);
        assert_eq!(right.indices, vec![1, 3]);
        let corner = poly.exposed_face(&RVec::from_vec(vec![1.0, 1.0]));
        assert_eq!(corner.indices, vec![3]);
        let total = poly.exposed_face(&RVec::zeros(2));
        assert!(total.total);
        assert_eq!(total.indices, poly.vertices);
    }

    #[test]
    fn exposed_face_on_weight_line() {
        let points = pts(&[&[2.0], &[0.0], &[-2.0]]);
        let poly = Polytope::from_points(&points).unwrap();
        let face = poly.exposed_face(&RVec::from_vec(vec![1.0]));
        assert_eq!(face.indices, vec![0]);
    }

    #[test]
    fn normal_cone_examples() {
        let square = Polytope::from_points(&pts(&[
            &[0.0, 0.0],
            &[1.0, 0.0],
            &[0.0, 1.0],
            &[1.0, 1.0],
        ]))
        .unwrap();
        let cone = square.normal_cone(3);
        let mut gens: Vec<(f64, f64)> = cone.generators.iter().map(|g| (g[0], g[1])).collect();
        gens.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(gens.len(), 2);
        assert!((gens[0].0 - 0.0).abs() < 1e-9 && (gens[0].1 - 1.0).abs() < 1e-9);
        assert!((gens[1].0 - 1.0).abs() < 1e-9 && (gens[1].1 - 0.0).abs() < 1e-9);

        let segment = Polytope::from_points(&pts(&[&[-2.0], &[2.0]])).unwrap();
        let cone = segment.normal_cone(1);
        assert_eq!(cone.generators.len(), 1);
        assert!((cone.generators[0][0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn normal_cone_interior_vectors_expose_their_vertex() {
        let mut s = Sampler::new(305);
        let points = random_instance(&mut s, 2, 9);
        let poly = Polytope::from_points(&points).unwrap();
        for &v in &poly.vertices {
            let cone = poly.normal_cone(v);
            for _ in 0..5 {
                let mut beta = RVec::zeros(2);
                for g in &cone.generators {
                    beta += g * s.uniform(0.2, 2.0);
                }
                let face = poly.exposed_face(&beta);
                assert_eq!(face.indices, vec![v], "cone sample failed at vertex {v}");
            }
        }
    }

    #[test]
    fn exposing_vector_prefers_self_exposure() {
        let weights = Polytope::from_points(&pts(&[&[2.0], &[0.0], &[-2.0]])).unwrap();
        let beta = weights.exposing_vector(0).unwrap();
        assert_eq!(beta[0], 2.0);

        let square = Polytope::from_points(&pts(&[
            &[0.0, 0.0],
            &[1.0, 0.0],
            &[0.0, 1.0],
            &[1.0, 1.0],
        ]))
        .unwrap();
        let far = square.exposing_vector(3).unwrap();
        assert_eq!((far[0], far[1]), (1.0, 1.0));
        // The origin cannot expose itself; the generator-sum fallback points
        // into the third quadrant.
        let origin = square.exposing_vector(0).unwrap();
        let s = -(0.5_f64).sqrt();
        assert!((origin[0] - s).abs() < 1e-12);
        assert!((origin[1] - s).abs() < 1e-12);
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let points = pts(&[&[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0]]);
        match extreme_points(&points) {
            Err(PolytopeError::DegenerateInput { representative, count }) => {
                assert_eq!(representative, 0);
                assert_eq!(count, 3);
            }
            other => panic!("expected DegenerateInput, got {other:?}"),
        }
        assert!(matches!(
            Polytope::from_points(&points),
            Err(PolytopeError::DegenerateInput { .. })
        ));
    }

    #[test]
    fn collinear_points_in_the_plane_reduce_to_a_segment() {
        let points = pts(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]]);
        let poly = Polytope::from_points(&points).unwrap();
        assert_eq!(poly.vertices, vec![0, 2]);
        assert_eq!(extreme_points(&points).unwrap(), vec![0, 2]);
        let face = poly.exposed_face(&RVec::from_vec(vec![1.0, 1.0]));
        assert_eq!(face.indices, vec![2]);
        let cone = poly.normal_cone(2);
        assert_eq!(cone.generators.len(), 1);
        let g = &cone.generators[0];
        assert!((g[0] - g[1]).abs() < 1e-9 && g[0] > 0.0);
    }

    #[test]
    fn duplicated_extreme_point_is_reported_once() {
        let points = pts(&[&[0.0], &[2.0], &[2.0], &[1.0]]);
        assert_eq!(extreme_points(&points).unwrap(), vec![0, 1]);
        let poly = Polytope::from_points(&points).unwrap();
        assert_eq!(poly.vertices, vec![0, 1]);
    }
}
