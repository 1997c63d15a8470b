//! Numerical verification batteries over the bundled representations.
//!
//! Every battery is deterministic in `(samples, seed)` and reports the
//! same record shape: the check name, the sample count actually run, the
//! seed, the worst error observed, and the number of tolerance
//! violations. For separation-style checks (freeness, coverage) the
//! `max_error` field carries the smallest margin observed instead, since
//! there the interesting number is how close the battery came to failing.

use crate::chart::{build_chart, equivariance_check, verify_freeness, ChartCoords, ChartError};
use crate::flow::{batch_maximizers, extreme_certificate, flow_eta, FlowParams};
use crate::linalg::{expm, CMat, RVec};
use crate::moment::{
    fs_gradient, moment_matrix, moment_torus, vector_field, ProjectivePoint,
};
use crate::rep::weight_decomposition;
use crate::sample::Sampler;
use crate::strata::{build_grading, classify_point, theta_flip_angle, x_beta_max};
use crate::tol;
use serde::Serialize;

/// One battery outcome; serializes to the stable report schema.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub samples: usize,
    pub seed: u64,
    pub max_error: f64,
    pub violations: usize,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn random_direction(s: &mut Sampler, dim: usize) -> RVec {
    let mut b = s.real_vector(dim);
    if b.norm() < 1e-6 {
        b[0] += 1.0;
    }
    b
}

/// Finite differences of the energy along frame directions agree with the
/// projected matrix action.
pub fn gradient_battery(samples: usize, seed: u64) -> CheckReport {
    let specs = crate::reps::all();
    let mut s = Sampler::new(seed);
    let mut max_error = 0.0_f64;
    let mut violations = 0;
    let mut run = 0;
    for (_, spec) in &specs {
        for _ in 0..samples {
            let x = ProjectivePoint::new(s.unit_complex_vector(spec.dim_v));
            let beta = random_direction(&mut s, spec.p_dim());
            let analytic = vector_field(spec, &x, &beta);
            let numeric = fs_gradient(spec, &x, &beta);
            let err = (&analytic.t - &numeric.t).norm();
            max_error = max_error.max(err);
            if err > tol::GRADIENT_MATCH {
                violations += 1;
            }
            run += 1;
        }
    }
    CheckReport {
        check: "gradient".into(),
        samples: run,
        seed,
        max_error,
        violations,
    }
}

/// The energy never decreases along its own flow.
pub fn monotony_battery(trajectories: usize, seed: u64) -> CheckReport {
    let spec = crate::reps::sl2_sym2();
    let mut s = Sampler::new(seed);
    let mut max_drop = 0.0_f64;
    let mut violations = 0;
    for _ in 0..trajectories {
        let x = ProjectivePoint::new(s.unit_complex_vector(spec.dim_v));
        let traj = flow_eta(&spec, &x, &FlowParams::default());
        for pair in traj.samples.windows(2) {
            let drop = pair[0].eta - pair[1].eta;
            max_drop = max_drop.max(drop);
            if drop > tol::ETA_SLACK {
                violations += 1;
            }
        }
    }
    CheckReport {
        check: "monotony".into(),
        samples: trajectories,
        seed,
        max_error: max_drop,
        violations,
    }
}

/// Momentum transforms by conjugation under the unitary symmetries.
pub fn moment_equivariance_battery(samples: usize, seed: u64) -> CheckReport {
    let specs = crate::reps::all();
    let mut s = Sampler::new(seed);
    let mut max_error = 0.0_f64;
    let mut violations = 0;
    let mut run = 0;
    for (_, spec) in &specs {
        if spec.basis.k_indices.is_empty() {
            continue;
        }
        for _ in 0..samples {
            let x = ProjectivePoint::new(s.unit_complex_vector(spec.dim_v));
            let mut coords = RVec::zeros(spec.basis.dim());
            for &ki in &spec.basis.k_indices {
                coords[ki] = s.uniform(-1.0, 1.0);
            }
            let k = expm(&spec.basis.matrix_of(&coords));
            let moved = ProjectivePoint::new(&k * x.vector());
            let lhs = moment_matrix(spec, &moved);
            let rhs = &k * (moment_matrix(spec, &x) * k.adjoint());
            let err = (lhs - rhs).norm();
            max_error = max_error.max(err);
            if err > 1e-8 {
                violations += 1;
            }
            run += 1;
        }
    }
    CheckReport {
        check: "moment_equivariance".into(),
        samples: run,
        seed,
        max_error,
        violations,
    }
}

/// Torus momentum values stay inside the convex hull of the weights, and
/// the facet margin agrees with the membership program.
pub fn image_containment_battery(samples: usize, seed: u64) -> CheckReport {
    let specs = crate::reps::all();
    let mut s = Sampler::new(seed);
    let mut max_margin = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut run = 0;
    for (_, spec) in &specs {
        let weights: Vec<RVec> = weight_decomposition(spec)
            .iter()
            .map(|w| w.weight.clone())
            .collect();
        let poly = crate::polytope::Polytope::from_points(&weights).expect("weights span");
        for _ in 0..samples {
            let x = ProjectivePoint::new(s.unit_complex_vector(spec.dim_v));
            let mu = moment_torus(spec, &x);
            let margin = poly
                .facets
                .iter()
                .fold(f64::NEG_INFINITY, |m, f| m.max(f.normal.dot(&mu) - f.offset));
            max_margin = max_margin.max(margin);
            let inside_facets = margin <= tol::GEOMETRY;
            let inside_lp = crate::polytope::lp::membership_f64(&mu, &weights);
            if !inside_facets || !inside_lp {
                violations += 1;
            }
            run += 1;
        }
    }
    CheckReport {
        check: "image_containment".into(),
        samples: run,
        seed,
        max_error: max_margin.max(0.0),
        violations,
    }
}

/// Vertex sets from the membership program agree with the facet
/// enumeration, facets contain every input point, and every vertex is
/// certified by its own exposing vector.
pub fn polytope_battery(instances: usize, seed: u64) -> CheckReport {
    let mut s = Sampler::new(seed);
    let mut max_error = 0.0_f64;
    let mut violations = 0;
    for _ in 0..instances {
        let dim = 1 + s.index(3);
        let count = 3 + s.index(10);
        let points: Vec<RVec> = (0..count)
            .map(|_| {
                RVec::from_fn(dim, |_, _| {
                    if s.index(2) == 0 {
                        s.index(7) as f64 - 3.0
                    } else {
                        s.uniform(-3.0, 3.0)
                    }
                })
            })
            .collect();
        let by_program = match crate::polytope::extreme_points(&points) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let poly = match crate::polytope::Polytope::from_points(&points) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let mut hull_sorted = poly.vertices.clone();
        hull_sorted.sort_unstable();
        let mut prog_sorted = by_program.clone();
        prog_sorted.sort_unstable();
        if hull_sorted != prog_sorted {
            violations += 1;
            continue;
        }
        for p in &points {
            for f in &poly.facets {
                let margin = f.normal.dot(p) - f.offset;
                max_error = max_error.max(margin);
                if margin > tol::GEOMETRY {
                    violations += 1;
                }
            }
        }
        for &v in &poly.vertices {
            if poly.exposing_vector(v).is_err() {
                violations += 1;
            }
        }
    }
    CheckReport {
        check: "polytope_dual_route".into(),
        samples: instances,
        seed,
        max_error,
        violations,
    }
}

/// Grading structure: dimensions add up, brackets add grades, and the
/// involution swaps the two radicals.
pub fn grading_battery(samples: usize, seed: u64) -> CheckReport {
    let specs = crate::reps::all();
    let mut s = Sampler::new(seed);
    let mut max_error = 0.0_f64;
    let mut violations = 0;
    let mut run = 0;
    for (_, spec) in &specs {
        for _ in 0..samples {
            let beta = random_direction(&mut s, spec.p_dim());
            let grading = build_grading(spec, &beta);
            let g_dim: usize = grading.g_levels.iter().map(|l| l.coords.ncols()).sum();
            let v_dim: usize = grading.v_levels.iter().map(|l| l.basis.ncols()).sum();
            if g_dim != spec.basis.dim() || v_dim != spec.dim_v {
                violations += 1;
                run += 1;
                continue;
            }
            // Bracket grading: a level-a and a level-b element bracket into
            // the levels at value a + b.
            let la = &grading.g_levels[s.index(grading.g_levels.len())];
            let lb = &grading.g_levels[s.index(grading.g_levels.len())];
            let xa: RVec = la.coords.column(s.index(la.coords.ncols())).into_owned();
            let xb: RVec = lb.coords.column(s.index(lb.coords.ncols())).into_owned();
            let br = spec.basis.bracket_coords(&xa, &xb);
            let target = la.value + lb.value;
            let mut off = br.clone();
            for l in &grading.g_levels {
                if (l.value - target).abs() <= 10.0 * tol::CLUSTER_GAP {
                    let proj = &l.coords * (l.coords.transpose() * &br);
                    off -= proj;
                }
            }
            let err = off.norm();
            max_error = max_error.max(err);
            if err > tol::JACOBI {
                violations += 1;
            }
            let angle = theta_flip_angle(spec, &grading);
            max_error = max_error.max(angle);
            if angle > tol::PRINCIPAL_ANGLE {
                violations += 1;
            }
            run += 1;
        }
    }
    CheckReport {
        check: "grading_algebra".into(),
        samples: run,
        seed,
        max_error,
        violations,
    }
}

/// The maximal stratum of an exposing direction is exactly the projective
/// space of the top eigenlevel: membership agrees in both directions, the
/// positive radical annihilates it, and the negative orbit map has full
/// rank there.
pub fn max_stratum_battery(samples: usize, seed: u64) -> CheckReport {
    let spec = crate::reps::sl2_sym2();
    let beta = spec.p_coords_of(&spec.a_input[0].clone());
    let grading = build_grading(&spec, &beta);
    let cell = x_beta_max(&spec, &grading, &CMat::identity(spec.dim_v, spec.dim_v))
        .expect("full space is invariant");
    let q = &cell.basis;
    let mut s = Sampler::new(seed);
    let mut max_error = 0.0_f64;
    let mut violations = 0;
    for _ in 0..samples {
        // Points of the cell subspace classify as maximal.
        let c = s.unit_complex_vector(q.ncols());
        let z = ProjectivePoint::new(q * c);
        let record = classify_point(&spec, &grading, &z);
        if !(record.fixed && record.in_beta_minus_max) {
            violations += 1;
        }
        // Random classified-maximal points lie in the cell subspace.
        let y = ProjectivePoint::new(s.unit_complex_vector(spec.dim_v));
        let rec = classify_point(&spec, &grading, &y);
        let out = (y.vector() - q * (q.adjoint() * y.vector())).norm();
        if rec.fixed && rec.in_beta_minus_max && out > tol::MAX_CELL_MEMBERSHIP {
            violations += 1;
        }
        // The positive radical annihilates the cell.
        for j in 0..grading.r_plus.ncols() {
            let coords: RVec = grading.r_plus.column(j).into_owned();
            let m = spec.basis.matrix_of(&coords);
            let err = (&m * z.vector()).norm();
            max_error = max_error.max(err);
            if err > tol::RPLUS_KILL {
                violations += 1;
            }
        }
        // The negative orbit map keeps full rank on the cell.
        let chart = build_chart(&spec, &grading, &z);
        match chart {
            Ok(c) => {
                if c.orbit_sigma_min < tol::ORBIT_SIGMA_MIN {
                    violations += 1;
                }
            }
            Err(_) => violations += 1,
        }
    }
    CheckReport {
        check: "max_stratum".into(),
        samples,
        seed,
        max_error,
        violations,
    }
}

/// Chart round trips on coordinate boxes and on ambient cell samples.
pub fn chart_round_trip_battery(samples: usize, seed: u64) -> CheckReport {
    let spec = crate::reps::sl2_sym2();
    let beta = spec.p_coords_of(&spec.a_input[0].clone());
    let grading = build_grading(&spec, &beta);
    let base = ProjectivePoint::new(grading.v_levels[0].basis.column(0).into_owned());
    let chart = build_chart(&spec, &grading, &base).expect("chart exists at the top line");
    let mut s = Sampler::new(seed);
    let mut max_error = 0.0_f64;
    let mut violations = 0;
    for k in 0..samples {
        if k % 2 == 0 {
            let coords = ChartCoords {
                n: s.box_vector(chart.n_dim(), 2.0),
                f: s.box_vector(chart.f_dim(), 2.0),
                u: s.box_vector(chart.u_dim(), 2.0),
            };
            let z = chart.phi_forward(&coords);
            match chart.phi_inverse(&z) {
                Ok(back) => {
                    let err = (&back.n - &coords.n).norm() + (&back.f - &coords.f).norm()
                        + (&back.u - &coords.u).norm();
                    max_error = max_error.max(err);
                    if err > tol::ROUND_TRIP {
                        violations += 1;
                    }
                }
                Err(_) => violations += 1,
            }
        } else {
            let z = ProjectivePoint::new(s.unit_complex_vector(spec.dim_v));
            match chart.phi_inverse(&z) {
                Ok(coords) => {
                    let err = chart.phi_forward(&coords).distance(&z);
                    max_error = max_error.max(err);
                    if err > tol::ROUND_TRIP {
                        violations += 1;
                    }
                }
                Err(ChartError::OutsideCell { .. }) => {}
                Err(_) => violations += 1,
            }
        }
    }
    CheckReport {
        check: "chart_round_trip".into(),
        samples,
        seed,
        max_error,
        violations,
    }
}

/// Reducible-module chart round trips, and exact agreement with the plain
/// chart when the complement is empty.
pub fn blv_battery(samples: usize, seed: u64) -> CheckReport {
    let spec = crate::reps::sl2_sym2_plus_trivial();
    let mut w = CMat::zeros(4, 3);
    for i in 0..3 {
        w[(i, i)] = crate::linalg::C64::new(1.0, 0.0);
    }
    let mut u = CMat::zeros(4, 1);
    u[(3, 0)] = crate::linalg::C64::new(1.0, 0.0);
    let chart = crate::chart::blv_chart(&spec, &w, &u).expect("split module chart");

    let plain_spec = crate::reps::sl2_sym2();
    let blv0 = crate::chart::blv_chart(&plain_spec, &CMat::identity(3, 3), &CMat::zeros(3, 0))
        .expect("empty complement chart");
    let rho_h = plain_spec.a_input[0].clone();
    let plain_grading = build_grading(&plain_spec, &plain_spec.p_coords_of(&rho_h));
    let base = ProjectivePoint::new(plain_grading.v_levels[0].basis.column(0).into_owned());
    let plain = build_chart(&plain_spec, &plain_grading, &base).expect("plain chart");

    let mut s = Sampler::new(seed);
    let mut max_error = 0.0_f64;
    let mut violations = 0;
    for _ in 0..samples {
        let coords = ChartCoords {
            n: s.box_vector(chart.n_dim(), 2.0),
            f: s.box_vector(chart.f_dim(), 2.0),
            u: s.box_vector(chart.u_dim(), 2.0),
        };
        let z = chart.phi_forward(&coords);
        match chart.phi_inverse(&z) {
            Ok(back) => {
                let err = (&back.n - &coords.n).norm() + (&back.f - &coords.f).norm();
                max_error = max_error.max(err);
                if err > tol::ROUND_TRIP {
                    violations += 1;
                }
            }
            Err(_) => violations += 1,
        }

        let z3 = ProjectivePoint::new(s.unit_complex_vector(3));
        match (blv0.phi_inverse(&z3), plain.phi_inverse(&z3)) {
            (Ok(a), Ok(b)) => {
                let err = (&a.n - &b.n).norm() + (&a.f - &b.f).norm();
                max_error = max_error.max(err);
                if err > 1e-12 {
                    violations += 1;
                }
            }
            (Err(ChartError::OutsideCell { .. }), Err(ChartError::OutsideCell { .. })) => {}
            _ => violations += 1,
        }
    }
    CheckReport {
        check: "blv_round_trip".into(),
        samples,
        seed,
        max_error,
        violations,
    }
}

/// Flow convergence and certification: every batch maximizer is certified
/// as an extreme-value critical point.
pub fn flow_battery(starts: usize, seed: u64) -> CheckReport {
    let spec = crate::reps::sl2_sym2();
    let mut s = Sampler::new(seed);
    let mut max_error = 0.0_f64;
    let mut violations = 0;
    let trajs: Vec<_> = (0..starts)
        .map(|_| {
            let x = ProjectivePoint::new(s.unit_complex_vector(spec.dim_v));
            flow_eta(&spec, &x, &FlowParams::default())
        })
        .collect();
    for t in &trajs {
        if !t.converged {
            violations += 1;
        }
        for pair in t.samples.windows(2) {
            if pair[0].eta - pair[1].eta > tol::ETA_SLACK {
                violations += 1;
            }
        }
    }
    for i in batch_maximizers(&trajs) {
        match extreme_certificate(&spec, &trajs[i]) {
            Ok(cert) => {
                max_error = max_error.max(cert.spectrum_error);
            }
            Err(_) => violations += 1,
        }
    }
    CheckReport {
        check: "flow_certificates".into(),
        samples: starts,
        seed,
        max_error,
        violations,
    }
}

/// Every projective point is covered by some unitary translate of the
/// chart cell, found within a few random tries. Reports the smallest
/// base-coefficient margin observed.
pub fn coverage_battery(samples: usize, seed: u64) -> CheckReport {
    let spec = crate::reps::sl2_sym2();
    let beta = spec.p_coords_of(&spec.a_input[0].clone());
    let grading = build_grading(&spec, &beta);
    let w0 = grading.v_levels[0].basis.column(0).into_owned();
    let mut s = Sampler::new(seed);
    let mut min_margin = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..samples {
        let z = s.unit_complex_vector(spec.dim_v);
        let mut best = 0.0_f64;
        for attempt in 0..5 {
            let translated = if attempt == 0 {
                w0.clone()
            } else {
                let mut coords = RVec::zeros(spec.basis.dim());
                for &ki in &spec.basis.k_indices {
                    coords[ki] = s.uniform(-2.0, 2.0);
                }
                expm(&spec.basis.matrix_of(&coords)) * &w0
            };
            best = best.max(translated.dotc(&z).norm());
            if best > tol::TOP_COEFF {
                break;
            }
        }
        min_margin = min_margin.min(best);
        if best <= tol::TOP_COEFF {
            violations += 1;
        }
    }
    CheckReport {
        check: "coverage".into(),
        samples,
        seed,
        max_error: if min_margin.is_finite() { min_margin } else { 0.0 },
        violations,
    }
}

/// Unipotent elements: exact polynomial exponentials with the expected
/// nilpotency order, and conjugation decay along the grading.
pub fn unipotent_battery(samples: usize, seed: u64) -> CheckReport {
    let spec = crate::reps::sl2_sym2();
    let beta = spec.p_coords_of(&spec.a_input[0].clone());
    let grading = build_grading(&spec, &beta);
    let base = ProjectivePoint::new(grading.v_levels[0].basis.column(0).into_owned());
    let chart = build_chart(&spec, &grading, &base).expect("chart exists at the top line");
    let mut s = Sampler::new(seed);
    let mut max_error = 0.0_f64;
    let mut violations = 0;
    let levels = grading.v_levels.len();
    for _ in 0..samples {
        let e = chart.unipotent(&s.box_vector(chart.n_dim(), 2.0));
        let mut p = e.n.clone();
        for _ in 1..levels {
            p = &p * &e.n;
        }
        let nil_err = p.norm();
        let exp_err = (&e.g - expm(&e.n)).norm();
        let t = 40.0;
        let conj = expm(&grading.rho_beta.scale(t)) * (&e.g * expm(&grading.rho_beta.scale(-t)));
        let decay = (&conj - CMat::identity(spec.dim_v, spec.dim_v)).norm();
        let err = nil_err.max(exp_err).max(decay);
        max_error = max_error.max(err);
        if nil_err > 1e-12 || exp_err > 1e-10 || decay > tol::UNIPOTENT_DECAY {
            violations += 1;
        }
    }
    CheckReport {
        check: "unipotent_decay".into(),
        samples,
        seed,
        max_error,
        violations,
    }
}

/// Run every battery, optionally restricted to one shard of a round-robin
/// split. Sample counts are scaled per battery from the base count.
pub fn run_batteries(samples: usize, seed: u64, shards: usize, shard: usize) -> Vec<CheckReport> {
    assert!(shards > 0 && shard < shards, "shard index out of range");
    let spec = crate::reps::sl2_sym2();
    let beta = spec.p_coords_of(&spec.a_input[0].clone());
    let grading = build_grading(&spec, &beta);

    type Battery = Box<dyn Fn(usize, u64) -> CheckReport>;
    let spec_f = spec.clone();
    let grading_f = grading.clone();
    let spec_e = spec.clone();
    let grading_e = grading.clone();
    let batteries: Vec<Battery> = vec![
        Box::new(gradient_battery),
        Box::new(|n, s| monotony_battery(n.div_ceil(5), s)),
        Box::new(moment_equivariance_battery),
        Box::new(image_containment_battery),
        Box::new(|n, s| polytope_battery(n.max(20), s)),
        Box::new(grading_battery),
        Box::new(max_stratum_battery),
        Box::new(chart_round_trip_battery),
        Box::new(move |n, s| verify_freeness(&spec_f, &grading_f, n, s)),
        Box::new(move |n, s| {
            let base =
                ProjectivePoint::new(grading_e.v_levels[0].basis.column(0).into_owned());
            let chart = build_chart(&spec_e, &grading_e, &base).expect("chart exists");
            equivariance_check(&chart, n.div_ceil(4), s)
        }),
        Box::new(blv_battery),
        Box::new(|n, s| flow_battery(n.div_ceil(10).max(5), s)),
        Box::new(coverage_battery),
        Box::new(unipotent_battery),
    ];

    let mut out = Vec::new();
    for (i, battery) in batteries.iter().enumerate() {
        if i % shards != shard {
            continue;
        }
        let battery_seed = seed.wrapping_add(i as u64);
        out.push(battery(samples, battery_seed));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batteries_pass_at_smoke_scale() {
        let reports = run_batteries(40, 11, 1, 0);
        for r in &reports {
            assert!(r.passed(), "battery {} failed: {:?}", r.check, r);
        }
    }

    #[test]
    fn sharding_partitions_the_battery_list() {
        let full = run_batteries(10, 5, 1, 0);
        let mut names: Vec<String> = Vec::new();
        for shard in 0..3 {
            for r in run_batteries(10, 5, 3, shard) {
                names.push(r.check.clone());
            }
        }
        names.sort();
        let mut full_names: Vec<String> = full.iter().map(|r| r.check.clone()).collect();
        full_names.sort();
        assert_eq!(names, full_names);
    }

    #[test]
    fn reports_serialize_to_the_stable_schema() {
        let report = CheckReport {
            check: "gradient".into(),
            samples: 3,
            seed: 1,
            max_error: 0.5,
            violations: 0,
        };
        let json = serde_json::to_value(&report).unwrap();
        let obj = json.as_object().unwrap();
        let keys: Vec<&String> = obj.keys().collect();
        assert_eq!(keys, ["check", "samples", "seed", "max_error", "violations"]);
    }
}
