//! Gradient flow of the momentum energy and certificates for its limits.
//!
//! The energy `eta(x) = |mu_p(x)|^2` increases along the flow of its own
//! gradient, which at `x` is twice the projective vector field of the
//! represented momentum matrix. Trajectories are integrated with a
//! classical fourth-order step, renormalizing after every stage, with the
//! step size adapted so `eta` never decreases beyond rounding.
//!
//! A converged limit is certified as an extreme-value critical point by
//! three independent clauses: the spectrum of its momentum matrix matches
//! the dual matrix of a vertex of the weight polytope, the limit passes
//! the maximal-stratum classification for its own momentum direction, and
//! the momentum-neutral symmetric directions all fix the limit.

use crate::linalg::{CVec, RMat, RVec};
use crate::moment::{eta, moment_matrix, moment_value, ProjectivePoint};
use crate::rep::RepresentationSpec;
use crate::strata::{build_grading, classify_point};
use crate::tol;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum FlowError {
    /// The trajectory hit its step budget before the velocity dropped
    /// below the stopping tolerance.
    #[error("flow did not converge within {steps} steps; final velocity {residual:.3e}")]
    NotConverged { steps: usize, residual: f64 },
    /// A certificate clause failed at the limit.
    #[error("certificate clause failed: {clause}")]
    CertificateFailure { clause: &'static str },
}

impl FlowError {
    pub fn code(&self) -> &'static str {
        match self {
            FlowError::NotConverged { .. } => "not_converged",
            FlowError::CertificateFailure { .. } => "certificate_failure",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowParams {
    /// Initial step size.
    pub step: f64,
    /// Stop when the gradient norm falls below this.
    pub stop_tol: f64,
    /// Step budget.
    pub max_steps: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            step: 1e-2,
            stop_tol: tol::FLOW_STOP,
            max_steps: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub time: f64,
    pub point: ProjectivePoint,
    pub eta: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub limit: ProjectivePoint,
    /// Momentum of the limit in orthonormal Hermitian coordinates.
    pub beta_limit: RVec,
    pub eta_limit: f64,
    pub converged: bool,
    pub steps: usize,
}

fn velocity(spec: &RepresentationSpec, v: &CVec) -> CVec {
    let x = ProjectivePoint::new(v.clone());
    let b = moment_matrix(spec, &x);
    let bv = &b * x.vector();
    let rayleigh = x.vector().dotc(&bv);
    (bv - x.vector() * rayleigh).scale(2.0)
}

fn normalized(v: CVec) -> CVec {
    let n = v.norm();
    v.scale(1.0 / n)
}

/// Integrate the ascending energy flow from `x0`.
pub fn flow_eta(spec: &RepresentationSpec, x0: &ProjectivePoint, params: &FlowParams) -> Trajectory {
    let mut v = x0.vector().clone();
    let mut h = params.step;
    let mut t = 0.0_f64;
    let mut samples = Vec::new();
    let mut steps = 0;
    let mut converged = false;

    loop {
        let point = ProjectivePoint::from_unit(v.clone());
        let e = eta(spec, &point);
        samples.push(TrajectorySample {
            time: t,
            point: point.clone(),
            eta: e,
        });

        let k1 = velocity(spec, &v);
        if k1.norm() < params.stop_tol {
            converged = true;
            break;
        }
        if steps >= params.max_steps {
            break;
        }

        // One adaptive fourth-order step, renormalizing every stage and
        // retrying at half step until eta does not drop.
        loop {
            let k2 = velocity(spec, &normalized(&v + k1.scale(0.5 * h)));
            let k3 = velocity(spec, &normalized(&v + k2.scale(0.5 * h)));
            let k4 = velocity(spec, &normalized(&v + k3.scale(h)));
            let candidate = normalized(
                &v + (k1.scale(1.0) + k2.scale(2.0) + k3.scale(2.0) + k4.scale(1.0))
                    .scale(h / 6.0),
            );
            let e_new = eta(spec, &ProjectivePoint::from_unit(candidate.clone()));
            if e_new >= e - 1e-15 || h < 1e-12 {
                v = candidate;
                t += h;
                h = (h * 1.2).min(1.0);
                break;
            }
            h *= 0.5;
        }
        steps += 1;
    }

    let limit = ProjectivePoint::from_unit(v);
    let beta_limit = moment_value(spec, &limit);
    let eta_limit = beta_limit.norm_squared();
    Trajectory {
        samples,
        limit,
        beta_limit,
        eta_limit,
        converged,
    steps,
    }
}

#[derive(Debug, Clone)]
pub struct Certificate {
    /// Index of the matched weight vertex.
    pub vertex_index: usize,
    /// The matched vertex in torus input coordinates.
    pub vertex: RVec,
    /// Largest gap between the sorted momentum spectrum at the limit and
    /// the spectrum of the vertex's dual matrix.
    pub spectrum_error: f64,
    /// Gap between the limit energy and the vertex's dual pairing.
    pub eta_gap: f64,
    /// The limit passes the maximal-stratum classification for its own
    /// momentum direction.
    pub classified_max: bool,
    /// Largest velocity among momentum-neutral symmetric directions.
    pub stabilizer_residual: f64,
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.partial_cmp(a).expect("finite spectrum"));
    v
}

/// Certify a converged limit as an extreme-value critical point.
pub fn extreme_certificate(
    spec: &RepresentationSpec,
    traj: &Trajectory,
) -> Result<Certificate, FlowError> {
    if !traj.converged {
        let residual = velocity(spec, traj.limit.vector()).norm();
        return Err(FlowError::NotConverged {
            steps: traj.steps,
            residual,
        });
    }

    // Clause one: the momentum spectrum at the limit matches the dual
    // matrix of some weight vertex. The dual matrix of a vertex sigma is
    // the torus combination with Gram-corrected coefficients, the unique
    // torus element whose pairing computes <sigma, .>.
    let b_lim = moment_matrix(spec, &traj.limit);
    let spec_lim = sorted_desc(
        b_lim
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .collect(),
    );
    let weights = crate::rep::weight_decomposition(spec);
    let weight_points: Vec<RVec> = weights.iter().map(|w| w.weight.clone()).collect();
    let poly = crate::polytope::Polytope::from_points(&weight_points)
        .map_err(|_| FlowError::CertificateFailure { clause: "spectrum" })?;
    let r = spec.a_rank();
    let gram = RMat::from_fn(r, r, |i, j| {
        crate::linalg::trace_inner(&spec.a_input[i], &spec.a_input[j])
    });
    let gram_inv = gram.try_inverse().expect("torus Gram matrix is invertible");

    let mut best: Option<(usize, f64, f64)> = None;
    for &vi in &poly.vertices {
        let sigma = &poly.points[vi];
        let coeff = &gram_inv * sigma;
        let mut m = crate::linalg::CMat::zeros(spec.dim_v, spec.dim_v);
        for j in 0..r {
            m += spec.a_input[j].scale(coeff[j]);
        }
        let spec_sigma = sorted_desc(m.symmetric_eigen().eigenvalues.iter().cloned().collect());
        let err = spec_lim
            .iter()
            .zip(spec_sigma.iter())
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
        let pairing = sigma.dot(&coeff);
        let eta_gap = (traj.eta_limit - pairing).abs();
        if best.as_ref().map_or(true, |(_, e, _)| err < *e) {
            best = Some((vi, err, eta_gap));
        }
    }
    let (vertex_index, spectrum_error, eta_gap) =
        best.ok_or(FlowError::CertificateFailure { clause: "spectrum" })?;
    if spectrum_error > tol::CERTIFICATE_VERTEX {
        return Err(FlowError::CertificateFailure { clause: "spectrum" });
    }

    // Clause two: the limit sits on the maximal stratum of its own
    // momentum direction.
    let grading = build_grading(spec, &traj.beta_limit);
    let record = classify_point(spec, &grading, &traj.limit);
    let classified_max = record.fixed && record.in_beta_minus_max;
    if !classified_max {
        return Err(FlowError::CertificateFailure {
            clause: "classification",
        });
    }

    // Clause three: every momentum-neutral symmetric direction fixes the
    // limit. Neutral symmetric directions are centralizer combinations
    // with no antisymmetric component.
    let stabilizer_residual = {
        let g_zero = &grading.g_zero;
        let k_rows = spec.basis.k_indices.len();
        let combos: Vec<RVec> = if g_zero.ncols() == 0 {
            Vec::new()
        } else if k_rows == 0 {
            (0..g_zero.ncols()).map(|j| g_zero.column(j).into_owned()).collect()
        } else {
            let k_part = RMat::from_fn(k_rows, g_zero.ncols(), |r, c| {
                g_zero[(spec.basis.k_indices[r], c)]
            });
            let svd = k_part.svd(false, true);
            let vt = svd.v_t.as_ref().expect("right singular vectors requested");
            let mut out = Vec::new();
            for (i, &s) in svd.singular_values.iter().enumerate() {
                if s <= 1e-9 {
                    let combo: RVec = vt.row(i).transpose();
                    out.push(g_zero * combo);
                }
            }
            for i in svd.singular_values.len()..g_zero.ncols() {
                let combo: RVec = vt.row(i).transpose();
                out.push(g_zero * combo);
            }
            out
        };
        let mut residual = 0.0_f64;
        for coords in &combos {
            let m = spec.basis.matrix_of(coords);
            let field = crate::moment::vector_field_of_matrix(&m, &traj.limit);
            residual = residual.max(field.norm());
        }
        residual
    };
    if stabilizer_residual > tol::CERTIFICATE_KILL {
        return Err(FlowError::CertificateFailure { clause: "stabilizer" });
    }

    Ok(Certificate {
        vertex_index,
        vertex: poly.points[vertex_index].clone(),
        spectrum_error,
        eta_gap,
        classified_max,
        stabilizer_residual,
    })
}

/// Indices of the trajectories whose limit energy is within certification
/// distance of the batch maximum.
pub fn batch_maximizers(trajectories: &[Trajectory]) -> Vec<usize> {
    let max_eta = trajectories
        .iter()
        .fold(f64::NEG_INFINITY, |m, t| m.max(t.eta_limit));
    trajectories
        .iter()
        .enumerate()
        .filter(|(_, t)| t.eta_limit >= max_eta - tol::CERTIFICATE_VERTEX)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::reps;
    use crate::sample::Sampler;
    use nalgebra::DVector;

    fn point(coords: &[C64]) -> ProjectivePoint {
        ProjectivePoint::new(DVector::from_vec(coords.to_vec()))
    }

    fn cx(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn top_weight_line_is_already_the_limit() {
        let spec = reps::sl2_sym2();
        let x = point(&[cx(1.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0)]);
        let traj = flow_eta(&spec, &x, &FlowParams::default());
        assert!(traj.converged);
        assert_eq!(traj.steps, 0);
        assert!(traj.limit.distance(&x) < 1e-12);
        let cert = extreme_certificate(&spec, &traj).unwrap();
        assert_eq!(cert.vertex.len(), 1);
        assert!((cert.vertex[0] - 2.0).abs() < tol::CERTIFICATE_VERTEX);
        assert!(cert.eta_gap < 1e-9);
    }

    #[test]
    fn saddle_line_converges_but_fails_the_spectrum_clause() {
        let spec = reps::sl2_sym2();
        let x = point(&[cx(0.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0)]);
        let traj = flow_eta(&spec, &x, &FlowParams::default());
        assert!(traj.converged);
        assert!(traj.eta_limit.abs() < 1e-12);
        match extreme_certificate(&spec, &traj) {
            Err(FlowError::CertificateFailure { clause }) => assert_eq!(clause, "spectrum"),
            other => panic!("expected spectrum failure, got {other:?}"),
        }
    }

    #[test]
    fn generic_starts_reach_the_energy_maximum() {
        let spec = reps::sl2_sym2();
        let x = point(&[cx(0.9, 0.1), cx(0.3, -0.2), cx(0.2, 0.1)]);
        let traj = flow_eta(&spec, &x, &FlowParams::default());
        assert!(traj.converged, "velocity stayed above the stop tolerance");
        assert!((traj.eta_limit - 0.5).abs() < 1e-7, "eta limit {}", traj.eta_limit);
        let cert = extreme_certificate(&spec, &traj).unwrap();
        assert!((cert.vertex[0].abs() - 2.0).abs() < tol::CERTIFICATE_VERTEX);
        assert!(cert.classified_max);
        assert!(cert.stabilizer_residual < tol::CERTIFICATE_KILL);
    }

    #[test]
    fn eta_never_decreases_along_trajectories() {
        let spec = reps::sl2_sym2();
        let mut s = Sampler::new(41);
        for _ in 0..10 {
            let x = ProjectivePoint::new(s.unit_complex_vector(3));
            let traj = flow_eta(&spec, &x, &FlowParams::default());
            for pair in traj.samples.windows(2) {
                assert!(pair[1].eta >= pair[0].eta - tol::ETA_SLACK);
            }
            assert!(traj.converged);
        }
    }

    #[test]
    fn torus_weights_flow_to_an_extreme_line() {
        let spec = reps::torus_p2();
        let x = point(&[cx(0.8, 0.0), cx(0.5, 0.1), cx(0.3, -0.2)]);
        let traj = flow_eta(&spec, &x, &FlowParams::default());
        assert!(traj.converged);
        let cert = extreme_certificate(&spec, &traj).unwrap();
        assert!(cert.spectrum_error < tol::CERTIFICATE_VERTEX);
        let hits: Vec<usize> = (0..3)
            .filter(|&i| {
                let mut e = DVector::from_element(3, cx(0.0, 0.0));
                e[i] = cx(1.0, 0.0);
                traj.limit.distance(&ProjectivePoint::new(e)) < 1e-6
            })
            .collect();
        assert_eq!(hits.len(), 1, "limit is one weight line");
    }

    #[test]
    fn exhausted_budgets_are_reported_as_not_converged() {
        let spec = reps::sl2_sym2();
        let x = point(&[cx(0.6, 0.0), cx(0.6, 0.1), cx(0.4, -0.3)]);
        let params = FlowParams {
            max_steps: 3,
            ..FlowParams::default()
        };
        let traj = flow_eta(&spec, &x, &params);
        assert!(!traj.converged);
        assert!(matches!(
            extreme_certificate(&spec, &traj),
            Err(FlowError::NotConverged { .. })
        ));
    }

    #[test]
    fn batch_maximizers_pick_the_top_energy_trajectories() {
        let spec = reps::sl2_sym2();
        let starts = [
            point(&[cx(1.0, 0.0), cx(0.1, 0.0), cx(0.1, 0.0)]),
            point(&[cx(0.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0)]),
        ];
        let trajs: Vec<Trajectory> = starts
            .iter()
            .map(|x| flow_eta(&spec, x, &FlowParams::default()))
            .collect();
        let winners = batch_maximizers(&trajs);
        assert_eq!(winners, vec![0]);
    }
}
