//! Invertible slice charts around maximal-momentum base points.
//!
//! At a base point `[w0]` on the top eigenlevel of `rho(beta)` the cell of
//! points with nonvanishing `w0`-coefficient is parameterized by
//! `(n, f, u) -> [exp(rho(n)) (w0 + u + f)]`: `n` ranges over the strictly
//! negative algebra grade, `f` over the trace-orthogonal complement of the
//! orbit directions inside the strictly lower module levels, and `u` over
//! the base displacement inside the top level. The exponential only moves
//! mass downward through the levels, so the inverse is a triangular solve,
//! one module level at a time.
//!
//! The `n`-directions are rescaled to standard-triple normalization
//! (`[[-theta(xi), xi], xi] = -2 xi` whenever that bracket relation is
//! attainable), which pins the chart coordinates to the classical symbolic
//! formulas; on quadratics the unipotent flow of the lowering direction
//! reads `exp(s f) x^2 = x^2 + 2s xy + s^2 y^2` coefficient for coefficient.

use crate::linalg::{
    expm, lstsq, nilpotent_exp, nilpotent_log, orthonormal_complement, re_inner, realify_vec,
    CMat, CVec, RMat, RVec, C64,
};
use crate::moment::{vector_field_of_matrix, ProjectivePoint};
use crate::rep::{lie_closure, RepresentationSpec};
use crate::sample::Sampler;
use crate::strata::{build_grading, classify_point, BetaGrading, VLevel};
use crate::tol;
use crate::verify::CheckReport;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum ChartError {
    /// The base point is not a fixed point on the top eigenlevel.
    #[error("base point is not a maximal fixed point of the grading")]
    NotMaxPoint,
    /// The orbit map of the negative radical is rank deficient at the base
    /// point (or the radical is empty), so no slice chart exists there.
    #[error("orbit map of the negative radical is degenerate; smallest singular value {sigma_min:.3e}")]
    DegenerateOrbitMap { sigma_min: f64 },
    /// The point has (numerically) no component along the base line.
    #[error("point lies outside the chart cell; base coefficient {coefficient:.3e}")]
    OutsideCell { coefficient: f64 },
    /// A level solve lost rank, which contradicts the chart invariants.
    #[error("graded level solve became singular; smallest singular value {sigma_min:.3e}")]
    SolveSingular { sigma_min: f64 },
    /// The designated module summand admits a proper invariant subspace.
    #[error("subspace is reducible; commutant dimension {commutant_dim}")]
    NotIrreducible { commutant_dim: usize },
    /// A summand handed to the reducible-module chart is not invariant.
    #[error("summand is not invariant under the action; residual {residual:.3e}")]
    NotInvariant { residual: f64 },
}

impl ChartError {
    pub fn code(&self) -> &'static str {
        match self {
            ChartError::NotMaxPoint => "not_max_point",
            ChartError::DegenerateOrbitMap { .. } => "degenerate_orbit_map",
            ChartError::OutsideCell { .. } => "outside_cell",
            ChartError::SolveSingular { .. } => "solve_singular",
            ChartError::NotIrreducible { .. } => "not_irreducible",
            ChartError::NotInvariant { .. } => "not_invariant",
        }
    }
}

/// One unipotent direction: algebra coordinates, its represented matrix,
/// and the grade depth it descends by.
#[derive(Debug, Clone)]
pub struct NDir {
    pub coords: RVec,
    pub rho: CMat,
    pub depth: f64,
}

/// One slice direction: an ambient vector, the module level it lives on,
/// and whether it came from the designated orthogonal complement summand
/// of a reducible module.
#[derive(Debug, Clone)]
pub struct FDir {
    pub vec: CVec,
    pub level: usize,
    pub in_complement: bool,
}

/// Chart coordinates: real vectors over the unipotent directions, the
/// slice directions, and the base displacement directions.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartCoords {
    pub n: RVec,
    pub f: RVec,
    pub u: RVec,
}

/// A unipotent group element of the negative radical: nilpotent generator
/// and its exact polynomial exponential.
#[derive(Debug, Clone)]
pub struct UnipotentElement {
    pub n: CMat,
    pub g: CMat,
}

/// Slice chart at a maximal base point. Immutable once built; evaluations
/// are pure.
#[derive(Debug, Clone)]
pub struct LstChart {
    pub spec: RepresentationSpec,
    pub grading: BetaGrading,
    pub w0: ProjectivePoint,
    /// Unipotent directions, shallowest depth first.
    pub n_basis: Vec<NDir>,
    /// Smallest singular value of the orbit map at the base point.
    pub orbit_sigma_min: f64,
    /// Real basis of the base displacement space inside the top level,
    /// interleaved as pairs (U, iU).
    pub u_basis: Vec<CVec>,
    /// Real slice basis, by descending module level.
    pub f_basis: Vec<FDir>,
}

fn sign_canonical(v: &RVec) -> RVec {
    let mut best = 0;
    for i in 0..v.len() {
        if v[i].abs() > v[best].abs() + 1e-14 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        -v.clone()
    } else {
        v.clone()
    }
}

/// Rescale a unit negative-grade direction so that the standard-triple
/// relation `[[-theta(xi), xi], xi] = -2 xi` holds when attainable. Pins
/// the unipotent coordinate scale to the classical symbolic formulas.
fn triple_normalized(spec: &RepresentationSpec, xi_hat: &RVec) -> RVec {
    let minus_theta = -spec.basis.theta_coords(xi_hat);
    let h = spec.basis.bracket_coords(&minus_theta, xi_hat);
    let w = spec.basis.bracket_coords(&h, xi_hat);
    let lambda = w.dot(xi_hat);
    let resid = (&w - xi_hat * lambda).norm();
    if resid < 1e-8 && lambda < -1e-8 {
        xi_hat * (-2.0 / lambda).sqrt()
    } else {
        xi_hat.clone()
    }
}

fn level_component(level: &VLevel, v: &CVec) -> CVec {
    &level.basis * (level.basis.adjoint() * v)
}

fn build_core(
    spec: &RepresentationSpec,
    grading: &BetaGrading,
    w0: ProjectivePoint,
    complement_cols: Option<&CMat>,
) -> Result<LstChart, ChartError> {
    // Unipotent directions from the negative algebra levels, shallowest
    // first, each rescaled to triple normalization.
    let mut n_basis: Vec<NDir> = Vec::new();
    for l in &grading.g_levels {
        if l.value >= -tol::CLUSTER_GAP {
            continue;
        }
        for c in 0..l.coords.ncols() {
            let col: RVec = l.coords.column(c).into_owned();
            let coords = triple_normalized(spec, &sign_canonical(&col));
            let rho = spec.basis.matrix_of(&coords);
            n_basis.push(NDir {
                coords,
                rho,
                depth: -l.value,
            });
        }
    }
    n_basis.sort_by(|a, b| a.depth.partial_cmp(&b.depth).expect("finite depths"));

    // Lemma-style rank requirement on the orbit map at the base point; an
    // empty radical is degenerate by convention.
    if n_basis.is_empty() {
        return Err(ChartError::DegenerateOrbitMap { sigma_min: 0.0 });
    }
    let v0 = w0.vector().clone();
    let orbit_mat = {
        let cols: Vec<RVec> = n_basis.iter().map(|d| realify_vec(&(&d.rho * &v0))).collect();
        RMat::from_fn(cols[0].len(), cols.len(), |r, c| cols[c][r])
    };
    let orbit_sigma_min = crate::linalg::sigma_min(&orbit_mat);
    if orbit_sigma_min < tol::ORBIT_RANK {
        return Err(ChartError::DegenerateOrbitMap {
            sigma_min: orbit_sigma_min,
        });
    }

    // Base displacement directions: the complex complement of w0 inside its
    // own (top) level, realified as pairs (U, iU).
    let top = &grading.v_levels[0];
    let c0 = top.basis.adjoint() * &v0;
    if (c0.norm() - 1.0).abs() > 1e-9 {
        return Err(ChartError::NotMaxPoint);
    }
    let mut u_basis: Vec<CVec> = Vec::new();
    for col in orthonormal_complement(&c0) {
        let ambient = &top.basis * col;
        u_basis.push(ambient.clone());
        u_basis.push(ambient * C64::new(0.0, 1.0));
    }

    // Slice directions: per strictly lower level, the real orthogonal
    // complement of the orbit directions.
    let orbit_vecs: Vec<CVec> = {
        let mut out: Vec<CVec> = Vec::new();
        for d in &n_basis {
            let mut v = &d.rho * &v0;
            for u in &out {
                let c = re_inner(u, &v);
                v -= u * C64::new(c, 0.0);
            }
            let n = v.norm();
            if n > 1e-12 {
                out.push(v.scale(1.0 / n));
            }
        }
        out
    };
    let is_complement = |v: &CVec| -> bool {
        match complement_cols {
            Some(q) if q.ncols() > 0 => (q.adjoint() * v).norm() > 0.5,
            _ => false,
        }
    };
    let mut f_basis: Vec<FDir> = Vec::new();
    for (li, level) in grading.v_levels.iter().enumerate().skip(1) {
        for c in 0..level.basis.ncols() {
            let q: CVec = level.basis.column(c).into_owned();
            for cand in [q.clone(), &q * C64::new(0.0, 1.0)] {
                let mut v = cand;
                for _ in 0..2 {
                    for o in &orbit_vecs {
                        let s = re_inner(o, &v);
                        v -= o * C64::new(s, 0.0);
                    }
                    for f in &f_basis {
                        let s = re_inner(&f.vec, &v);
                        v -= &f.vec * C64::new(s, 0.0);
                    }
                }
                let n = v.norm();
                if n > 1e-9 {
                    let v = v.scale(1.0 / n);
                    let in_complement = is_complement(&v);
                    f_basis.push(FDir {
                        vec: v,
                        level: li,
                        in_complement,
                    });
                }
            }
        }
    }

    // Dimension bookkeeping: orbit plus slice fills the lower levels.
    let lower_real_dim: usize = grading.v_levels.iter().skip(1).map(|l| 2 * l.basis.ncols()).sum();
    debug_assert_eq!(n_basis.len() + f_basis.len(), lower_real_dim);

    Ok(LstChart {
        spec: spec.clone(),
        grading: grading.clone(),
        w0,
        n_basis,
        orbit_sigma_min,
        u_basis,
        f_basis,
    })
}

/// Build the slice chart at a maximal fixed point `x` of the grading.
pub fn build_chart(
    spec: &RepresentationSpec,
    grading: &BetaGrading,
    x: &ProjectivePoint,
) -> Result<LstChart, ChartError> {
    if grading.r_minus.ncols() == 0 {
        return Err(ChartError::DegenerateOrbitMap { sigma_min: 0.0 });
    }
    let record = classify_point(spec, grading, x);
    if !record.fixed || !record.in_beta_minus_max {
        return Err(ChartError::NotMaxPoint);
    }
    build_core(spec, grading, x.clone(), None)
}

fn orthonormalize(cols: &CMat) -> CMat {
    let mut out: Vec<CVec> = Vec::new();
    for j in 0..cols.ncols() {
        let mut v: CVec = cols.column(j).into_owned();
        for _ in 0..2 {
            for u in &out {
                let c = u.dotc(&v);
                v -= u * c;
            }
        }
        let n = v.norm();
        if n > 1e-10 {
            out.push(v.scale(1.0 / n));
        }
    }
    let mut q = CMat::zeros(cols.nrows(), out.len());
    for (j, c) in out.iter().enumerate() {
        q.set_column(j, c);
    }
    q
}

fn invariance_residual(spec: &RepresentationSpec, q: &CMat) -> f64 {
    let mut residual = 0.0_f64;
    for e in &spec.basis.elements {
        let image = e * q;
        let out = &image - q * (q.adjoint() * &image);
        residual = residual.max(out.norm());
    }
    residual
}

/// Complex dimension of the commutant of a matrix family, via the
/// realified nullspace of `C -> [E, C]` stacked over the family.
fn commutant_dim(family: &[CMat]) -> usize {
    let k = family[0].nrows();
    let mut rows: Vec<RVec> = Vec::new();
    for e in family {
        // L(C) = E C - C E, realified row block per matrix entry.
        for a in 0..k {
            for b in 0..k {
                let mut re_row = RVec::zeros(2 * k * k);
                let mut im_row = RVec::zeros(2 * k * k);
                for p in 0..k {
                    for q in 0..k {
                        // coefficient of C[p][q] in (EC - CE)[a][b]
                        let mut coeff = C64::new(0.0, 0.0);
                        if q == b {
                            coeff += e[(a, p)];
                        }
                        if p == a {
                            coeff -= e[(q, b)];
                        }
                        let idx = q * k + p;
                        re_row[idx] += coeff.re;
                        re_row[k * k + idx] += -coeff.im;
                        im_row[idx] += coeff.im;
                        im_row[k * k + idx] += coeff.re;
                    }
                }
                rows.push(re_row);
                rows.push(im_row);
            }
        }
    }
    let m = RMat::from_fn(rows.len(), 2 * k * k, |r, c| rows[r][c]);
    let svd = m.svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(1.0_f64, f64::max);
    let real_null = 2 * k * k
        - svd
            .singular_values
            .iter()
            .filter(|&&s| s > 1e-9 * smax)
            .count();
    real_null / 2
}

/// Chart for a module split as `W` plus an invariant orthogonal complement:
/// the slice directions absorb the whole complement, so the chart covers
/// everything with nonzero coefficient along the highest weight line of
/// `W`. The grading direction is derived from the top weight of `W` and
/// its exposing vector.
pub fn blv_chart(
    spec: &RepresentationSpec,
    w_cols: &CMat,
    u_complement: &CMat,
) -> Result<LstChart, ChartError> {
    let qw = orthonormalize(w_cols);
    let qu = orthonormalize(u_complement);
    assert_eq!(
        qw.ncols() + qu.ncols(),
        spec.dim_v,
        "summands must fill the module"
    );
    if qu.ncols() > 0 {
        let overlap = (qw.adjoint() * &qu).norm();
        assert!(overlap < 1e-9, "summands must be orthogonal");
    }
    for q in [&qw, &qu] {
        if q.ncols() == 0 {
            continue;
        }
        let residual = invariance_residual(spec, q);
        if residual > tol::INVARIANCE {
            return Err(ChartError::NotInvariant { residual });
        }
    }

    // Irreducibility of W: the projected action generates an algebra whose
    // commutant is the scalars.
    let projected: Vec<CMat> = spec
        .basis
        .elements
        .iter()
        .map(|e| qw.adjoint() * (e * &qw))
        .collect();
    let closure = lie_closure(&projected).map_err(|_| ChartError::NotIrreducible {
        commutant_dim: usize::MAX,
    })?;
    let family: Vec<CMat> = closure.elements.clone();
    let cdim = commutant_dim(&family);
    if cdim != 1 {
        return Err(ChartError::NotIrreducible { commutant_dim: cdim });
    }

    // Grading direction: exposing vector of the lexicographically largest
    // weight vertex of W's weight polytope.
    let beta_p = exposing_direction(spec, &qw)?;
    let grading = build_grading(spec, &beta_p);

    // Base point: the top level restricted to W must be a line, and the
    // ambient top level must coincide with it for the cell to fiber over
    // the base.
    let top = &grading.v_levels[0];
    let in_w = qw.adjoint() * &top.basis;
    let top_w_rank = in_w.svd(false, false).singular_values.iter().filter(|&&s| s > 1e-8).count();
    if top_w_rank != top.basis.ncols() || top.basis.ncols() != 1 {
        return Err(ChartError::NotMaxPoint);
    }
    let w0 = ProjectivePoint::new(top.basis.column(0).into_owned());

    // Refine every module level so W-columns come before complement
    // columns; the slice basis then splits cleanly.
    let mut refined = grading.clone();
    for level in refined.v_levels.iter_mut() {
        let mut cols = CMat::zeros(spec.dim_v, 0);
        for part in [&qw, &qu] {
            if part.ncols() == 0 {
                continue;
            }
            let projected = part * (part.adjoint() * &level.basis);
            let ortho = orthonormalize(&projected);
            let old = cols;
            cols = CMat::zeros(spec.dim_v, old.ncols() + ortho.ncols());
            cols.view_mut((0, 0), (spec.dim_v, old.ncols())).copy_from(&old);
            cols.view_mut((0, old.ncols()), (spec.dim_v, ortho.ncols()))
                .copy_from(&ortho);
        }
        assert_eq!(cols.ncols(), level.basis.ncols(), "level refinement must preserve dimension");
        level.basis = cols;
    }

    build_core(spec, &refined, w0, Some(&qu))
}

/// Exposing direction (orthonormal Hermitian coordinates) for the largest
/// weight of the subspace spanned by `q`: lexicographically largest vertex
/// of the weight polytope, through its exposing vector.
fn exposing_direction(spec: &RepresentationSpec, q: &CMat) -> Result<RVec, ChartError> {
    let weights = crate::rep::weight_decomposition(spec);
    let mut present: Vec<RVec> = Vec::new();
    for ws in &weights {
        let overlap = ws
            .basis
            .iter()
            .map(|b| (q.adjoint() * b).norm())
            .fold(0.0_f64, f64::max);
        if overlap > 1e-8 {
            present.push(ws.weight.clone());
        }
    }
    let poly = crate::polytope::Polytope::from_points(&present).map_err(|_| {
        ChartError::DegenerateOrbitMap { sigma_min: 0.0 }
    })?;
    let lex_max = *poly
        .vertices
        .iter()
        .max_by(|&&a, &&b| {
            let pa = &poly.points[a];
            let pb = &poly.points[b];
            for i in 0..pa.len() {
                match pa[i].partial_cmp(&pb[i]).expect("finite weights") {
                    std::cmp::Ordering::Equal => continue,
                    o => return o,
                }
            }
            std::cmp::Ordering::Equal
        })
        .expect("polytope has vertices");
    let beta_a = poly
        .exposing_vector(lex_max)
        .map_err(|_| ChartError::DegenerateOrbitMap { sigma_min: 0.0 })?;
    Ok(spec.input_a_to_p(&beta_a))
}

impl LstChart {
    pub fn n_dim(&self) -> usize {
        self.n_basis.len()
    }

    pub fn f_dim(&self) -> usize {
        self.f_basis.len()
    }

    pub fn u_dim(&self) -> usize {
        self.u_basis.len()
    }

    fn nilpotency_degree(&self) -> usize {
        self.grading.v_levels.len()
    }

    /// The represented nilpotent generator of given coordinates.
    pub fn n_matrix(&self, n: &RVec) -> CMat {
        assert_eq!(n.len(), self.n_dim());
        let dim = self.spec.dim_v;
        let mut m = CMat::zeros(dim, dim);
        for (i, d) in self.n_basis.iter().enumerate() {
            m += d.rho.scale(n[i]);
        }
        m
    }

    /// Unipotent element of the negative radical with the given
    /// coordinates; the exponential is the exact finite polynomial.
    pub fn unipotent(&self, n: &RVec) -> UnipotentElement {
        let nm = self.n_matrix(n);
        let g = nilpotent_exp(&nm, self.nilpotency_degree())
            .expect("generator is nilpotent by the grading");
        UnipotentElement { n: nm, g }
    }

    fn slice_vector(&self, f: &RVec, u: &RVec) -> CVec {
        assert_eq!(f.len(), self.f_dim());
        assert_eq!(u.len(), self.u_dim());
        let mut w = self.w0.vector().clone();
        for (k, ub) in self.u_basis.iter().enumerate() {
            w += ub * C64::new(u[k], 0.0);
        }
        for (j, fd) in self.f_basis.iter().enumerate() {
            w += &fd.vec * C64::new(f[j], 0.0);
        }
        w
    }

    /// Evaluate the chart map at coordinates `(n, f, u)`.
    pub fn phi_forward(&self, coords: &ChartCoords) -> ProjectivePoint {
        let g = self.unipotent(&coords.n).g;
        ProjectivePoint::new(&g * self.slice_vector(&coords.f, &coords.u))
    }

    /// Invert the chart map by the graded triangular solve: normalize the
    /// base coefficient, read `u` off the top level, then walk the lower
    /// levels in descending order, solving for the unipotent grade and the
    /// slice remainder a level at a time.
    pub fn phi_inverse(&self, z: &ProjectivePoint) -> Result<ChartCoords, ChartError> {
        let v = z.vector();
        let alpha = self.w0.vector().dotc(v);
        if alpha.norm() < tol::TOP_COEFF {
            return Err(ChartError::OutsideCell {
                coefficient: alpha.norm(),
            });
        }
        let zs = v * (C64::new(1.0, 0.0) / alpha);

        let top = &self.grading.v_levels[0];
        let u_comp = level_component(top, &zs) - self.w0.vector();
        let mut u = RVec::zeros(self.u_dim());
        for (k, ub) in self.u_basis.iter().enumerate() {
            u[k] = re_inner(ub, &u_comp);
        }

        let w = {
            let mut w = self.w0.vector().clone();
            w += &u_comp;
            w
        };
        let top_value = self.grading.v_levels[0].value;
        let mut n = RVec::zeros(self.n_dim());
        let mut f = RVec::zeros(self.f_dim());

        for li in 1..self.grading.v_levels.len() {
            let level = &self.grading.v_levels[li];
            let gap = top_value - level.value;
            let current = {
                let g = self.unipotent(&n).g;
                &g * self.slice_vector(&f, &u)
            };
            let rhs = level_component(level, &(&zs - &current));

            let n_ids: Vec<usize> = (0..self.n_dim())
                .filter(|&i| (self.n_basis[i].depth - gap).abs() <= 10.0 * tol::CLUSTER_GAP)
                .collect();
            let f_ids: Vec<usize> = (0..self.f_dim())
                .filter(|&j| self.f_basis[j].level == li)
                .collect();
            let mut cols: Vec<RVec> = Vec::with_capacity(n_ids.len() + f_ids.len());
            for &i in &n_ids {
                cols.push(realify_vec(&(&self.n_basis[i].rho * &w)));
            }
            for &j in &f_ids {
                cols.push(realify_vec(&self.f_basis[j].vec));
            }
            if cols.is_empty() {
                if rhs.norm() > tol::GEOMETRY {
                    return Err(ChartError::SolveSingular { sigma_min: 0.0 });
                }
                continue;
            }
            let a = RMat::from_fn(cols[0].len(), cols.len(), |r, c| cols[c][r]);
            let sol = lstsq(&a, &realify_vec(&rhs));
            if sol.sigma_min < tol::ORBIT_RANK {
                return Err(ChartError::SolveSingular {
                    sigma_min: sol.sigma_min,
                });
            }
            for (pos, &i) in n_ids.iter().enumerate() {
                n[i] = sol.solution[pos];
            }
            for (pos, &j) in f_ids.iter().enumerate() {
                f[j] = sol.solution[n_ids.len() + pos];
            }
        }

        let coords = ChartCoords { n, f, u };
        let recon = self.phi_forward(&coords);
        let defect = recon.distance(z);
        if defect > 1e-6 {
            return Err(ChartError::SolveSingular { sigma_min: defect });
        }
        Ok(coords)
    }

    /// Slice coordinates of a cell point: the inverse with the unipotent
    /// part dropped. Constant along orbits of the negative radical.
    pub fn quotient_project(&self, z: &ProjectivePoint) -> Result<(RVec, RVec), ChartError> {
        let coords = self.phi_inverse(z)?;
        Ok((coords.f, coords.u))
    }

    /// Base point determined by a displacement `u` alone.
    pub fn base_of(&self, u: &RVec) -> ProjectivePoint {
        let mut w = self.w0.vector().clone();
        for (k, ub) in self.u_basis.iter().enumerate() {
            w += ub * C64::new(u[k], 0.0);
        }
        ProjectivePoint::new(w)
    }
}

fn inf_norm(c: &ChartCoords) -> f64 {
    c.n.iter()
        .chain(c.f.iter())
        .chain(c.u.iter())
        .fold(0.0_f64, |m, &x| m.max(x.abs()))
}

/// Freeness and properness battery for the negative-radical action on the
/// chart cell. Freeness: a sampled unipotent with coordinates in `[-2, 2]`
/// and norm above `1e-3` moves every sampled cell point by more than
/// `1e-8`. Properness proxy: along diverging unipotent rays the image
/// keeps a bounded-away base coefficient whenever its chart coordinates
/// remain in a fixed compact box. The reported `max_error` carries the
/// smallest separation observed.
pub fn verify_freeness(
    spec: &RepresentationSpec,
    grading: &BetaGrading,
    samples: usize,
    seed: u64,
) -> CheckReport {
    let base = match grading
        .v_levels
        .first()
        .map(|l| ProjectivePoint::new(l.basis.column(0).into_owned()))
    {
        Some(p) => p,
        None => unreachable!("gradings always have at least one level"),
    };
    let chart = match build_chart(spec, grading, &base) {
        Ok(c) => c,
        Err(_) => {
            // Empty or degenerate radical: the action battery is vacuous.
            return CheckReport {
                check: "freeness".into(),
                samples: 0,
                seed,
                max_error: 0.0,
                violations: 0,
            };
        }
    };
    let mut s = Sampler::new(seed);
    let mut min_sep = f64::INFINITY;
    let mut violations = 0;
    for k in 0..samples {
        let coords = ChartCoords {
            n: s.box_vector(chart.n_dim(), 2.0),
            f: s.box_vector(chart.f_dim(), 2.0),
            u: s.box_vector(chart.u_dim(), 2.0),
        };
        let z = chart.phi_forward(&coords);
        let mut g_coords = s.box_vector(chart.n_dim(), 2.0);
        while g_coords.norm() <= 1e-3 {
            g_coords = s.box_vector(chart.n_dim(), 2.0);
        }
        let g = chart.unipotent(&g_coords).g;
        let moved = ProjectivePoint::new(&g * z.vector());
        let sep = moved.distance(&z);
        min_sep = min_sep.min(sep);
        if sep <= tol::FREENESS_SEPARATION {
            violations += 1;
        }

        // Properness proxy on a diverging ray, every few samples.
        if k % 25 == 0 {
            let dir = {
                let mut d = s.box_vector(chart.n_dim(), 1.0);
                while d.norm() < 0.2 {
                    d = s.box_vector(chart.n_dim(), 1.0);
                }
                d
            };
            for step in 1..=8 {
                let ray = &dir * (4.0 * step as f64);
                let gk = chart.unipotent(&ray).g;
                let image = ProjectivePoint::new(&gk * z.vector());
                let coeff = chart.w0.vector().dotc(image.vector()).norm();
                if coeff < 1e-3 {
                    if let Ok(c) = chart.phi_inverse(&image) {
                        if inf_norm(&c) <= 2.5 {
                            violations += 1;
                        }
                    }
                }
            }
        }
    }
    CheckReport {
        check: "freeness".into(),
        samples,
        seed,
        max_error: if min_sep.is_finite() { min_sep } else { 0.0 },
        violations,
    }
}

/// Estimate the ineffectivity directions inside the centralizer: the
/// kernel of `xi -> xi_X` sampled over the base cell.
fn ineffectivity_dirs(chart: &LstChart, s: &mut Sampler) -> Vec<RVec> {
    let g_zero = &chart.grading.g_zero;
    let k0 = g_zero.ncols();
    if k0 == 0 {
        return Vec::new();
    }
    let sample_count = 6;
    let points: Vec<ProjectivePoint> = (0..sample_count)
        .map(|_| {
            let top = &chart.grading.v_levels[0];
            let c = s.unit_complex_vector(top.basis.ncols());
            ProjectivePoint::new(&top.basis * c)
        })
        .collect();
    let mut cols: Vec<RVec> = Vec::new();
    for j in 0..k0 {
        let coords: RVec = g_zero.column(j).into_owned();
        let m = chart.spec.basis.matrix_of(&coords);
        let mut stacked = Vec::new();
        for p in &points {
            let t = vector_field_of_matrix(&m, p).t;
            stacked.push(realify_vec(&t));
        }
        let total: usize = stacked.iter().map(|v| v.len()).sum();
        let mut col = RVec::zeros(total);
        let mut at = 0;
        for piece in stacked {
            col.rows_mut(at, piece.len()).copy_from(&piece);
            at += piece.len();
        }
        cols.push(col);
    }
    let a = RMat::from_fn(cols[0].len(), k0, |r, c| cols[c][r]);
    let svd = a.svd(false, true);
    let vt = svd.v_t.as_ref().expect("right singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let mut out = Vec::new();
    for (i, &sv) in svd.singular_values.iter().enumerate() {
        if sv <= 1e-8 * smax.max(1.0) {
            let combo: RVec = vt.row(i).transpose();
            out.push(g_zero * combo);
        }
    }
    out
}

/// Equivariance battery: for sampled unipotents `r, g` and centralizer
/// elements `h` acting trivially on the base cell, the chart intertwines
/// the twisted action on coordinates with the ambient action
/// `r h Phi(g, v, u)` to `1e-7`.
pub fn equivariance_check(chart: &LstChart, samples: usize, seed: u64) -> CheckReport {
    let mut s = Sampler::new(seed);
    let i_dirs = ineffectivity_dirs(chart, &mut s);
    let mut max_error = 0.0_f64;
    let mut violations = 0;
    let degree = chart.grading.v_levels.len();
    for _ in 0..samples {
        let g_coords = s.box_vector(chart.n_dim(), 1.5);
        let r_coords = s.box_vector(chart.n_dim(), 1.5);
        let f = s.box_vector(chart.f_dim(), 1.5);
        let u = s.box_vector(chart.u_dim(), 1.5);

        let h_mat = if i_dirs.is_empty() {
            CMat::identity(chart.spec.dim_v, chart.spec.dim_v)
        } else {
            let mut xi = RVec::zeros(chart.spec.basis.dim());
            for d in &i_dirs {
                xi += d * s.uniform(-0.8, 0.8);
            }
            expm(&chart.spec.basis.matrix_of(&xi))
        };
        let h_inv = if i_dirs.is_empty() {
            CMat::identity(chart.spec.dim_v, chart.spec.dim_v)
        } else {
            h_mat.clone().try_inverse().expect("group element is invertible")
        };

        let g_mat = chart.unipotent(&g_coords).g;
        let r_mat = chart.unipotent(&r_coords).g;
        let z = chart.phi_forward(&ChartCoords {
            n: g_coords.clone(),
            f: f.clone(),
            u: u.clone(),
        });
        let lhs = ProjectivePoint::new(&r_mat * (&h_mat * z.vector()));

        // Twisted unipotent r (h g h^-1), recovered in chart coordinates.
        let twisted = &r_mat * (&h_mat * (&g_mat * &h_inv));
        let log = match nilpotent_log(&twisted, degree) {
            Some(l) => l,
            None => {
                violations += 1;
                continue;
            }
        };
        let cols: Vec<RVec> = chart
            .n_basis
            .iter()
            .map(|d| {
                let flat = CVec::from_iterator(d.rho.len(), d.rho.iter().cloned());
                realify_vec(&flat)
            })
            .collect();
        let a = RMat::from_fn(cols[0].len(), cols.len(), |r, c| cols[c][r]);
        let log_flat = realify_vec(&CVec::from_iterator(log.len(), log.iter().cloned()));
        let sol = lstsq(&a, &log_flat);
        let n_twisted = sol.solution;

        // Action of h on slice and base coordinates, normalized by the
        // base eigenvalue.
        let mu0 = chart.w0.vector().dotc(&(&h_mat * chart.w0.vector()));
        let scale = C64::new(1.0, 0.0) / mu0;
        let f_vec = {
            let mut w = CVec::zeros(chart.spec.dim_v);
            for (j, fd) in chart.f_basis.iter().enumerate() {
                w += &fd.vec * C64::new(f[j], 0.0);
            }
            (&h_mat * w) * scale
        };
        let mut f_h = RVec::zeros(chart.f_dim());
        for (j, fd) in chart.f_basis.iter().enumerate() {
            f_h[j] = re_inner(&fd.vec, &f_vec);
        }
        let u_vec = {
            let mut w = chart.w0.vector().clone();
            for (k, ub) in chart.u_basis.iter().enumerate() {
                w += ub * C64::new(u[k], 0.0);
            }
            (&h_mat * w) * scale - chart.w0.vector()
        };
        let mut u_h = RVec::zeros(chart.u_dim());
        for (k, ub) in chart.u_basis.iter().enumerate() {
            u_h[k] = re_inner(ub, &u_vec);
        }

        let rhs = chart.phi_forward(&ChartCoords {
            n: n_twisted,
            f: f_h,
            u: u_h,
        });
        let err = rhs.distance(&lhs).max(sol.residual);
        max_error = max_error.max(err);
        if err > tol::EQUIVARIANCE {
            violations += 1;
        }
    }
    CheckReport {
        check: "equivariance".into(),
        samples,
        seed,
        max_error,
        violations,
    }
}
