//! Dense linear algebra helpers shared by every module.
//!
//! Thin deterministic wrappers around nalgebra: Hermitian eigendecompositions
//! with a fixed ordering and phase convention, eigenvalue clustering,
//! real-span Gram-Schmidt over complex vectors and matrices, least squares
//! with rank reporting, principal angles, and exact polynomial exp/log for
//! nilpotent matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

/// Entrywise maximum modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Entrywise maximum modulus of a real matrix.
pub fn max_abs_r(m: &RMat) -> f64 {
    m.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Max entrywise deviation from Hermitian symmetry.
pub fn herm_error(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Max entrywise deviation from anti-Hermitian symmetry.
pub fn skew_error(m: &CMat) -> f64 {
    max_abs(&(m + m.adjoint()))
}

/// Hermitian part `(m + m^*)/2`.
pub fn herm_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Anti-Hermitian part `(m - m^*)/2`.
pub fn skew_part(m: &CMat) -> CMat {
    (m - m.adjoint()).scale(0.5)
}

/// Real trace form `Re tr(a b^*)`, the Ad-invariant inner product used for
/// all matrix-space geometry in this crate.
pub fn trace_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum()
}

/// Norm induced by [`trace_inner`].
pub fn trace_norm(m: &CMat) -> f64 {
    trace_inner(m, m).max(0.0).sqrt()
}

/// Matrix commutator `a b - b a`.
pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Real part of the Hermitian inner product `<u, v> = u^* v`.
pub fn re_inner(u: &CVec, v: &CVec) -> f64 {
    u.dotc(v).re
}

/// Euclidean norm of a complex vector viewed as a real vector.
pub fn re_norm(v: &CVec) -> f64 {
    v.norm()
}

/// Column-stack complex vectors into a matrix. Panics on an empty list.
pub fn hstack(cols: &[CVec]) -> CMat {
    CMat::from_columns(cols)
}

/// Column-stack real vectors into a matrix. Panics on an empty list.
pub fn hstack_r(cols: &[RVec]) -> RMat {
    RMat::from_columns(cols)
}

/// Interpret a complex vector as the stacked real vector `[Re; Im]`.
pub fn realify_vec(v: &CVec) -> RVec {
    let n = v.len();
    RVec::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

/// Stack complex columns into the `2N x k` real matrix `[Re; Im]`.
pub fn realify_cols(cols: &[CVec]) -> RMat {
    let rv: Vec<RVec> = cols.iter().map(realify_vec).collect();
    hstack_r(&rv)
}

/// Fix the phase of a complex column: the first entry of largest modulus is
/// made real and positive. Leaves near-zero columns untouched.
pub fn phase_canonicalize(col: &mut CVec) {
    let mut best = 0usize;
    let mut best_mod = 0.0f64;
    for (i, z) in col.iter().enumerate() {
        let m = z.norm();
        if m > best_mod {
            best_mod = m;
            best = i;
        }
    }
    if best_mod < 1e-14 {
        return;
    }
    let phase = col[best] / C64::new(best_mod, 0.0);
    let correction = phase.conj();
    for z in col.iter_mut() {
        *z *= correction;
    }
}

/// Fix the sign of a real column: the first entry of largest modulus is made
/// positive.
pub fn sign_canonicalize(col: &mut RVec) {
    let mut best = 0usize;
    let mut best_mod = 0.0f64;
    for (i, x) in col.iter().enumerate() {
        let m = x.abs();
        if m > best_mod {
            best_mod = m;
            best = i;
        }
    }
    if best_mod < 1e-14 {
        return;
    }
    if col[best] < 0.0 {
        for x in col.iter_mut() {
            *x = -*x;
        }
    }
}

/// Hermitian eigendecomposition with eigenvalues sorted in descending order
/// and phase-canonical eigenvector columns.
pub struct HermEigen {
    pub values: RVec,
    pub vectors: CMat,
}

/// Decompose a Hermitian matrix. The input is symmetrized first so that
/// rounding noise in the caller cannot leak into the eigensolver.
pub fn herm_eigen(m: &CMat) -> HermEigen {
    let h = herm_part(m);
    let eig = h.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });
    let values = RVec::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let mut cols: Vec<CVec> = order
        .iter()
        .map(|&j| CVec::from(eig.eigenvectors.column(j).into_owned()))
        .collect();
    for c in cols.iter_mut() {
        phase_canonicalize(c);
    }
    HermEigen {
        values,
        vectors: hstack(&cols),
    }
}

/// Real symmetric eigendecomposition, descending order, sign-canonical
/// columns.
pub struct SymEigen {
    pub values: RVec,
    pub vectors: RMat,
}

pub fn sym_eigen(m: &RMat) -> SymEigen {
    let s = (m + m.transpose()).scale(0.5);
    let eig = s.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });
    let values = RVec::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let mut cols: Vec<RVec> = order
        .iter()
        .map(|&j| RVec::from(eig.eigenvectors.column(j).into_owned()))
        .collect();
    for c in cols.iter_mut() {
        sign_canonicalize(c);
    }
    SymEigen {
        values,
        vectors: hstack_r(&cols),
    }
}

/// Group a descending value sequence into clusters whose consecutive gaps
/// are at most `gap`. Returns `(mean, member indices)` per cluster, in the
/// original descending order.
pub fn cluster_desc(values: &RVec, gap: f64) -> Vec<(f64, Vec<usize>)> {
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    for i in 0..values.len() {
        if let Some(&last) = current.last() {
            if values[last] - values[i] > gap {
                let mean = current.iter().map(|&j| values[j]).sum::<f64>() / current.len() as f64;
                out.push((mean, std::mem::take(&mut current)));
            }
        }
        current.push(i);
    }
    if !current.is_empty() {
        let mean = current.iter().map(|&j| values[j]).sum::<f64>() / current.len() as f64;
        out.push((mean, current));
    }
    out
}

/// Orthonormal basis of the orthogonal complement of a unit vector, built
/// from the Householder reflection sending `v` to a coordinate axis. The
/// result has exactly `n - 1` columns.
pub fn orthonormal_complement(v: &CVec) -> Vec<CVec> {
    let n = v.len();
    assert!(n >= 1, "empty vector has no complement");
    let mut pivot = 0usize;
    let mut best = 0.0f64;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > best {
            best = z.norm();
            pivot = i;
        }
    }
    assert!(best > 1e-14, "cannot complement the zero vector");
    let alpha = -(v[pivot] / C64::new(v[pivot].norm(), 0.0));
    let mut u = v.clone();
    u[pivot] -= alpha;
    let un2 = u.dotc(&u).re;
    let mut out = Vec::with_capacity(n - 1);
    for k in 0..n {
        if k == pivot {
            continue;
        }
        // column k of H = I - 2 u u^* / |u|^2
        let mut col = CVec::zeros(n);
        col[k] = C64::new(1.0, 0.0);
        if un2 > 1e-28 {
            let coeff = u[k].conj() * C64::new(2.0 / un2, 0.0);
            for i in 0..n {
                col[i] -= u[i] * coeff;
            }
        }
        out.push(col);
    }
    out
}

/// Subtract from `m` its projection onto the real span of the orthonormal
/// matrix family `basis` (trace form).
pub fn project_out_mats(m: &CMat, basis: &[CMat]) -> CMat {
    let mut r = m.clone();
    for b in basis {
        let c = trace_inner(b, &r);
        r -= b.scale(c);
    }
    r
}

/// Subtract from `v` its projection onto the real span of the family
/// `basis` (assumed orthonormal for the real inner product `Re <.,.>`).
pub fn project_out_re(v: &CVec, basis: &[CVec]) -> CVec {
    let mut r = v.clone();
    for b in basis {
        let c = re_inner(b, &r);
        r -= b.scale(c);
    }
    r
}

/// Least-squares solution data for an overdetermined real system.
pub struct Lsq {
    pub solution: RVec,
    pub residual: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

/// Solve `a x ~ b` by SVD with a relative cutoff, reporting the residual and
/// the extreme singular values of `a`.
pub fn lstsq(a: &RMat, b: &RVec) -> Lsq {
    let ncols = a.ncols();
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let sigma_min = if ncols == 0 || sv.len() < ncols {
        0.0
    } else {
        sv.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let cutoff = sigma_max * 1e-13;
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let mut x = RVec::zeros(ncols);
    for i in 0..sv.len() {
        if sv[i] > cutoff {
            let c = u.column(i).dot(b) / sv[i];
            x += v_t.row(i).transpose().scale(c);
        }
    }
    let residual = (a * &x - b).norm();
    Lsq {
        solution: x,
        residual,
        sigma_min,
        sigma_max,
    }
}

/// Smallest singular value of a real matrix (0 for an empty matrix).
pub fn sigma_min(a: &RMat) -> f64 {
    if a.ncols() == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let svd = a.clone().svd(false, false);
    let k = a.nrows().min(a.ncols());
    let sv = &svd.singular_values;
    if sv.len() < k {
        0.0
    } else {
        sv.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Sine of the largest principal angle between the column spans of two
/// matrices with orthonormal columns. Returns `1` when the dimensions
/// differ, since the spaces then cannot coincide.
pub fn max_principal_angle(a: &RMat, b: &RMat) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    // Projection defect |(I - B B^T) A|_2, the sine of the largest
    // principal angle. Exact near zero, unlike acos of a Gram singular
    // value, which floors out at sqrt(eps).
    let defect = a - b * (b.transpose() * a);
    let svd = defect.svd(false, false);
    svd.singular_values
        .iter()
        .cloned()
        .fold(0.0_f64, f64::max)
        .min(1.0)
}

/// Matrix exponential (delegates to nalgebra's scaling-and-squaring).
pub fn expm(m: &CMat) -> CMat {
    m.exp()
}

/// Exponential of a nilpotent matrix as the exact finite polynomial
/// `sum n^k / k!`. Returns `None` when `n` fails to vanish within
/// `max_degree` powers (relative to its own scale).
pub fn nilpotent_exp(n: &CMat, max_degree: usize) -> Option<CMat> {
    let dim = n.nrows();
    let scale = max_abs(n).max(1.0);
    let mut acc = CMat::identity(dim, dim);
    let mut term = CMat::identity(dim, dim);
    for k in 1..=max_degree + 1 {
        term = (&term * n).scale(1.0 / k as f64);
        if max_abs(&term) <= 1e-14 * scale.powi(k as i32) {
            return Some(acc);
        }
        if k == max_degree + 1 {
            return None;
        }
        acc += &term;
    }
    Some(acc)
}

/// Logarithm of a unipotent matrix as the exact finite alternating series in
/// `g - I`. Returns `None` when `g - I` fails to vanish within `max_degree`
/// powers.
pub fn nilpotent_log(g: &CMat, max_degree: usize) -> Option<CMat> {
    let dim = g.nrows();
    let x = g - CMat::identity(dim, dim);
    let scale = max_abs(&x).max(1.0);
    let mut acc = CMat::zeros(dim, dim);
    let mut power = CMat::identity(dim, dim);
    for k in 1..=max_degree + 1 {
        power = &power * &x;
        if max_abs(&power) <= 1e-14 * scale.powi(k as i32) {
            return Some(acc);
        }
        if k == max_degree + 1 {
            return None;
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        acc += power.scale(sign / k as f64);
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn householder_complement_is_orthonormal() {
        let v = CVec::from_vec(vec![cx(0.5, 0.1), cx(-0.3, 0.4), cx(0.2, -0.6), cx(0.1, 0.0)]);
        let v = v.scale(1.0 / v.norm());
        let basis = orthonormal_complement(&v);
        assert_eq!(basis.len(), 3);
        for (i, a) in basis.iter().enumerate() {
            assert!((a.dotc(&v).norm()) < 1e-14, "complement vector not orthogonal to v");
            for (j, b) in basis.iter().enumerate() {
                let g = a.dotc(b).norm();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-13, "gram defect at ({i},{j}): {g}");
            }
        }
    }

    #[test]
    fn herm_eigen_reconstructs_and_sorts() {
        let m = CMat::from_row_slice(
            3,
            3,
            &[
                cx(1.0, 0.0), cx(0.0, 2.0), cx(0.5, 0.0),
                cx(0.0, -2.0), cx(-1.0, 0.0), cx(0.0, 0.3),
                cx(0.5, 0.0), cx(0.0, -0.3), cx(0.25, 0.0),
            ],
        );
        let eig = herm_eigen(&m);
        for i in 1..3 {
            assert!(eig.values[i - 1] >= eig.values[i], "descending order violated");
        }
        let d = CMat::from_fn(3, 3, |i, j| {
            if i == j { cx(eig.values[i], 0.0) } else { cx(0.0, 0.0) }
        });
        let rec = &eig.vectors * d * eig.vectors.adjoint();
        assert!(max_abs(&(rec - m)) < 1e-12, "eigendecomposition does not reconstruct");
    }

    #[test]
    fn phase_canonicalization_is_stable_under_phase_noise() {
        let v = CVec::from_vec(vec![cx(0.3, -0.4), cx(0.8, 0.1), cx(-0.2, 0.2)]);
        let mut a = v.clone();
        let mut b = v.scale(cx(0.6, 0.8).norm().recip()) * cx(0.6, 0.8);
        phase_canonicalize(&mut a);
        phase_canonicalize(&mut b);
        assert!(max_abs(&CMat::from_columns(&[a - b])) < 1e-12);
    }

    #[test]
    fn cluster_groups_by_gap() {
        let vals = RVec::from_vec(vec![2.0, 2.0 + 1e-12, 1.0, -1.0, -1.0 - 1e-10]);
        let mut sorted = vals.as_slice().to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let v = RVec::from_vec(sorted);
        let clusters = cluster_desc(&v, 1e-8);
        assert_eq!(clusters.len(), 3);
        assert_eq!(clusters[0].1.len(), 2);
        assert_eq!(clusters[1].1.len(), 1);
        assert_eq!(clusters[2].1.len(), 2);
        assert!((clusters[0].0 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn lstsq_solves_consistent_system() {
        let a = RMat::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, -1.0]);
        let x_true = RVec::from_vec(vec![0.7, -0.3]);
        let b = &a * &x_true;
        let sol = lstsq(&a, &b);
        assert!((sol.solution - x_true).norm() < 1e-12);
        assert!(sol.residual < 1e-12);
        assert!(sol.sigma_min > 1.0);
    }

    #[test]
    fn nilpotent_exp_log_round_trip() {
        let n = CMat::from_row_slice(
            3,
            3,
            &[
                cx(0.0, 0.0), cx(1.3, -0.2), cx(0.4, 0.0),
                cx(0.0, 0.0), cx(0.0, 0.0), cx(-0.7, 0.5),
                cx(0.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0),
            ],
        );
        let g = nilpotent_exp(&n, 3).expect("n is nilpotent");
        let back = nilpotent_log(&g, 3).expect("g is unipotent");
        assert!(max_abs(&(back - &n)) < 1e-12);
        let dense = expm(&n);
        assert!(max_abs(&(g - dense)) < 1e-12, "polynomial and dense exponentials disagree");
    }

    #[test]
    fn nilpotent_exp_rejects_non_nilpotent() {
        let m = CMat::identity(2, 2);
        assert!(nilpotent_exp(&m, 4).is_none());
    }

    #[test]
    fn principal_angle_detects_equal_and_orthogonal_spans() {
        let a = hstack_r(&[RVec::from_vec(vec![1.0, 0.0, 0.0])]);
        let b = hstack_r(&[RVec::from_vec(vec![0.0, 1.0, 0.0])]);
        assert!(max_principal_angle(&a, &a) < 1e-12);
        assert!((max_principal_angle(&a, &b) - 1.0).abs() < 1e-12);
    }
}
