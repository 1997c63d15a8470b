//! Facet enumeration for small point sets.
//!
//! Points are deduplicated, reduced to orthonormal coordinates on their
//! affine hull, and dispatched on the intrinsic dimension: endpoints in
//! dimension one, a monotone chain in dimension two, and candidate
//! hyperplanes through d-subsets with a one-sided test above that. Weight
//! polytopes at desk scale have few points, so the combinatorial cost is
//! irrelevant next to the robustness of the one-sided test.

use crate::linalg::{RMat, RVec};
use crate::tol;

pub(crate) struct HullData {
    /// Ambient (unit outer normal, offset) pairs, valid for every input.
    pub facets: Vec<(RVec, f64)>,
    /// Extreme input indices, ascending.
    pub vertices: Vec<usize>,
    /// Per vertex, the facets tight at it.
    pub vertex_facets: Vec<(usize, Vec<usize>)>,
}

/// First index of each coincidence class, in input order.
pub(crate) fn dedupe_reps(points: &[RVec], tol: f64) -> Vec<usize> {
    let mut reps: Vec<usize> = Vec::new();
    'outer: for (i, p) in points.iter().enumerate() {
        for &r in &reps {
            if (p - &points[r]).norm() <= tol {
                continue 'outer;
            }
        }
        reps.push(i);
    }
    reps
}

/// Build the hull of the deduplicated points. Requires at least two
/// distinct points (the degenerate case is rejected upstream).
pub(crate) fn build(points: &[RVec], reps: &[usize]) -> HullData {
    let n = points[0].len();
    let x0 = points[reps[0]].clone();

    // Orthonormal basis of the affine hull from the difference matrix.
    let diffs = RMat::from_fn(n, reps.len() - 1, |r, c| points[reps[c + 1]][r] - x0[r]);
    let svd = diffs.svd(true, false);
    let d = svd
        .singular_values
        .iter()
        .filter(|&&s| s > tol::GEOMETRY)
        .count();
    let u = svd.u.as_ref().expect("left singular vectors were requested");
    let basis: Vec<RVec> = (0..d).map(|j| u.column(j).into_owned()).collect();
    let y: Vec<RVec> = reps
        .iter()
        .map(|&i| RVec::from_fn(d, |j, _| basis[j].dot(&(&points[i] - &x0))))
        .collect();

    let (red_normals, chain) = match d {
        1 => hull_1d(&y),
        2 => hull_2d(&y),
        _ => hull_nd(&y, d),
    };

    // Lift to ambient coordinates; offsets are global maxima so every input
    // point satisfies every facet by construction.
    let mut facets: Vec<(RVec, f64)> = Vec::new();
    for nr in red_normals {
        let mut na = RVec::zeros(n);
        for j in 0..d {
            na += &basis[j] * nr[j];
        }
        if facets.iter().any(|(en, _)| en.dot(&na) > 1.0 - tol::GEOMETRY) {
            continue;
        }
        let c = points
            .iter()
            .map(|p| na.dot(p))
            .fold(f64::NEG_INFINITY, f64::max);
        facets.push((na, c));
    }

    let incidence: Vec<Vec<usize>> = reps
        .iter()
        .map(|&i| {
            facets
                .iter()
                .enumerate()
                .filter(|(_, (nrm, c))| nrm.dot(&points[i]) >= c - tol::GEOMETRY)
                .map(|(fid, _)| fid)
                .collect()
        })
        .collect();

    let vertex_pos: Vec<usize> = match chain {
        Some(mut cycle) => {
            cycle.sort_unstable();
            cycle
        }
        // A position is a vertex iff its incident facet normals span the
        // full intrinsic dimension.
        None => (0..reps.len())
            .filter(|&pos| {
                let inc = &incidence[pos];
                if inc.len() < d {
                    return false;
                }
                let mat = RMat::from_fn(inc.len(), n, |r, c| facets[inc[r]].0[c]);
                let rank = mat
                    .svd(false, false)
                    .singular_values
                    .iter()
                    .filter(|&&s| s > tol::FACET_RANK)
                    .count();
                rank == d
            })
            .collect(),
    };

    HullData {
        vertices: vertex_pos.iter().map(|&p| reps[p]).collect(),
        vertex_facets: vertex_pos
            .iter()
            .map(|&p| (reps[p], incidence[p].clone()))
            .collect(),
        facets,
    }
}

/// Dimension one: the two endpoints bound the segment.
fn hull_1d(y: &[RVec]) -> (Vec<RVec>, Option<Vec<usize>>) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, v) in y.iter().enumerate() {
        if v[0] < y[lo][0] {
            lo = i;
        }
        if v[0] > y[hi][0] {
            hi = i;
        }
    }
    (
        vec![RVec::from_vec(vec![1.0]), RVec::from_vec(vec![-1.0])],
        Some(vec![lo, hi]),
    )
}

/// Dimension two: Andrew's monotone chain, counterclockwise output, with
/// outward edge normals.
fn hull_2d(y: &[RVec]) -> (Vec<RVec>, Option<Vec<usize>>) {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| {
        (y[a][0], y[a][1])
            .partial_cmp(&(y[b][0], y[b][1]))
            .expect("finite coordinates")
    });
    let cross = |o: usize, a: usize, b: usize| {
        (y[a][0] - y[o][0]) * (y[b][1] - y[o][1]) - (y[a][1] - y[o][1]) * (y[b][0] - y[o][0])
    };
    // Collinear-pop threshold below the geometric tolerance, so tolerance
    // decisions stay with the one-sided facet data.
    let turn_eps = 1e-10;
    let mut lower: Vec<usize> = Vec::new();
    for &p in &order {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= turn_eps
        {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &p in order.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= turn_eps
        {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    let cycle: Vec<usize> = lower.into_iter().chain(upper).collect();
    let mut normals = Vec::new();
    for k in 0..cycle.len() {
        let a = cycle[k];
        let b = cycle[(k + 1) % cycle.len()];
        let dx = y[b][0] - y[a][0];
        let dy = y[b][1] - y[a][1];
        let len = (dx * dx + dy * dy).sqrt();
        normals.push(RVec::from_vec(vec![dy / len, -dx / len]));
    }
    (normals, Some(cycle))
}

/// Dimension three and above: every affinely independent d-subset spans a
/// candidate hyperplane; keep the one-sided ones, oriented outward.
fn hull_nd(y: &[RVec], d: usize) -> (Vec<RVec>, Option<Vec<usize>>) {
    let k = y.len();
    assert!(
        k <= 30 && d <= 5,
        "facet enumeration supports at most 30 distinct points in dimensions 3..=5"
    );
    let mut normals: Vec<RVec> = Vec::new();
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        if let Some(nrm) = subset_facet(y, &idx, d) {
            if !normals
                .iter()
                .any(|en| en.dot(&nrm) > 1.0 - tol::GEOMETRY)
            {
                normals.push(nrm);
            }
        }
        if !next_combination(&mut idx, k) {
            break;
        }
    }
    (normals, None)
}

fn subset_facet(y: &[RVec], subset: &[usize], d: usize) -> Option<RVec> {
    let base = &y[subset[0]];
    let rows = RMat::from_fn(d - 1, d, |r, c| y[subset[r + 1]][c] - base[c]);
    let mut nrm = generalized_cross(&rows, d);
    let len = nrm.norm();
    if len < 1e-10 {
        return None;
    }
    nrm /= len;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in y {
        let s = nrm.dot(&(p - base));
        lo = lo.min(s);
        hi = hi.max(s);
    }
    if lo < -tol::GEOMETRY && hi > tol::GEOMETRY {
        return None;
    }
    Some(if hi > tol::GEOMETRY { -nrm } else { nrm })
}

/// Vector orthogonal to the rows of a (d-1) x d matrix by cofactor
/// expansion, the d-dimensional cross product.
fn generalized_cross(rows: &RMat, d: usize) -> RVec {
    RVec::from_fn(d, |j, _| {
        let minor = RMat::from_fn(d - 1, d - 1, |r, c| {
            let col = if c < j { c } else { c + 1 };
            rows[(r, col)]
        });
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sign * minor.determinant()
    })
}

fn next_combination(idx: &mut [usize], k: usize) -> bool {
    let d = idx.len();
    let mut i = d as isize - 1;
    while i >= 0 && idx[i as usize] == k - d + i as usize {
        i -= 1;
    }
    if i < 0 {
        return false;
    }
    let i = i as usize;
    idx[i] += 1;
    for j in i + 1..d {
        idx[j] = idx[j - 1] + 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combination_enumeration_is_exhaustive() {
        let mut idx: Vec<usize> = (0..3).collect();
        let mut seen = Vec::new();
        loop {
            seen.push(idx.clone());
            if !next_combination(&mut idx, 5) {
                break;
            }
        }
        assert_eq!(seen.len(), 10);
        assert_eq!(seen[0], vec![0, 1, 2]);
        assert_eq!(seen[9], vec![2, 3, 4]);
    }

    #[test]
    fn generalized_cross_is_orthogonal_to_the_rows() {
        let rows = RMat::from_row_slice(2, 3, &[1.0, 2.0, 0.5, -1.0, 0.0, 3.0]);
        let n = generalized_cross(&rows, 3);
        for r in 0..2 {
            let row = rows.row(r).transpose();
            assert!(n.dot(&row).abs() < 1e-12);
        }
        assert!(n.norm() > 1.0);
    }

    #[test]
    fn monotone_chain_orders_the_square_counterclockwise() {
        let y: Vec<RVec> = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]]
            .iter()
            .map(|p| RVec::from_vec(p.to_vec()))
            .collect();
        let (normals, cycle) = hull_2d(&y);
        let cycle = cycle.unwrap();
        assert_eq!(cycle.len(), 4);
        assert!(!cycle.contains(&4));
        assert_eq!(normals.len(), 4);
        // Outward normals each match an axis direction.
        for nrm in &normals {
            assert!((nrm.norm() - 1.0).abs() < 1e-12);
            assert!(nrm[0].abs() < 1e-12 || nrm[1].abs() < 1e-12);
        }
    }

    #[test]
    fn dedupe_keeps_first_occurrences() {
        let pts = vec![
            RVec::from_vec(vec![1.0]),
            RVec::from_vec(vec![1.0 + 1e-12]),
            RVec::from_vec(vec![2.0]),
        ];
        assert_eq!(dedupe_reps(&pts, 1e-9), vec![0, 2]);
    }
}
