//! Convex-combination feasibility by a dense phase-1 simplex.
//!
//! The single question asked here is whether a target vector is a convex
//! combination of a finite candidate set: feasibility of
//! `sum l_i p_i = q, sum l_i = 1, l >= 0`. Tableaus are tiny (d+1 rows), so
//! a textbook phase-1 with Bland's rule is adequate and cannot cycle. The
//! solver is generic over the scalar: integral inputs are decided in exact
//! rational arithmetic, general floating inputs with a tolerance.

use num_rational::BigRational;
use num_traits::{Num, Signed, Zero};
use std::ops::Neg;

use crate::linalg::RVec;
use crate::tol;

/// Phase-1 feasibility of the convex-combination system. `eps` is the
/// pivoting tolerance, `feas` the acceptance threshold on the residual
/// infeasibility (both zero for exact scalars).
pub(crate) fn convex_membership<T>(target: &[T], candidates: &[Vec<T>], eps: &T, feas: &T) -> bool
where
    T: Num + Signed + PartialOrd + Clone + Neg<Output = T>,
{
    let m = candidates.len();
    if m == 0 {
        return false;
    }
    let d = target.len();
    let rows = d + 1;
    let rhs_col = m + rows;

    // Constraint rows [A | I | b] with b made nonnegative before the
    // artificial identity block is stamped in.
    let mut tab: Vec<Vec<T>> = Vec::with_capacity(rows);
    for i in 0..rows {
        let mut row = vec![T::zero(); rhs_col + 1];
        for (j, c) in candidates.iter().enumerate() {
            row[j] = if i < d { c[i].clone() } else { T::one() };
        }
        row[rhs_col] = if i < d { target[i].clone() } else { T::one() };
        if row[rhs_col] < T::zero() {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
        }
        row[m + i] = T::one();
        tab.push(row);
    }
    let mut basis: Vec<usize> = (m..m + rows).collect();

    // Reduced costs of the phase-1 objective (sum of artificials): zero on
    // the artificial columns, minus the column sum elsewhere.
    let mut obj = vec![T::zero(); rhs_col + 1];
    for (j, slot) in obj.iter_mut().enumerate() {
        if (m..m + rows).contains(&j) {
            continue;
        }
        let mut s = T::zero();
        for row in &tab {
            s = s + row[j].clone();
        }
        *slot = -s;
    }

    // Bland's rule: smallest eligible entering column, ties in the ratio
    // test broken by the smallest basis index. Terminates without cycling.
    let iteration_cap = 50_000;
    for _ in 0..iteration_cap {
        let negeps = -eps.clone();
        let Some(je) = (0..rhs_col).find(|&j| obj[j] < negeps) else {
            break;
        };
        let mut leave: Option<usize> = None;
        for i in 0..rows {
            if tab[i][je] <= *eps {
                continue;
            }
            match leave {
                None => leave = Some(i),
                Some(l) => {
                    // rhs_i / t_i < rhs_l / t_l, cross-multiplied (both
                    // denominators positive).
                    let lhs = tab[i][rhs_col].clone() * tab[l][je].clone();
                    let rhs = tab[l][rhs_col].clone() * tab[i][je].clone();
                    if lhs < rhs || (lhs == rhs && basis[i] < basis[l]) {
                        leave = Some(i);
                    }
                }
            }
        }
        let Some(li) = leave else {
            // Unbounded phase-1 objective is impossible; a column with no
            // positive entry simply cannot improve.
            break;
        };
        pivot(&mut tab, &mut obj, li, je);
        basis[li] = je;
    }

    let mut infeasibility = T::zero();
    for i in 0..rows {
        if basis[i] >= m {
            infeasibility = infeasibility + tab[i][rhs_col].clone();
        }
    }
    infeasibility <= *feas
}

fn pivot<T>(tab: &mut [Vec<T>], obj: &mut [T], li: usize, je: usize)
where
    T: Num + Signed + PartialOrd + Clone + Neg<Output = T>,
{
    let p = tab[li][je].clone();
    for v in tab[li].iter_mut() {
        *v = v.clone() / p.clone();
    }
    let prow = tab[li].clone();
    for (i, row) in tab.iter_mut().enumerate() {
        if i == li {
            continue;
        }
        let f = row[je].clone();
        if f == T::zero() {
            continue;
        }
        for (v, pv) in row.iter_mut().zip(prow.iter()) {
            *v = v.clone() - f.clone() * pv.clone();
        }
    }
    let f = obj[je].clone();
    if f != T::zero() {
        for (v, pv) in obj.iter_mut().zip(prow.iter()) {
            *v = v.clone() - f.clone() * pv.clone();
        }
    }
}

/// Floating-point membership with the shared geometric tolerance.
pub(crate) fn membership_f64(target: &RVec, others: &[RVec]) -> bool {
    let t: Vec<f64> = target.iter().copied().collect();
    let cands: Vec<Vec<f64>> = others.iter().map(|p| p.iter().copied().collect()).collect();
    convex_membership(&t, &cands, &1e-11, &tol::GEOMETRY)
}

/// Exact membership; every finite f64 converts to a rational losslessly.
pub(crate) fn membership_exact(target: &RVec, others: &[RVec]) -> bool {
    let conv = |x: f64| BigRational::from_float(x).expect("finite coordinate");
    let t: Vec<BigRational> = target.iter().map(|&x| conv(x)).collect();
    let cands: Vec<Vec<BigRational>> = others
        .iter()
        .map(|p| p.iter().map(|&x| conv(x)).collect())
        .collect();
    convex_membership(&t, &cands, &BigRational::zero(), &BigRational::zero())
}

/// True when every coordinate is an integer of moderate size, the regime
/// where the exact path is both applicable and cheap.
pub(crate) fn all_integral(points: &[RVec]) -> bool {
    points
        .iter()
        .flat_map(|p| p.iter())
        .all(|&c| c.fract() == 0.0 && c.abs() < 1e12)
}
