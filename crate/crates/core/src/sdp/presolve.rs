use std::collections::{BTreeMap, HashMap};

use super::problem::{SdpProblem, Term};
use crate::numerics::{cholesky, cholesky_solve, pivoted_qr_rank};
use crate::Matrix;

/// Relative rank tolerance for dependent equality rows.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Presolved {
    pub problem: SdpProblem,
    /// Original index of each retained constraint.
    pub kept: Vec<usize>,
    /// Set when a dropped row contradicts the retained ones: a dual ray over the
    /// original rows with `Aᵀy = 0` and `bᵀy = 1`.
    pub inconsistency: Option<Vec<f64>>,
}

type Key = (usize, usize, usize);

fn merged(terms: &[Term]) -> BTreeMap<Key, f64> {
    let mut out = BTreeMap::new();
    for t in terms {
        *out.entry((t.block, t.i, t.j)).or_insert(0.0) += t.coef;
    }
    out.retain(|_, v| *v != 0.0);
    out
}

/// Removes numerically dependent equality rows.
///
/// Rows owning an entry that no other remaining row touches are independent
/// of the rest and are peeled off first; the leftover rows go through a
/// rank-revealing QR of their transpose.
pub fn presolve(prob: &SdpProblem) -> Presolved {
    let cons = prob.constraints();
    let m = cons.len();
    let rows: Vec<BTreeMap<Key, f64>> = cons.iter().map(|c| merged(&c.terms)).collect();
    let rhs: Vec<f64> = cons.iter().map(|c| c.rhs).collect();
    let b_scale = 1.0 + rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));

    let mut active: Vec<bool> = rows.iter().map(|r| !r.is_empty()).collect();
    let mut certain = vec![false; m];
    let mut count: HashMap<Key, usize> = HashMap::new();
    for (r, row) in rows.iter().enumerate() {
        if active[r] {
            for k in row.keys() {
                *count.entry(*k).or_insert(0) += 1;
            }
        }
    }
    loop {
        let mut changed = false;
        for r in 0..m {
            if active[r] && rows[r].keys().any(|k| count[k] == 1) {
                active[r] = false;
                certain[r] = true;
                changed = true;
                for k in rows[r].keys() {
                    *count.get_mut(k).unwrap() -= 1;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let rest: Vec<usize> = (0..m).filter(|&r| active[r]).collect();
    let mut keep_rest = Vec::new();
    if !rest.is_empty() {
        let mut cols: BTreeMap<Key, usize> = BTreeMap::new();
        for &r in &rest {
            for k in rows[r].keys() {
                let next = cols.len();
                cols.entry(*k).or_insert(next);
            }
        }
        let mut at = Matrix::zeros(cols.len(), rest.len());
        for (c, &r) in rest.iter().enumerate() {
            for (k, &v) in &rows[r] {
                at[(cols[k], c)] = v;
            }
        }
        let (rank, perm) = pivoted_qr_rank(&at, RANK_TOL);
        keep_rest = perm[..rank].iter().map(|&c| rest[c]).collect();
        keep_rest.sort_unstable();
    }

    let mut inconsistency = None;
    // zero rows must have zero right-hand side
    for r in 0..m {
        if rows[r].is_empty() && rhs[r].abs() > 1e-10 * b_scale {
            let mut y = vec![0.0; m];
            y[r] = 1.0 / rhs[r];
            inconsistency = Some(y);
        }
    }
    if inconsistency.is_none() {
        inconsistency = check_dropped(&rows, &rhs, &rest, &keep_rest, b_scale);
    }

    let mut kept: Vec<usize> = (0..m).filter(|&r| certain[r]).chain(keep_rest).collect();
    kept.sort_unstable();
    let mut problem = prob.clone();
    *problem.constraints_mut() = kept.iter().map(|&r| cons[r].clone()).collect();
    Presolved {
        problem,
        kept,
        inconsistency,
    }
}

/// Least-squares check that every dropped row's right-hand side matches the
/// combination of retained rows reproducing its coefficients.
fn check_dropped(
    rows: &[BTreeMap<Key, f64>],
    rhs: &[f64],
    rest: &[usize],
    keep: &[usize],
    b_scale: f64,
) -> Option<Vec<f64>> {
    let dropped: Vec<usize> = rest.iter().copied().filter(|r| !keep.contains(r)).collect();
    if dropped.is_empty() {
        return None;
    }
    let dot = |a: &BTreeMap<Key, f64>, b: &BTreeMap<Key, f64>| -> f64 {
        a.iter().filter_map(|(k, v)| b.get(k).map(|w| v * w)).sum()
    };
    let k = keep.len();
    let gram = Matrix::from_fn(k, k, |i, j| dot(&rows[keep[i]], &rows[keep[j]]));
    let l = if k > 0 { cholesky(&gram).ok() } else { None };
    for &d in &dropped {
        let (w, predicted) = match &l {
            Some(l) => {
                let rhs_w: Vec<f64> = keep.iter().map(|&r| dot(&rows[r], &rows[d])).collect();
                let w = cholesky_solve(l, &rhs_w);
                let p: f64 = w.iter().zip(keep).map(|(wi, &r)| wi * rhs[r]).sum();
                (w, p)
            }
            None => (vec![0.0; k], 0.0),
        };
        let wn = w.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let mismatch = rhs[d] - predicted;
        if mismatch.abs() > 1e-8 * b_scale * (1.0 + wn) {
            let mut y = vec![0.0; rhs.len()];
            y[d] = 1.0 / mismatch;
            for (wi, &r) in w.iter().zip(keep) {
                y[r] = -wi / mismatch;
            }
            return Some(y);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::problem::Term;

    fn row(vals: &[f64]) -> Vec<Term> {
        vals.iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, &v)| Term::scalar(0, i, v))
            .collect()
    }

    #[test]
    fn duplicate_row_dropped() {
        let mut p = SdpProblem::new();
        p.add_free(3);
        p.add_constraint(row(&[1.0, 1.0, 0.0]), 1.0);
        p.add_constraint(row(&[1.0, 1.0, 0.0]), 1.0);
        let r = presolve(&p);
        assert_eq!(r.kept.len(), 1);
        assert!(r.inconsistency.is_none());

        p.add_constraint(row(&[1.0, 1.0, 0.0]), 2.0);
        assert!(presolve(&p).inconsistency.is_some());
    }

    #[test]
    fn empty_is_unchanged() {
        let mut p = SdpProblem::new();
        p.add_psd(2);
        let r = presolve(&p);
        assert!(r.kept.is_empty());
        assert_eq!(r.problem, p);
    }

    #[test]
    fn private_entries_are_kept_without_factorization() {
        let mut p = SdpProblem::new();
        p.add_psd(2);
        p.add_constraint(vec![Term::psd(0, 0, 0, 1.0)], 1.0);
        p.add_constraint(vec![Term::psd(0, 0, 1, 1.0), Term::psd(0, 1, 1, 2.0)], 0.0);
        let r = presolve(&p);
        assert_eq!(r.kept, vec![0, 1]);
    }
}
