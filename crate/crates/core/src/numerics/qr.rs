use super::DenseMatrix;
use crate::Scalar;

/// Householder QR with column pivoting.
///
/// Returns the numerical rank (diagonal of `R` above `rel_tol·|R₀₀|`) and the
/// column order chosen by pivoting; the first `rank` entries index a
/// maximal well-conditioned set of independent columns.
pub fn pivoted_qr_rank<T: Scalar>(a: &DenseMatrix<T>, rel_tol: T) -> (usize, Vec<usize>) {
    let (m, n) = (a.rows(), a.cols());
    let mut r = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut norms: Vec<T> = (0..n)
        .map(|j| (0..m).map(|i| r[(i, j)] * r[(i, j)]).sum())
        .collect();
    let mut first = T::zero();
    let mut rank = 0;
    for k in 0..m.min(n) {
        let (p, best) = (k..n).fold((k, T::neg_infinity()), |acc, j| {
            if norms[j] > acc.1 {
                (j, norms[j])
            } else {
                acc
            }
        });
        if p != k {
            perm.swap(p, k);
            norms.swap(p, k);
            for i in 0..m {
                let t = r[(i, k)];
                r[(i, k)] = r[(i, p)];
                r[(i, p)] = t;
            }
        }
        // recompute the pivot norm exactly; downdated norms drift
        let alpha: T = (k..m).map(|i| r[(i, k)] * r[(i, k)]).sum::<T>().sqrt();
        if k == 0 {
            first = alpha;
        }
        if alpha <= rel_tol * first || alpha == T::zero() || best <= T::zero() {
            break;
        }
        rank += 1;
        let alpha = if r[(k, k)] > T::zero() { -alpha } else { alpha };
        let mut v: Vec<T> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vn: T = v.iter().map(|&x| x * x).sum();
        if vn > T::zero() {
            let beta = T::of(2.0) / vn;
            for j in k..n {
                let s: T = (k..m).map(|i| v[i - k] * r[(i, j)]).sum::<T>() * beta;
                for i in k..m {
                    r[(i, j)] -= s * v[i - k];
                }
            }
        }
        for j in (k + 1)..n {
            norms[j] = (norms[j] - r[(k, j)] * r[(k, j)]).max(T::zero());
            if norms[j] < T::of(1e-6) * first * first {
                norms[j] = ((k + 1)..m).map(|i| r[(i, j)] * r[(i, j)]).sum();
            }
        }
    }
    (rank, perm)
}
