use super::DenseMatrix;
use crate::error::{Error, Result};
use crate::Scalar;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu<T: Scalar> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                found: a.cols(),
            });
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(T::min_positive_value());
        let tiny = scale * T::epsilon() * T::of(n.max(1) as f64);
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, T::zero()), |best, c| if c.1 > best.1 { c } else { best });
            if pivot <= tiny || !pivot.is_finite() {
                return Err(Error::Singular);
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
            }
            let d = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f == T::zero() {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.perm.len();
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }
}

/// Solves `M x = b` by pivoted LU with one step of iterative refinement.
pub fn solve_linear<T: Scalar>(m: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    if b.len() != m.rows() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: b.len(),
        });
    }
    let lu = Lu::factor(m)?;
    let mut x = lu.solve(b);
    let r: Vec<T> = m.matvec(&x).iter().zip(b).map(|(&mx, &bi)| bi - mx).collect();
    let dx = lu.solve(&r);
    for (xi, d) in x.iter_mut().zip(dx) {
        *xi += d;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(x)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<T: Scalar>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.cols(),
        });
    }
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= T::zero() || !d.is_finite() {
            return Err(Error::Singular);
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b` given the Cholesky factor `L`.
pub fn cholesky_solve<T: Scalar>(l: &DenseMatrix<T>, b: &[T]) -> Vec<T> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

/// Inverse of a lower-triangular matrix.
pub fn lower_inverse<T: Scalar>(l: &DenseMatrix<T>) -> DenseMatrix<T> {
    let n = l.rows();
    let mut inv = DenseMatrix::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = T::one() / l[(j, j)];
        for i in (j + 1)..n {
            let mut s = T::zero();
            for k in j..i {
                s -= l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = s / l[(i, i)];
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn trivial_systems() {
        assert_eq!(solve_linear(&Matrix::identity(2), &[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
        let m = Matrix::from_rows(&[[2.0, 0.0], [0.0, 4.0]]);
        assert_eq!(solve_linear(&m, &[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn singular_is_reported() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(matches!(solve_linear(&m, &[1.0, 1.0]), Err(Error::Singular)));
    }

    #[test]
    fn random_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = 10;
            let m = Matrix::from_fn(n, n, |i, j| {
                rng.random_range(-1.0..1.0) + if i == j { 4.0 } else { 0.0 }
            });
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = solve_linear(&m, &b).unwrap();
            let r: Vec<f64> = m.matvec(&x).iter().zip(&b).map(|(a, b)| a - b).collect();
            assert!(norm(&r) <= 1e-10 * norm(&b));
        }
    }

    #[test]
    fn cholesky_round_trip() {
        let a = Matrix::from_rows(&[[4.0, 2.0, 0.4], [2.0, 5.0, 1.0], [0.4, 1.0, 3.0]]);
        let l = cholesky(&a).unwrap();
        let back = l.matmul(&l.transpose());
        assert!(back.sub(&a).max_abs() < 1e-14);
        let x = cholesky_solve(&l, &[1.0, 2.0, 3.0]);
        let r = a.matvec(&x);
        assert!((r[0] - 1.0).abs() + (r[1] - 2.0).abs() + (r[2] - 3.0).abs() < 1e-13);
        let li = lower_inverse(&l);
        assert!(li.matmul(&l).sub(&Matrix::identity(3)).max_abs() < 1e-14);
        assert!(cholesky(&Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]])).is_err());
    }
}
