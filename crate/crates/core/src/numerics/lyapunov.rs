use super::{gen_eig_max_real, min_eigenvalue, solve_linear, DenseMatrix};
use crate::error::{Error, Result};
use crate::Scalar;

/// Solves `J Q + Q Jᵀ = −I` for a Hurwitz `J` through the Kronecker system
/// `(I⊗J + J⊗I) vec(Q) = −vec(I)`.
pub fn solve_lyapunov<T: Scalar>(j: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let n = j.rows();
    if !j.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: j.cols(),
        });
    }
    let abscissa = gen_eig_max_real(j)?;
    if abscissa >= T::zero() {
        return Err(Error::NotHurwitz(abscissa.as_f64()));
    }
    let eye = DenseMatrix::identity(n);
    let k = eye.kron(j).add(&j.kron(&eye));
    // column-major vec: index i + n·c holds Q[i][c]
    let mut rhs = vec![T::zero(); n * n];
    for i in 0..n {
        rhs[i + n * i] = -T::one();
    }
    let v = solve_linear(&k, &rhs)?;
    let q = DenseMatrix::from_fn(n, n, |r, c| v[r + n * c]).symmetrize();
    let lo = min_eigenvalue(&q)?;
    if lo <= T::zero() {
        return Err(Error::IndefiniteLyapunov(lo.as_f64()));
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual(j: &Matrix, q: &Matrix) -> f64 {
        j.matmul(q).add(&q.matmul(&j.transpose())).add(&Matrix::identity(j.rows())).max_abs()
    }

    #[test]
    fn diagonal_cases() {
        let q = solve_lyapunov(&Matrix::identity(2).scale(-1.0)).unwrap();
        assert!(q.sub(&Matrix::identity(2).scale(0.5)).max_abs() < 1e-14);
        let q = solve_lyapunov(&Matrix::from_diag(&[-1.0, -2.0])).unwrap();
        assert!(q.sub(&Matrix::from_diag(&[0.5, 0.25])).max_abs() < 1e-14);
    }

    #[test]
    fn rejects_unstable() {
        assert!(matches!(
            solve_lyapunov(&Matrix::from_diag(&[-1.0, 0.1])),
            Err(Error::NotHurwitz(_))
        ));
    }

    #[test]
    fn random_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let b = Matrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
            let shift = gen_eig_max_real(&b).unwrap() + rng.random_range(0.1..1.0);
            let j = b.shift_diagonal(shift);
            let q = solve_lyapunov(&j).unwrap();
            assert!(residual(&j, &q) <= 1e-8);
            assert!(q.asymmetry() <= 1e-12);
            assert!(min_eigenvalue(&q).unwrap() > 0.0);
        }
    }
}
