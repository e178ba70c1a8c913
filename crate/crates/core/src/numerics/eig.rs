use super::DenseMatrix;
use crate::error::{Error, Result};
use crate::Scalar;

/// Symmetric eigen-decomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns.
pub fn sym_eig<T: Scalar>(m: &DenseMatrix<T>) -> Result<(Vec<T>, DenseMatrix<T>)> {
    let n = m.rows();
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.cols(),
        });
    }
    let scale = m.max_abs().max(T::one());
    let tol = T::of(1e-12).max(T::epsilon() * T::of(64.0)) * scale;
    let asym = m.asymmetry();
    if asym > tol {
        return Err(Error::NotSymmetric(asym.as_f64()));
    }
    let mut a = m.symmetrize();
    let mut v = DenseMatrix::identity(n);
    let norm = a.frobenius_norm().max(T::min_positive_value());
    let target = (T::epsilon() * norm) * (T::epsilon() * norm);
    let mut converged = n < 2;
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                rotate_columns(&mut a, p, q, c, s);
                rotate_rows(&mut a, p, q, c, s);
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
                rotate_columns(&mut v, p, q, c, s);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(100));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok((values, vectors))
}

fn rotate_columns<T: Scalar>(a: &mut DenseMatrix<T>, p: usize, q: usize, c: T, s: T) {
    for k in 0..a.rows() {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
}

fn rotate_rows<T: Scalar>(a: &mut DenseMatrix<T>, p: usize, q: usize, c: T, s: T) {
    for k in 0..a.cols() {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue<T: Scalar>(m: &DenseMatrix<T>) -> Result<T> {
    Ok(sym_eig(m)?.0.first().copied().unwrap_or_else(T::infinity))
}

/// All eigenvalues `(re, im)` of a general square matrix.
pub fn eigenvalues<T: Scalar>(m: &DenseMatrix<T>) -> Result<Vec<(T, T)>> {
    let n = m.rows();
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.cols(),
        });
    }
    let mut h = m.clone();
    hessenberg(&mut h);
    hqr(h, 100 * n.max(1))
}

/// Largest real part among the eigenvalues of `m` (spectral abscissa).
pub fn gen_eig_max_real<T: Scalar>(m: &DenseMatrix<T>) -> Result<T> {
    Ok(eigenvalues(m)?
        .into_iter()
        .map(|(re, _)| re)
        .fold(T::neg_infinity(), T::max))
}

/// Reduction to upper Hessenberg form by Householder reflections, in place.
fn hessenberg<T: Scalar>(a: &mut DenseMatrix<T>) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let alpha: T = ((k + 1)..n).map(|i| a[(i, k)] * a[(i, k)]).sum::<T>().sqrt();
        if alpha == T::zero() {
            continue;
        }
        let alpha = if a[(k + 1, k)] > T::zero() { -alpha } else { alpha };
        let mut v = vec![T::zero(); n];
        v[k + 1] = a[(k + 1, k)] - alpha;
        for i in (k + 2)..n {
            v[i] = a[(i, k)];
        }
        let vnorm2: T = v.iter().map(|&x| x * x).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        let beta = T::of(2.0) / vnorm2;
        // A ← (I − βvvᵀ) A
        for j in 0..n {
            let s: T = ((k + 1)..n).map(|i| v[i] * a[(i, j)]).sum();
            let s = s * beta;
            for i in (k + 1)..n {
                a[(i, j)] -= s * v[i];
            }
        }
        // A ← A (I − βvvᵀ)
        for i in 0..n {
            let s: T = ((k + 1)..n).map(|j| a[(i, j)] * v[j]).sum();
            let s = s * beta;
            for j in (k + 1)..n {
                a[(i, j)] -= s * v[j];
            }
        }
        for i in (k + 2)..n {
            a[(i, k)] = T::zero();
        }
    }
}

fn sign<T: Scalar>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix.
#[allow(clippy::many_single_char_names)]
fn hqr<T: Scalar>(mut a: DenseMatrix<T>, cap: usize) -> Result<Vec<(T, T)>> {
    let n = a.rows();
    let mut out = vec![(T::zero(), T::zero()); n];
    let mut anorm = T::zero();
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let half = T::of(0.5);
    let mut nn = n as isize - 1;
    let mut t = T::zero();
    let mut its = 0usize;
    let mut total = 0usize;
    while nn >= 0 {
        let nu = nn as usize;
        let mut l = nu;
        while l >= 1 {
            let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
            if s == T::zero() {
                s = anorm;
            }
            if a[(l, l - 1)].abs() + s == s {
                a[(l, l - 1)] = T::zero();
                break;
            }
            l -= 1;
        }
        let mut x = a[(nu, nu)];
        if l == nu {
            out[nu] = (x + t, T::zero());
            nn -= 1;
            its = 0;
            continue;
        }
        let mut y = a[(nu - 1, nu - 1)];
        let mut w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
        if l == nu - 1 {
            let p = half * (y - x);
            let q = p * p + w;
            let z = q.abs().sqrt();
            x += t;
            if q >= T::zero() {
                let z = p + sign(z, p);
                let hi = x + z;
                let lo = if z != T::zero() { x - w / z } else { hi };
                out[nu - 1] = (hi, T::zero());
                out[nu] = (lo, T::zero());
            } else {
                out[nu - 1] = (x + p, -z);
                out[nu] = (x + p, z);
            }
            nn -= 2;
            its = 0;
            continue;
        }
        if total >= cap {
            return Err(Error::NoConvergence(cap));
        }
        if its == 10 || its == 20 {
            t += x;
            for i in 0..=nu {
                a[(i, i)] -= x;
            }
            let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
            x = T::of(0.75) * s;
            y = x;
            w = T::of(-0.4375) * s * s;
        }
        its += 1;
        total += 1;
        let (mut p, mut q, mut r);
        let mut m = nu - 2;
        loop {
            let z = a[(m, m)];
            let rr = x - z;
            let ss = y - z;
            p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
            q = a[(m + 1, m + 1)] - z - rr - ss;
            r = a[(m + 2, m + 1)];
            let s = p.abs() + q.abs() + r.abs();
            p /= s;
            q /= s;
            r /= s;
            if m == l {
                break;
            }
            let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
            let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
            if u + v == v {
                break;
            }
            m -= 1;
        }
        for i in (m + 2)..=nu {
            a[(i, i - 2)] = T::zero();
            if i != m + 2 {
                a[(i, i - 3)] = T::zero();
            }
        }
        let mut k = m;
        while k < nu {
            if k != m {
                p = a[(k, k - 1)];
                q = a[(k + 1, k - 1)];
                r = if k != nu - 1 { a[(k + 2, k - 1)] } else { T::zero() };
                x = p.abs() + q.abs() + r.abs();
                if x != T::zero() {
                    p /= x;
                    q /= x;
                    r /= x;
                }
            }
            let s = sign((p * p + q * q + r * r).sqrt(), p);
            if s != T::zero() {
                if k == m {
                    if l != m {
                        a[(k, k - 1)] = -a[(k, k - 1)];
                    }
                } else {
                    a[(k, k - 1)] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                for j in k..=nu {
                    let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                    if k != nu - 1 {
                        pp += r * a[(k + 2, j)];
                        a[(k + 2, j)] -= pp * z;
                    }
                    a[(k + 1, j)] -= pp * y;
                    a[(k, j)] -= pp * x;
                }
                let mmin = if nu < k + 3 { nu } else { k + 3 };
                for i in l..=mmin {
                    let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                    if k != nu - 1 {
                        pp += z * a[(i, k + 2)];
                        a[(i, k + 2)] -= pp * r;
                    }
                    a[(i, k + 1)] -= pp * q;
                    a[(i, k)] -= pp;
                }
            }
            k += 1;
        }
    }
    Ok(out)
}
