use std::cmp::Ordering;
use std::fmt;

/// Exponent vector of a monomial in `n` scalar variables.
///
/// Ordering is graded: lower total degree first, and within one degree the
/// lexicographically larger exponent vector first (`x1² < x1·x2 < x2²`).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    exps: Box<[u8]>,
    degree: u32,
}

impl Monomial {
    pub fn one(dim: usize) -> Self {
        Self {
            exps: vec![0; dim].into_boxed_slice(),
            degree: 0,
        }
    }

    pub fn var(dim: usize, index: usize) -> Self {
        let mut exps = vec![0u8; dim];
        exps[index] = 1;
        Self {
            exps: exps.into_boxed_slice(),
            degree: 1,
        }
    }

    pub fn from_exponents(exps: impl Into<Vec<u8>>) -> Self {
        let exps: Vec<u8> = exps.into();
        let degree = exps.iter().map(|&e| u32::from(e)).sum();
        Self {
            exps: exps.into_boxed_slice(),
            degree,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.degree
    }

    #[inline]
    pub fn exponents(&self) -> &[u8] {
        &self.exps
    }

    #[inline]
    pub fn exponent(&self, var: usize) -> u8 {
        self.exps[var]
    }

    pub fn is_one(&self) -> bool {
        self.degree == 0
    }

    /// Product of two monomials of the same dimension.
    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.dim(), other.dim());
        let exps: Vec<u8> = self
            .exps
            .iter()
            .zip(other.exps.iter())
            .map(|(a, b)| a.checked_add(*b).expect("monomial exponent overflow"))
            .collect();
        Monomial {
            exps: exps.into_boxed_slice(),
            degree: self.degree + other.degree,
        }
    }

    /// Partial derivative: returns the exponent that was lowered and the new monomial,
    /// or `None` when the variable does not occur.
    pub fn derivative(&self, var: usize) -> Option<(u8, Monomial)> {
        let e = self.exps[var];
        if e == 0 {
            return None;
        }
        let mut exps = self.exps.clone();
        exps[var] -= 1;
        Some((
            e,
            Monomial {
                exps,
                degree: self.degree - 1,
            },
        ))
    }

    /// True if the monomial only involves variables for which `keep` returns true.
    pub fn supported_on(&self, keep: impl Fn(usize) -> bool) -> bool {
        self.exps
            .iter()
            .enumerate()
            .all(|(i, &e)| e == 0 || keep(i))
    }

    /// `self` divides `other`.
    pub fn divides(&self, other: &Monomial) -> bool {
        self.exps.iter().zip(other.exps.iter()).all(|(a, b)| a <= b)
    }

    pub fn eval<T: num_traits::Float>(&self, x: &[T]) -> T {
        let mut acc = T::one();
        for (xi, &e) in x.iter().zip(self.exps.iter()) {
            if e != 0 {
                acc = acc * xi.powi(i32::from(e));
            }
        }
        acc
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree
            .cmp(&other.degree)
            .then_with(|| other.exps.cmp(&self.exps))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree == 0 {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.exps.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order() {
        let a = Monomial::from_exponents(vec![2, 0]);
        let b = Monomial::from_exponents(vec![1, 1]);
        let c = Monomial::from_exponents(vec![0, 2]);
        let x1 = Monomial::var(2, 0);
        assert!(x1 < a);
        assert!(a < b && b < c);
        assert!(Monomial::one(2) < x1);
    }

    #[test]
    fn derivative_lowers_exponent() {
        let m = Monomial::from_exponents(vec![2, 1]);
        let (e, d) = m.derivative(0).unwrap();
        assert_eq!(e, 2);
        assert_eq!(d.exponents(), &[1, 1]);
        assert!(Monomial::var(2, 0).derivative(1).is_none());
    }

    #[test]
    fn display_uses_one_based_names() {
        assert_eq!(Monomial::from_exponents(vec![2, 0, 1]).to_string(), "x1^2*x3");
    }
}
