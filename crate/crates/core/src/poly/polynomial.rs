use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::Monomial;
use crate::error::{Error, Result};
use crate::Scalar;

/// Sparse multivariate polynomial with real coefficients.
///
/// Terms are kept in graded-lex order and coefficients below
/// [`Scalar::prune_threshold`] are dropped after every arithmetic operation.
#[derive(Clone, PartialEq)]
pub struct Polynomial<T: Scalar> {
    dim: usize,
    terms: BTreeMap<Monomial, T>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: T) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(Monomial::one(dim), c);
        p
    }

    /// The coordinate polynomial `x_index` (zero-based).
    pub fn var(dim: usize, index: usize) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(Monomial::var(dim, index), T::one());
        p
    }

    pub fn monomial(m: Monomial, c: T) -> Self {
        let mut p = Self::zero(m.dim());
        p.add_term(m, c);
        p
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Monomial, T)>) -> Result<Self> {
        let mut p = Self::zero(dim);
        for (m, c) in terms {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    /// Sum of squares of the listed coordinates, `Σ x_i²`.
    pub fn sum_of_squares(dim: usize, vars: impl IntoIterator<Item = usize>) -> Self {
        let mut p = Self::zero(dim);
        for v in vars {
            let mut e = vec![0u8; dim];
            e[v] = 2;
            p.add_term(Monomial::from_exponents(e), T::one());
        }
        p
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &T)> {
        self.terms.iter()
    }

    pub fn monomials(&self) -> impl Iterator<Item = &Monomial> {
        self.terms.keys()
    }

    pub fn coefficient(&self, m: &Monomial) -> T {
        self.terms.get(m).copied().unwrap_or_else(T::zero)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Lowest total degree among the stored terms (0 for the zero polynomial).
    pub fn min_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).min().unwrap_or(0)
    }

    pub fn max_abs_coefficient(&self) -> T {
        self.terms
            .values()
            .fold(T::zero(), |acc, c| acc.max(c.abs()))
    }

    /// Accumulates `c·m`, pruning the term if it cancels.
    pub fn add_term(&mut self, m: Monomial, c: T) {
        debug_assert_eq!(m.dim(), self.dim);
        let thr = T::prune_threshold();
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                if c.abs() >= thr {
                    v.insert(c);
                }
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s.abs() < thr {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -*c);
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        // Accumulate unpruned, then prune once, so intermediate cancellations are exact.
        let mut acc: BTreeMap<Monomial, T> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                *acc.entry(ma.mul(mb)).or_insert_with(T::zero) += *ca * *cb;
            }
        }
        let thr = T::prune_threshold();
        acc.retain(|_, c| c.abs() >= thr);
        Ok(Self {
            dim: self.dim,
            terms: acc,
        })
    }

    pub fn scale(&self, s: T) -> Self {
        let thr = T::prune_threshold();
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), *c * s))
                .filter(|(_, c)| c.abs() >= thr)
                .collect(),
        }
    }

    /// `self += s · other`.
    pub fn add_scaled(&mut self, other: &Self, s: T) {
        assert_eq!(self.dim, other.dim, "polynomial dimension mismatch");
        for (m, c) in &other.terms {
            self.add_term(m.clone(), *c * s);
        }
    }

    /// Multiplies by a monomial.
    pub fn mul_monomial(&self, m: &Monomial, c: T) -> Self {
        let mut out = Self::zero(self.dim);
        for (mm, cc) in &self.terms {
            out.add_term(mm.mul(m), *cc * c);
        }
        out
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut out = Self::constant(self.dim, T::one());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (m, c) in &self.terms {
            if let Some((e, dm)) = m.derivative(var) {
                out.add_term(dm, *c * T::of(f64::from(e)));
            }
        }
        out
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.dim).map(|i| self.derivative(i)).collect()
    }

    /// `∇V · field`, the derivative of `self` along the vector field.
    pub fn lie_derivative(&self, field: &[Self]) -> Result<Self> {
        if field.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: field.len(),
            });
        }
        let mut out = Self::zero(self.dim);
        for (j, fj) in field.iter().enumerate() {
            self.check_dim(fj)?;
            let d = self.derivative(j);
            if d.is_zero() || fj.is_zero() {
                continue;
            }
            out = out.checked_add(&d.checked_mul(fj)?)?;
        }
        Ok(out)
    }

    pub fn eval(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.dim);
        self.terms
            .iter()
            .fold(T::zero(), |acc, (m, c)| acc + *c * m.eval(x))
    }

    /// Keeps only terms whose monomials avoid every variable with `keep(var) == false`,
    /// i.e. substitutes zero for those variables.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Self {
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.supported_on(&keep))
                .map(|(m, c)| (m.clone(), *c))
                .collect(),
        }
    }

    /// Variables that appear in at least one term.
    pub fn variables(&self) -> Vec<usize> {
        let mut used = vec![false; self.dim];
        for m in self.terms.keys() {
            for (i, &e) in m.exponents().iter().enumerate() {
                if e != 0 {
                    used[i] = true;
                }
            }
        }
        used.iter()
            .enumerate()
            .filter_map(|(i, &u)| u.then_some(i))
            .collect()
    }

    /// Substitutes `x_i ← replacement[i]` for every variable.
    pub fn compose(&self, replacement: &[Self]) -> Result<Self> {
        if replacement.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: replacement.len(),
            });
        }
        let out_dim = replacement.first().map_or(self.dim, Polynomial::dim);
        let mut out = Self::zero(out_dim);
        for (m, c) in &self.terms {
            let mut term = Self::constant(out_dim, *c);
            for (i, &e) in m.exponents().iter().enumerate() {
                for _ in 0..e {
                    term = term.checked_mul(&replacement[i])?;
                }
            }
            out = out.checked_add(&term)?;
        }
        Ok(out)
    }

    /// Componentwise conversion to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Polynomial<U> {
        let mut out = Polynomial::<U>::zero(self.dim);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), U::of(c.as_f64()));
        }
        out
    }

    /// Largest coefficient difference against `other` (missing terms count as zero).
    pub fn max_coefficient_distance(&self, other: &Self) -> T {
        let mut d = T::zero();
        for (m, c) in &self.terms {
            d = d.max((*c - other.coefficient(m)).abs());
        }
        for (m, c) in &other.terms {
            if !self.terms.contains_key(m) {
                d = d.max(c.abs());
            }
        }
        d
    }
}

impl<T: Scalar> fmt::Debug for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<T: Scalar> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let sign = if *c < T::zero() { "-" } else { "+" };
            if i == 0 {
                if *c < T::zero() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if m.is_one() {
                write!(f, "{}", c.abs())?;
            } else {
                write!(f, "{}*{}", c.abs(), m)?;
            }
        }
        Ok(())
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl<'a, T: Scalar> $tr<&'a Polynomial<T>> for &'a Polynomial<T> {
            type Output = Polynomial<T>;
            fn $method(self, rhs: &'a Polynomial<T>) -> Polynomial<T> {
                self.$checked(rhs).expect("polynomial dimension mismatch")
            }
        }
        impl<T: Scalar> $tr<Polynomial<T>> for Polynomial<T> {
            type Output = Polynomial<T>;
            fn $method(self, rhs: Polynomial<T>) -> Polynomial<T> {
                self.$checked(&rhs).expect("polynomial dimension mismatch")
            }
        }
        impl<'a, T: Scalar> $tr<&'a Polynomial<T>> for Polynomial<T> {
            type Output = Polynomial<T>;
            fn $method(self, rhs: &'a Polynomial<T>) -> Polynomial<T> {
                self.$checked(rhs).expect("polynomial dimension mismatch")
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl<T: Scalar> Neg for Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        self.scale(-T::one())
    }
}

impl<T: Scalar> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        self.scale(-T::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Poly;

    fn x(i: usize) -> Poly {
        Poly::var(2, i)
    }

    #[test]
    fn binomial_square() {
        let s = &x(0) + &x(1);
        let sq = &s * &s;
        assert_eq!(sq.len(), 3);
        assert_eq!(sq.coefficient(&Monomial::from_exponents(vec![2, 0])), 1.0);
        assert_eq!(sq.coefficient(&Monomial::from_exponents(vec![1, 1])), 2.0);
        assert_eq!(sq.coefficient(&Monomial::from_exponents(vec![0, 2])), 1.0);
    }

    #[test]
    fn identity_and_cancellation() {
        let p = &(&x(0) * &x(0)) + &x(1).scale(3.0);
        assert_eq!(&p + &Poly::zero(2), p);
        let sq = &x(0) * &x(0);
        let z = &sq - &sq;
        assert!(z.is_zero());
        assert_eq!(z.len(), 0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = Poly::var(2, 0);
        let b = Poly::var(3, 0);
        assert!(matches!(
            a.checked_add(&b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(a.checked_mul(&b).is_err());
        assert!(a.lie_derivative(&[Poly::zero(2)]).is_err());
    }

    #[test]
    fn lie_derivative_examples() {
        // V = x², field = −x
        let v = Poly::var(1, 0).powi(2);
        let f = vec![-Poly::var(1, 0)];
        let d = v.lie_derivative(&f).unwrap();
        assert_eq!(d, Poly::var(1, 0).powi(2).scale(-2.0));

        // rotation conserves the circle
        let v = &x(0).powi(2) + &x(1).powi(2);
        let f = vec![-x(1), x(0)];
        assert!(v.lie_derivative(&f).unwrap().is_zero());

        // V = x1² x2, field (x2, x1) → 2 x1 x2² + x1³
        let v = &x(0).powi(2) * &x(1);
        let f = vec![x(1), x(0)];
        let expect = &(&x(0) * &x(1).powi(2)).scale(2.0) + &x(0).powi(3);
        assert_eq!(v.lie_derivative(&f).unwrap(), expect);
    }

    #[test]
    fn tiny_coefficients_are_pruned() {
        let p = x(0).scale(1e-13);
        assert!(p.is_zero());
        let mut q = x(0);
        q.add_term(Monomial::var(2, 0), -1.0 + 1e-14);
        assert!(q.is_zero());
    }

    #[test]
    fn generic_over_f32() {
        let a = crate::poly::Polynomial::<f32>::var(2, 0);
        let b = crate::poly::Polynomial::<f32>::var(2, 1);
        let p = &(&a + &b) * &(&a - &b);
        assert_eq!(p.eval(&[3.0, 2.0]), 5.0);
    }

    #[test]
    fn compose_substitutes() {
        // p(x1,x2) = x1*x2 with x1 <- x1 + 1, x2 <- x2
        let p = &x(0) * &x(1);
        let one = Poly::constant(2, 1.0);
        let q = p.compose(&[&x(0) + &one, x(1)]).unwrap();
        assert_eq!(q, &(&x(0) * &x(1)) + &x(1));
    }
}
