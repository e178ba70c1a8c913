use crate::Poly;

/// Handle to a scalar unknown of an [`SosProgram`](super::SosProgram).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScalarVar(pub(crate) usize);

/// Handle to a polynomial unknown of an [`SosProgram`](super::SosProgram).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolyVar(pub(crate) usize);

impl ScalarVar {
    pub fn index(self) -> usize {
        self.0
    }
}

impl PolyVar {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Polynomial expression affine in the unknowns:
/// `c(x) + Σ s_i·a_i(x) + Σ P_j(x)·m_j(x)` with fixed `c`, `a_i`, `m_j`.
///
/// Products of two unknowns cannot be formed, so every expression is affine
/// by construction.
#[derive(Clone, Debug)]
pub struct LinPoly {
    pub(crate) constant: Poly,
    pub(crate) scalar_terms: Vec<(ScalarVar, Poly)>,
    pub(crate) poly_terms: Vec<(PolyVar, Poly)>,
}

impl LinPoly {
    pub fn zero(dim: usize) -> Self {
        Self::constant(Poly::zero(dim))
    }

    pub fn constant(p: Poly) -> Self {
        Self {
            constant: p,
            scalar_terms: Vec::new(),
            poly_terms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.constant.dim()
    }

    /// `s · a(x)`.
    pub fn scalar(s: ScalarVar, a: Poly) -> Self {
        let mut e = Self::zero(a.dim());
        e.add_scalar(s, &a, 1.0);
        e
    }

    /// `P(x) · m(x)`.
    pub fn poly(v: PolyVar, m: Poly) -> Self {
        let mut e = Self::zero(m.dim());
        e.add_poly(v, &m, 1.0);
        e
    }

    pub fn fixed_part(&self) -> &Poly {
        &self.constant
    }

    pub fn add_constant(&mut self, p: &Poly, scale: f64) -> &mut Self {
        self.constant.add_scaled(p, scale);
        self
    }

    pub fn add_scalar(&mut self, s: ScalarVar, a: &Poly, scale: f64) -> &mut Self {
        match self.scalar_terms.iter_mut().find(|(v, _)| *v == s) {
            Some((_, p)) => p.add_scaled(a, scale),
            None => self.scalar_terms.push((s, a.scale(scale))),
        }
        self
    }

    pub fn add_poly(&mut self, v: PolyVar, m: &Poly, scale: f64) -> &mut Self {
        match self.poly_terms.iter_mut().find(|(w, _)| *w == v) {
            Some((_, p)) => p.add_scaled(m, scale),
            None => self.poly_terms.push((v, m.scale(scale))),
        }
        self
    }

    /// `self += scale · other`.
    pub fn add_lin(&mut self, other: &LinPoly, scale: f64) -> &mut Self {
        self.constant.add_scaled(&other.constant, scale);
        for (s, a) in &other.scalar_terms {
            self.add_scalar(*s, a, scale);
        }
        for (v, m) in &other.poly_terms {
            self.add_poly(*v, m, scale);
        }
        self
    }

    /// Multiplies every term by a fixed polynomial.
    pub fn mul_fixed(&self, f: &Poly) -> LinPoly {
        let mul = |p: &Poly| p.checked_mul(f).expect("dimension mismatch in LinPoly::mul_fixed");
        LinPoly {
            constant: mul(&self.constant),
            scalar_terms: self.scalar_terms.iter().map(|(s, a)| (*s, mul(a))).collect(),
            poly_terms: self.poly_terms.iter().map(|(v, m)| (*v, mul(m))).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> LinPoly {
        let mut out = LinPoly::zero(self.dim());
        out.add_lin(self, c);
        out
    }

    pub fn scalar_vars(&self) -> impl Iterator<Item = ScalarVar> + '_ {
        self.scalar_terms.iter().map(|(s, _)| *s)
    }

    pub fn poly_vars(&self) -> impl Iterator<Item = PolyVar> + '_ {
        self.poly_terms.iter().map(|(v, _)| *v)
    }

    /// Substitutes values for every unknown.
    pub fn evaluate(&self, scalars: &[f64], polys: &[Poly]) -> Poly {
        let mut out = self.constant.clone();
        for (s, a) in &self.scalar_terms {
            out.add_scaled(a, scalars[s.0]);
        }
        for (v, m) in &self.poly_terms {
            let prod = polys[v.0].checked_mul(m).expect("dimension mismatch in LinPoly::evaluate");
            out.add_scaled(&prod, 1.0);
        }
        out
    }
}
