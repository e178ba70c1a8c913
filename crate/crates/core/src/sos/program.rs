use std::collections::BTreeSet;

use super::expr::{LinPoly, PolyVar, ScalarVar};
use crate::poly::{monomial_basis, Monomial};
use crate::Poly;

/// Monomials of degree `lo..=⌈max_degree/2⌉` in `vars`, with `lo = 1` when the
/// target vanishes at the origin and `lo = 0` otherwise.
pub fn gram_basis(dim: usize, max_degree: u32, vars: &[usize], vanish_at_origin: bool) -> Vec<Monomial> {
    let lo = u32::from(vanish_at_origin);
    gram_basis_range(dim, lo, max_degree.div_ceil(2), vars)
}

pub(crate) fn gram_basis_range(dim: usize, lo: u32, hi: u32, vars: &[usize]) -> Vec<Monomial> {
    if lo > hi {
        return Vec::new();
    }
    let degrees: Vec<u32> = (lo..=hi).collect();
    monomial_basis(dim, vars, &degrees)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarKind {
    Free,
    Nonneg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Eq,
    /// `Σ aᵢsᵢ ≥ rhs`
    Ge,
    /// `Σ aᵢsᵢ ≤ rhs`
    Le,
}

#[derive(Clone, Debug)]
pub(crate) struct ScalarDecl {
    pub name: String,
    pub kind: ScalarKind,
}

#[derive(Clone, Debug)]
pub enum PolyKind {
    /// `bᵀ G b` with `G ⪰ 0`.
    Sos { basis: Vec<Monomial> },
    /// `Σ c_k m_k` with free coefficients.
    Free { monomials: Vec<Monomial> },
}

#[derive(Clone, Debug)]
pub(crate) struct PolyDecl {
    pub name: String,
    pub kind: PolyKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeclKind {
    /// The expression must be a sum of squares.
    Sos,
    /// The expression must vanish identically.
    Zero,
}

/// One polynomial identity of a program.
#[derive(Clone, Debug)]
pub struct SosDecl {
    pub name: String,
    pub expr: LinPoly,
    pub kind: DeclKind,
    /// Gram basis; `None` selects one from the expression's support.
    pub basis: Option<Vec<Monomial>>,
}

#[derive(Clone, Debug)]
pub(crate) struct ScalarConstraint {
    pub name: String,
    pub terms: Vec<(ScalarVar, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Polynomial identities and linear scalar constraints over scalar and
/// polynomial unknowns, with a linear objective in the scalars (minimized).
#[derive(Clone, Debug)]
pub struct SosProgram {
    dim: usize,
    pub(crate) scalars: Vec<ScalarDecl>,
    pub(crate) polys: Vec<PolyDecl>,
    pub(crate) decls: Vec<SosDecl>,
    pub(crate) scalar_constraints: Vec<ScalarConstraint>,
    pub(crate) objective: Vec<(ScalarVar, f64)>,
}

impl SosProgram {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            scalars: Vec::new(),
            polys: Vec::new(),
            decls: Vec::new(),
            scalar_constraints: Vec::new(),
            objective: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scalar(&mut self, name: impl Into<String>, kind: ScalarKind) -> ScalarVar {
        self.scalars.push(ScalarDecl {
            name: name.into(),
            kind,
        });
        ScalarVar(self.scalars.len() - 1)
    }

    /// SOS polynomial unknown over a Gram basis.
    pub fn sos_poly(&mut self, name: impl Into<String>, basis: Vec<Monomial>) -> PolyVar {
        self.polys.push(PolyDecl {
            name: name.into(),
            kind: PolyKind::Sos { basis },
        });
        PolyVar(self.polys.len() - 1)
    }

    /// Polynomial unknown with free coefficients on the given monomials.
    pub fn free_poly(&mut self, name: impl Into<String>, monomials: Vec<Monomial>) -> PolyVar {
        self.polys.push(PolyDecl {
            name: name.into(),
            kind: PolyKind::Free { monomials },
        });
        PolyVar(self.polys.len() - 1)
    }

    /// Requires `expr ∈ Σ` with an automatically chosen Gram basis.
    pub fn require_sos(&mut self, name: impl Into<String>, expr: LinPoly) -> usize {
        self.push_decl(name.into(), expr, DeclKind::Sos, None)
    }

    pub fn require_sos_with_basis(&mut self, name: impl Into<String>, expr: LinPoly, basis: Vec<Monomial>) -> usize {
        self.push_decl(name.into(), expr, DeclKind::Sos, Some(basis))
    }

    /// Requires `expr ≡ 0`.
    pub fn require_zero(&mut self, name: impl Into<String>, expr: LinPoly) -> usize {
        self.push_decl(name.into(), expr, DeclKind::Zero, None)
    }

    fn push_decl(&mut self, name: String, expr: LinPoly, kind: DeclKind, basis: Option<Vec<Monomial>>) -> usize {
        assert_eq!(expr.dim(), self.dim, "expression dimension differs from the program");
        self.decls.push(SosDecl {
            name,
            expr,
            kind,
            basis,
        });
        self.decls.len() - 1
    }

    pub fn scalar_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(ScalarVar, f64)>,
        relation: Relation,
        rhs: f64,
    ) {
        self.scalar_constraints.push(ScalarConstraint {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
    }

    pub fn minimize(&mut self, terms: Vec<(ScalarVar, f64)>) {
        self.objective = terms;
    }

    pub fn decls(&self) -> &[SosDecl] {
        &self.decls
    }

    pub fn scalar_name(&self, s: ScalarVar) -> &str {
        &self.scalars[s.0].name
    }

    pub fn poly_name(&self, v: PolyVar) -> &str {
        &self.polys[v.0].name
    }

    pub fn poly_kind(&self, v: PolyVar) -> &PolyKind {
        &self.polys[v.0].kind
    }

    /// Makes declaration `decl` hold modulo the ideal of `equalities`: adds a
    /// free multiplier `μ_c` of degree `≤ mult_degree` per equality and
    /// replaces `expr` by `expr + Σ μ_c h_c`. Multipliers live in the variables
    /// of the declaration's expression.
    pub fn quotient_terms(&mut self, decl: usize, equalities: &[Poly], mult_degree: u32) -> Vec<PolyVar> {
        let vars = self.support_vars(&self.decls[decl].expr);
        let monomials = gram_basis_range(self.dim, 0, mult_degree, &vars);
        let mut out = Vec::new();
        for (c, h) in equalities.iter().enumerate() {
            let name = format!("{}.mu{}", self.decls[decl].name, c + 1);
            let mu = self.free_poly(name, monomials.clone());
            self.decls[decl].expr.add_poly(mu, h, 1.0);
            out.push(mu);
        }
        out
    }

    /// Variables that can appear in `expr` for some value of the unknowns.
    pub(crate) fn support_vars(&self, expr: &LinPoly) -> Vec<usize> {
        let mut vars: BTreeSet<usize> = expr.constant.variables().into_iter().collect();
        for (_, a) in &expr.scalar_terms {
            vars.extend(a.variables());
        }
        for (v, m) in &expr.poly_terms {
            vars.extend(m.variables());
            let mons: Vec<&Monomial> = match &self.polys[v.0].kind {
                PolyKind::Sos { basis } => basis.iter().collect(),
                PolyKind::Free { monomials } => monomials.iter().collect(),
            };
            for mono in mons {
                vars.extend((0..self.dim).filter(|&i| mono.exponent(i) > 0));
            }
        }
        vars.into_iter().collect()
    }

    /// Minimum and maximum total degree the expression can attain.
    pub(crate) fn support_degrees(&self, expr: &LinPoly) -> Option<(u32, u32)> {
        let mut lo = u32::MAX;
        let mut hi = 0;
        let mut note = |p: &Poly, add_lo: u32, add_hi: u32| {
            if !p.is_zero() {
                lo = lo.min(p.min_degree() + add_lo);
                hi = hi.max(p.degree() + add_hi);
            }
        };
        note(&expr.constant, 0, 0);
        for (_, a) in &expr.scalar_terms {
            note(a, 0, 0);
        }
        for (v, m) in &expr.poly_terms {
            let (vlo, vhi) = match &self.polys[v.0].kind {
                PolyKind::Sos { basis } => {
                    let (l, h) = degree_range(basis);
                    (2 * l, 2 * h)
                }
                PolyKind::Free { monomials } => degree_range(monomials),
            };
            if vlo <= vhi {
                note(m, vlo, vhi);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// The Gram basis used for declaration `decl`.
    pub(crate) fn decl_basis(&self, decl: &SosDecl) -> Vec<Monomial> {
        if let Some(b) = &decl.basis {
            return b.clone();
        }
        match self.support_degrees(&decl.expr) {
            Some((lo, hi)) => {
                let vars = self.support_vars(&decl.expr);
                gram_basis_range(self.dim, lo / 2, hi.div_ceil(2), &vars)
            }
            None => Vec::new(),
        }
    }
}

fn degree_range(monomials: &[Monomial]) -> (u32, u32) {
    let lo = monomials.iter().map(|m| m.degree()).min().unwrap_or(1);
    let hi = monomials.iter().map(|m| m.degree()).max().unwrap_or(0);
    (lo, hi)
}
