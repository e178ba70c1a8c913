use std::collections::BTreeMap;

use super::expr::{LinPoly, PolyVar, ScalarVar};
use super::program::{DeclKind, PolyKind, Relation, ScalarKind, SosProgram};
use crate::error::{Error, Result};
use crate::numerics::min_eigenvalue;
use crate::poly::Monomial;
use crate::sdp::{self, SdpProblem, SdpSolution, SdpStatus, Term, Tolerances};
use crate::{Matrix, Poly};

/// Where one unknown lives in the compiled problem.
#[derive(Clone, Debug)]
pub enum Slot {
    /// Entry of the free or non-negative scalar block.
    Scalar { block: usize, index: usize },
    /// Gram matrix of an SOS polynomial over `basis`.
    Gram { block: usize, basis: Vec<Monomial> },
    /// Free coefficients of `monomials` starting at `offset` in the free block.
    Coefficients {
        block: usize,
        offset: usize,
        monomials: Vec<Monomial>,
    },
}

/// Recovers named polynomials and scalars from an [`SdpSolution`].
#[derive(Clone, Debug)]
pub struct IndexMap {
    pub scalars: Vec<Slot>,
    pub polys: Vec<Slot>,
    /// Gram block of each declaration; `None` for identities that must vanish.
    pub decls: Vec<Option<Slot>>,
    /// Monomial matched by each equality row (`None` for scalar constraints).
    pub rows: Vec<Option<(usize, Monomial)>>,
}

/// A compiled program ready for [`sdp::solve`].
#[derive(Clone, Debug)]
pub struct Compiled {
    pub problem: SdpProblem,
    pub map: IndexMap,
}

#[derive(Clone, Debug)]
pub struct SosSolution {
    pub status: SdpStatus,
    pub scalars: Vec<f64>,
    pub polys: Vec<Poly>,
    /// Gram matrix per declaration (empty for `Zero` declarations).
    pub grams: Vec<Matrix>,
    /// Largest coefficient mismatch `|expr − bᵀGb|` per declaration.
    pub residuals: Vec<f64>,
    /// Smallest eigenvalue over all Gram matrices.
    pub min_gram_eigenvalue: f64,
    /// Set when some residual exceeds the reconstruction tolerance.
    pub flagged: bool,
}

impl SosSolution {
    pub fn scalar(&self, s: ScalarVar) -> f64 {
        self.scalars[s.0]
    }

    pub fn poly(&self, v: PolyVar) -> &Poly {
        &self.polys[v.0]
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a: f64, &r| a.max(r))
    }
}

/// Absolute reconstruction tolerance, scaled by `1 + ‖fixed part‖_∞`.
pub const RECONSTRUCTION_TOL: f64 = 1e-6;

type Row = BTreeMap<(usize, usize, usize), f64>;

struct Builder {
    rows: Vec<Row>,
    rhs: Vec<f64>,
    labels: Vec<Option<(usize, Monomial)>>,
}

impl Builder {
    fn add(row: &mut Row, key: (usize, usize, usize), v: f64) {
        *row.entry(key).or_insert(0.0) += v;
    }
}

/// Writes the unknown part of `expr` into per-monomial rows with sign `sign`.
fn expand(
    map: &IndexMap,
    expr: &LinPoly,
    sign: f64,
    rows: &mut BTreeMap<Monomial, Row>,
) {
    for (s, a) in &expr.scalar_terms {
        let Slot::Scalar { block, index } = map.scalars[s.0] else { unreachable!() };
        for (m, &c) in a.terms() {
            Builder::add(rows.entry(m.clone()).or_default(), (block, index, index), sign * c);
        }
    }
    for (v, mult) in &expr.poly_terms {
        match &map.polys[v.0] {
            Slot::Gram { block, basis } => {
                for a in 0..basis.len() {
                    for b in a..basis.len() {
                        let base = basis[a].mul(&basis[b]);
                        let f = if a == b { 1.0 } else { 2.0 };
                        for (m, &c) in mult.terms() {
                            Builder::add(rows.entry(base.mul(m)).or_default(), (*block, a, b), sign * f * c);
                        }
                    }
                }
            }
            Slot::Coefficients {
                block,
                offset,
                monomials,
            } => {
                for (k, mk) in monomials.iter().enumerate() {
                    for (m, &c) in mult.terms() {
                        let idx = offset + k;
                        Builder::add(rows.entry(mk.mul(m)).or_default(), (*block, idx, idx), sign * c);
                    }
                }
            }
            Slot::Scalar { .. } => unreachable!(),
        }
    }
}

impl SosProgram {
    /// Compiles to a block SDP: one PSD block per SOS unknown and per SOS
    /// declaration, one free block (free scalars and free coefficients) and
    /// one non-negative block (non-negative scalars and inequality slacks).
    /// Each declaration contributes one equality per monomial.
    pub fn compile(&self) -> Result<Compiled> {
        let mut problem = SdpProblem::new();
        let n_free_scalars = self.scalars.iter().filter(|s| s.kind == ScalarKind::Free).count();
        let n_free_coefs: usize = self
            .polys
            .iter()
            .map(|p| match &p.kind {
                PolyKind::Free { monomials } => monomials.len(),
                PolyKind::Sos { .. } => 0,
            })
            .sum();
        let n_slacks = self
            .scalar_constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let n_nonneg = self.scalars.len() - n_free_scalars + n_slacks;

        let free_block = (n_free_scalars + n_free_coefs > 0).then(|| problem.add_free(n_free_scalars + n_free_coefs));
        let nonneg_block = (n_nonneg > 0).then(|| problem.add_nonneg(n_nonneg));

        let mut free_next = 0;
        let mut nonneg_next = 0;
        let scalars: Vec<Slot> = self
            .scalars
            .iter()
            .map(|s| match s.kind {
                ScalarKind::Free => {
                    free_next += 1;
                    Slot::Scalar {
                        block: free_block.unwrap(),
                        index: free_next - 1,
                    }
                }
                ScalarKind::Nonneg => {
                    nonneg_next += 1;
                    Slot::Scalar {
                        block: nonneg_block.unwrap(),
                        index: nonneg_next - 1,
                    }
                }
            })
            .collect();
        let mut polys = Vec::with_capacity(self.polys.len());
        for p in &self.polys {
            polys.push(match &p.kind {
                PolyKind::Sos { basis } => Slot::Gram {
                    block: if basis.is_empty() { usize::MAX } else { problem.add_psd(basis.len()) },
                    basis: basis.clone(),
                },
                PolyKind::Free { monomials } => {
                    let offset = free_next;
                    free_next += monomials.len();
                    Slot::Coefficients {
                        block: free_block.unwrap_or(usize::MAX),
                        offset,
                        monomials: monomials.clone(),
                    }
                }
            });
        }
        let mut map = IndexMap {
            scalars,
            polys,
            decls: Vec::new(),
            rows: Vec::new(),
        };

        let mut b = Builder {
            rows: Vec::new(),
            rhs: Vec::new(),
            labels: Vec::new(),
        };
        for (d, decl) in self.decls.iter().enumerate() {
            let mut rows: BTreeMap<Monomial, Row> = BTreeMap::new();
            let slot = match decl.kind {
                DeclKind::Sos => {
                    let basis = self.decl_basis(decl);
                    // bᵀGb − (unknown part) = fixed part
                    expand(&map, &decl.expr, -1.0, &mut rows);
                    let block = if basis.is_empty() { usize::MAX } else { problem.add_psd(basis.len()) };
                    for a in 0..basis.len() {
                        for c in a..basis.len() {
                            let f = if a == c { 1.0 } else { 2.0 };
                            Builder::add(rows.entry(basis[a].mul(&basis[c])).or_default(), (block, a, c), f);
                        }
                    }
                    Some(Slot::Gram { block, basis })
                }
                DeclKind::Zero => {
                    // unknown part = −fixed part
                    expand(&map, &decl.expr, 1.0, &mut rows);
                    None
                }
            };
            let sign = if decl.kind == DeclKind::Sos { 1.0 } else { -1.0 };
            for (m, _) in decl.expr.constant.terms() {
                rows.entry(m.clone()).or_default();
            }
            for (m, mut row) in rows {
                row.retain(|_, v| *v != 0.0);
                let rhs = sign * decl.expr.constant.coefficient(&m);
                if row.is_empty() {
                    if rhs != 0.0 {
                        return Err(Error::Unrepresentable {
                            constraint: decl.name.clone(),
                            monomial: m.to_string(),
                        });
                    }
                    continue;
                }
                b.rows.push(row);
                b.rhs.push(rhs);
                b.labels.push(Some((d, m)));
            }
            map.decls.push(slot);
        }

        let mut slack = self.scalars.len() - n_free_scalars;
        for c in &self.scalar_constraints {
            let mut row = Row::new();
            for (s, v) in &c.terms {
                let Slot::Scalar { block, index } = map.scalars[s.0] else { unreachable!() };
                Builder::add(&mut row, (block, index, index), *v);
            }
            let nb = nonneg_block.unwrap_or(usize::MAX);
            match c.relation {
                Relation::Eq => {}
                Relation::Ge => {
                    Builder::add(&mut row, (nb, slack, slack), -1.0);
                    slack += 1;
                }
                Relation::Le => {
                    Builder::add(&mut row, (nb, slack, slack), 1.0);
                    slack += 1;
                }
            }
            row.retain(|_, v| *v != 0.0);
            if row.is_empty() {
                if c.rhs != 0.0 {
                    return Err(Error::Config(format!("scalar constraint `{}` has no unknowns", c.name)));
                }
                continue;
            }
            b.rows.push(row);
            b.rhs.push(c.rhs);
            b.labels.push(None);
        }

        for (row, rhs) in b.rows.into_iter().zip(b.rhs) {
            let terms = row
                .into_iter()
                .map(|((blk, i, j), v)| Term { block: blk, i, j, coef: v })
                .collect();
            problem.add_constraint(terms, rhs);
        }
        map.rows = b.labels;
        let objective = self
            .objective
            .iter()
            .map(|(s, v)| {
                let Slot::Scalar { block, index } = map.scalars[s.0] else { unreachable!() };
                Term::scalar(block, index, *v)
            })
            .collect();
        problem.set_objective(objective);
        problem.validate()?;
        Ok(Compiled { problem, map })
    }

    /// Compiles, solves and extracts.
    pub fn solve(&self, tol: &Tolerances) -> Result<SosSolution> {
        let compiled = self.compile()?;
        let sol = sdp::solve(&compiled.problem, tol)?;
        compiled.extract(self, &sol)
    }
}

/// `bᵀ G b` over `basis`.
pub fn gram_to_poly(dim: usize, basis: &[Monomial], g: &Matrix) -> Poly {
    let mut p = Poly::zero(dim);
    for a in 0..basis.len() {
        for b in a..basis.len() {
            let f = if a == b { 1.0 } else { 2.0 };
            p.add_term(basis[a].mul(&basis[b]), f * g[(a, b)]);
        }
    }
    p
}

impl Compiled {
    /// Rebuilds every unknown from a solution and re-checks each identity.
    ///
    /// Values are extracted for any status; `flagged` reports a residual above
    /// [`RECONSTRUCTION_TOL`].
    pub fn extract(&self, prog: &SosProgram, sol: &SdpSolution) -> Result<SosSolution> {
        let dim = prog.dim();
        let value = |block: usize, i: usize| -> f64 { sol.vector(block)[i] };
        let scalars: Vec<f64> = self
            .map
            .scalars
            .iter()
            .map(|s| match s {
                Slot::Scalar { block, index } => value(*block, *index),
                _ => unreachable!(),
            })
            .collect();
        let mut min_eig = f64::INFINITY;
        let mut polys = Vec::with_capacity(self.map.polys.len());
        for slot in &self.map.polys {
            polys.push(match slot {
                Slot::Gram { block, basis } => {
                    if basis.is_empty() {
                        Poly::zero(dim)
                    } else {
                        let g = sol.matrix(*block);
                        min_eig = min_eig.min(min_eigenvalue(g)?);
                        gram_to_poly(dim, basis, g)
                    }
                }
                Slot::Coefficients {
                    block,
                    offset,
                    monomials,
                } => Poly::from_terms(
                    dim,
                    monomials.iter().enumerate().map(|(k, m)| (m.clone(), value(*block, offset + k))),
                )?,
                Slot::Scalar { .. } => unreachable!(),
            });
        }
        let mut grams = Vec::new();
        let mut residuals = Vec::new();
        let mut flagged = false;
        for (decl, slot) in prog.decls().iter().zip(&self.map.decls) {
            let lhs = decl.expr.evaluate(&scalars, &polys);
            let (gram, rhs) = match slot {
                Some(Slot::Gram { block, basis }) if !basis.is_empty() => {
                    let g = sol.matrix(*block).clone();
                    min_eig = min_eig.min(min_eigenvalue(&g)?);
                    let p = gram_to_poly(dim, basis, &g);
                    (g, p)
                }
                _ => (Matrix::zeros(0, 0), Poly::zero(dim)),
            };
            let r = lhs.max_coefficient_distance(&rhs);
            let scale = 1.0 + decl.expr.constant.max_abs_coefficient();
            flagged |= !(r <= RECONSTRUCTION_TOL * scale);
            grams.push(gram);
            residuals.push(r);
        }
        if !min_eig.is_finite() {
            min_eig = 0.0;
        }
        Ok(SosSolution {
            status: sol.status,
            scalars,
            polys,
            grams,
            residuals,
            min_gram_eigenvalue: min_eig,
            flagged,
        })
    }
}
