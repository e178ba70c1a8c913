use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// Symmetric positive semidefinite matrix of the given order.
    Psd,
    /// Vector with non-negative entries.
    Nonneg,
    /// Unconstrained vector.
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub kind: BlockKind,
    pub size: usize,
}

/// One coefficient of a linear functional. For PSD blocks `(i, j)` addresses the
/// upper triangle (`i ≤ j`) and the coefficient multiplies `X_ij` once; vector
/// blocks use `i = j = index`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub block: usize,
    pub i: usize,
    pub j: usize,
    pub coef: f64,
}

impl Term {
    pub fn psd(block: usize, i: usize, j: usize, coef: f64) -> Self {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        Self { block, i, j, coef }
    }

    pub fn scalar(block: usize, index: usize, coef: f64) -> Self {
        Self {
            block,
            i: index,
            j: index,
            coef,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub terms: Vec<Term>,
    pub rhs: f64,
}

/// `min ⟨C, X⟩` subject to `⟨A_i, X⟩ = b_i` over a product of PSD,
/// non-negative and free blocks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SdpProblem {
    blocks: Vec<Block>,
    objective: Vec<Term>,
    constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, kind: BlockKind, size: usize) -> usize {
        self.blocks.push(Block { kind, size });
        self.blocks.len() - 1
    }

    pub fn add_psd(&mut self, size: usize) -> usize {
        self.add_block(BlockKind::Psd, size)
    }

    pub fn add_nonneg(&mut self, size: usize) -> usize {
        self.add_block(BlockKind::Nonneg, size)
    }

    pub fn add_free(&mut self, size: usize) -> usize {
        self.add_block(BlockKind::Free, size)
    }

    pub fn add_constraint(&mut self, terms: Vec<Term>, rhs: f64) -> usize {
        self.constraints.push(Constraint { terms, rhs });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, terms: Vec<Term>) {
        self.objective = terms;
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn objective(&self) -> &[Term] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub(crate) fn constraints_mut(&mut self) -> &mut Vec<Constraint> {
        &mut self.constraints
    }

    /// Checks that every term addresses an existing entry.
    pub fn validate(&self) -> Result<()> {
        let check = |t: &Term| -> Result<()> {
            let b = self
                .blocks
                .get(t.block)
                .ok_or_else(|| Error::Config(format!("term references missing block {}", t.block)))?;
            let ok = match b.kind {
                BlockKind::Psd => t.i <= t.j && t.j < b.size,
                _ => t.i == t.j && t.i < b.size,
            };
            if !ok || !t.coef.is_finite() {
                return Err(Error::Config(format!(
                    "invalid term ({}, {}, {}) = {} for block of size {}",
                    t.block, t.i, t.j, t.coef, b.size
                )));
            }
            Ok(())
        };
        self.objective.iter().try_for_each(check)?;
        for c in &self.constraints {
            c.terms.iter().try_for_each(check)?;
            if !c.rhs.is_finite() {
                return Err(Error::Config("non-finite right-hand side".into()));
            }
        }
        Ok(())
    }

    /// Evaluates a functional at block values.
    pub fn evaluate(terms: &[Term], values: &[BlockValue]) -> f64 {
        terms
            .iter()
            .map(|t| {
                t.coef
                    * match &values[t.block] {
                        BlockValue::Matrix(m) => m[(t.i, t.j)],
                        BlockValue::Vector(v) => v[t.i],
                    }
            })
            .sum()
    }

    /// Sparse SDPA-like dump for cross-checking with external solvers.
    ///
    /// Line 1 holds the constraint count, line 2 the block count, line 3 the
    /// block sizes (PSD `n`, non-negative `-n`, free `f<n>`), line 4 the
    /// right-hand sides, then `<constraint#> <block#> <i> <j> <value>` entries
    /// with one-based indices; constraint 0 is the objective.
    pub fn to_sdpa(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{}", self.constraints.len()).unwrap();
        writeln!(s, "{}", self.blocks.len()).unwrap();
        let sizes: Vec<String> = self
            .blocks
            .iter()
            .map(|b| match b.kind {
                BlockKind::Psd => b.size.to_string(),
                BlockKind::Nonneg => format!("-{}", b.size),
                BlockKind::Free => format!("f{}", b.size),
            })
            .collect();
        writeln!(s, "{}", sizes.join(" ")).unwrap();
        let rhs: Vec<String> = self.constraints.iter().map(|c| format!("{:.16e}", c.rhs)).collect();
        writeln!(s, "{}", rhs.join(" ")).unwrap();
        let mut emit = |k: usize, terms: &[Term]| {
            for t in terms {
                writeln!(s, "{} {} {} {} {:.16e}", k, t.block + 1, t.i + 1, t.j + 1, t.coef).unwrap();
            }
        };
        emit(0, &self.objective);
        for (k, c) in self.constraints.iter().enumerate() {
            emit(k + 1, &c.terms);
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BlockValue {
    Matrix(Matrix),
    Vector(Vec<f64>),
}

impl BlockValue {
    pub fn as_matrix(&self) -> Option<&Matrix> {
        match self {
            BlockValue::Matrix(m) => Some(m),
            BlockValue::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            BlockValue::Vector(v) => Some(v),
            BlockValue::Matrix(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    /// No feasible point; `dual` holds a normalized improving ray (`bᵀy = 1`).
    Infeasible,
    /// Objective unbounded below; `primal` holds a recession direction.
    Unbounded,
    /// Iteration cap or stall; the best iterate is attached.
    NumericalFailure,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub gap: f64,
    pub feasibility: f64,
    pub psd: f64,
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gap: 1e-7,
            feasibility: 1e-7,
            psd: 1e-8,
            max_iterations: 200,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Primal block values `X`.
    pub primal: Vec<BlockValue>,
    /// Dual slack blocks `Z = C − Σ y_i A_i` (zero for free blocks).
    pub dual_slack: Vec<BlockValue>,
    /// One multiplier per original constraint; dropped redundant rows get zero.
    pub dual: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `⟨X, Z⟩` summed over cone blocks.
    pub gap: f64,
    /// Relative primal residual `‖A x − b‖ / (1 + ‖b‖)`.
    pub primal_residual: f64,
    /// Relative dual residual `‖c − Aᵀy − z‖ / (1 + ‖c‖)`.
    pub dual_residual: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    /// Relative duality gap as used by the stopping rule.
    pub fn relative_gap(&self) -> f64 {
        let scale = 1.0 + self.primal_objective.abs().min(self.dual_objective.abs());
        (self.gap.abs()).max((self.primal_objective - self.dual_objective).abs()) / scale
    }

    /// Optimal, or a failed solve whose best iterate meets `factor`× the tolerances.
    pub fn is_near_optimal(&self, tol: &Tolerances, factor: f64) -> bool {
        match self.status {
            SdpStatus::Optimal => true,
            SdpStatus::NumericalFailure => {
                self.primal_residual <= factor * tol.feasibility
                    && self.dual_residual <= factor * tol.feasibility
                    && self.relative_gap() <= factor * tol.gap
            }
            _ => false,
        }
    }

    pub fn matrix(&self, block: usize) -> &Matrix {
        self.primal[block].as_matrix().expect("block is not a PSD block")
    }

    pub fn vector(&self, block: usize) -> &[f64] {
        self.primal[block].as_vector().expect("block is not a vector block")
    }
}
