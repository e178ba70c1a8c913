//! Sparse multivariate polynomials, subspace projection and monomial bases.

mod compiled;
mod monomial;
mod polynomial;
mod subset;
pub(crate) mod text;

pub use compiled::CompiledPoly;
pub use monomial::Monomial;
pub use polynomial::Polynomial;
pub use subset::Subset;
pub use text::{parse_poly, write_poly};

use crate::error::{Error, Result};
use crate::Scalar;

/// Substitutes zero for every scalar variable of a node outside `keep`.
///
/// Equivalent to composing `p` with `(P ⊗ I_m)` where `P` is the diagonal
/// node-selection matrix of `keep`.
pub fn project<T: Scalar>(p: &Polynomial<T>, keep: &Subset) -> Polynomial<T> {
    p.restrict(|v| keep.contains_var(v))
}

/// `R = V_c − V_p ∘ (P ⊗ I_m)`; `V_p` must only involve variables of `keep`.
pub fn residual<T: Scalar>(
    vc: &Polynomial<T>,
    vp: &Polynomial<T>,
    keep: &Subset,
) -> Result<Polynomial<T>> {
    if let Some(&var) = vp.variables().iter().find(|&&v| !keep.contains_var(v)) {
        return Err(Error::OutsideSubset { var: var + 1 });
    }
    vc.checked_sub(vp)
}

/// All monomials in `vars` whose total degree lies in `degrees`, in graded-lex order.
///
/// The count for one degree `d` over `v` variables is `C(v+d−1, d)`.
pub fn monomial_basis(dim: usize, vars: &[usize], degrees: &[u32]) -> Vec<Monomial> {
    let mut degs: Vec<u32> = degrees.to_vec();
    degs.sort_unstable();
    degs.dedup();
    let mut out = Vec::new();
    for d in degs {
        let mut exps = vec![0u8; dim];
        fill_degree(vars, d, 0, &mut exps, &mut out);
    }
    out
}

fn fill_degree(vars: &[usize], remaining: u32, start: usize, exps: &mut [u8], out: &mut Vec<Monomial>) {
    if remaining == 0 {
        out.push(Monomial::from_exponents(exps.to_vec()));
        return;
    }
    if start >= vars.len() {
        return;
    }
    let v = vars[start];
    // Larger exponents on earlier variables first gives descending lex within a degree.
    for e in (0..=remaining).rev() {
        if start + 1 == vars.len() && e != remaining {
            continue;
        }
        exps[v] = e as u8;
        fill_degree(vars, remaining - e, start + 1, exps, out);
        exps[v] = 0;
    }
}
