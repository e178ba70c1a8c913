use super::PartialProblem;
use crate::poly::{monomial_basis, Monomial};
use crate::sdp::{SdpStatus, Tolerances};
use crate::sos::{gram_basis, LinPoly, PolyVar, ScalarKind, ScalarVar, SosProgram, SosSolution};
use crate::Poly;

/// Restriction of a partial problem to the subset subspace `S_p` (all other
/// nodes at the equilibrium). Every constraint polynomial lives in `vars`.
///
/// The composite snapshot only involves neighborhood variables and the field
/// of a node outside the neighborhood vanishes on `S_p`, so the composite's
/// derivative on `S_p` is exact.
#[derive(Clone, Debug)]
pub struct SubspaceData {
    pub dim: usize,
    pub vars: Vec<usize>,
    /// `f_i` on `S_p` for `i ∈ vars`, zero elsewhere.
    pub field: Vec<Poly>,
    /// Composite function on `S_p`.
    pub composite: Poly,
    /// Its derivative along the full field, on `S_p`.
    pub composite_dot: Poly,
    /// `Σ_{i ∈ vars} x_i²`.
    pub r2: Poly,
    /// Equality constraints of the subset's nodes.
    pub equalities: Vec<Poly>,
    /// Peer functions on `S_p`.
    pub peers: Vec<Poly>,
    /// Degree of the S-procedure multipliers.
    pub mult_degree: u32,
}

impl SubspaceData {
    pub fn new(prob: &PartialProblem<'_>) -> Self {
        let sys = prob.sys;
        let dim = sys.dim();
        let keep = |v: usize| prob.subset.contains_var(v);
        let vars = prob.subset.vars();
        let full_field = sys.field();
        let mut field = vec![Poly::zero(dim); dim];
        for &i in &vars {
            field[i] = full_field[i].restrict(keep);
        }
        let mut composite_dot = Poly::zero(dim);
        for i in prob.neighborhood.vars() {
            let fi = full_field[i].restrict(keep);
            if fi.is_zero() {
                continue;
            }
            let di = prob.composite.derivative(i).restrict(keep);
            if !di.is_zero() {
                composite_dot.add_scaled(&di.checked_mul(&fi).expect("same dimension"), 1.0);
            }
        }
        let equalities = if sys.equalities().is_empty() {
            Vec::new()
        } else {
            prob.subset.nodes().iter().map(|&i| sys.equalities()[i].clone()).collect()
        };
        let field_degree = full_field.iter().map(|f| f.degree()).max().unwrap_or(1);
        Self {
            dim,
            composite: prob.composite.restrict(keep),
            composite_dot,
            r2: Poly::sum_of_squares(dim, vars.iter().copied()),
            equalities,
            peers: prob.peers.iter().map(|p| p.v.restrict(keep)).collect(),
            mult_degree: 2 * field_degree.saturating_sub(1).div_ceil(2).max(1),
            vars,
            field,
        }
    }

    /// `∇v · f` on `S_p` for `v` in the subset variables.
    pub fn lie(&self, v: &Poly) -> Poly {
        let mut out = Poly::zero(self.dim);
        for &i in &self.vars {
            let d = v.derivative(i);
            if !d.is_zero() && !self.field[i].is_zero() {
                out.add_scaled(&d.checked_mul(&self.field[i]).expect("same dimension"), 1.0);
            }
        }
        out
    }

    /// Multiplier basis: degrees `1..=deg/2`, plus the constant when asked.
    pub fn multiplier_basis(&self, with_constant: bool) -> Vec<Monomial> {
        gram_basis(self.dim, self.mult_degree, &self.vars, !with_constant)
    }

    /// Monomials of degree `2..=degree` in the subset variables.
    pub fn function_monomials(&self, degree: u32) -> Vec<Monomial> {
        let degrees: Vec<u32> = (2..=degree).collect();
        monomial_basis(self.dim, &self.vars, &degrees)
    }

    /// Imposes the constraint modulo the subset's equalities.
    fn quotient(&self, prog: &mut SosProgram, decl: usize) {
        if self.equalities.is_empty() {
            return;
        }
        let hi = prog.support_degrees(&prog.decls()[decl].expr).map_or(2, |(_, hi)| hi);
        prog.quotient_terms(decl, &self.equalities, hi.saturating_sub(2));
    }
}

/// Solves and keeps only clean optimal solutions.
pub(crate) fn solve_clean(prog: &SosProgram, tol: &Tolerances) -> Option<SosSolution> {
    match prog.solve(tol) {
        Ok(s) if s.status == SdpStatus::Optimal && !s.flagged => Some(s),
        _ => None,
    }
}

/// `y (V − γ) − V̇ − ε|x|² ∈ Σ`
pub(crate) fn derivative_program(data: &SubspaceData, v: &Poly, gamma: f64, eps: f64) -> (SosProgram, PolyVar) {
    let mut prog = SosProgram::new(data.dim);
    let y = prog.sos_poly("y", data.multiplier_basis(false));
    let mut shifted = v.clone();
    shifted.add_term(Monomial::one(data.dim), -gamma);
    let mut e = LinPoly::poly(y, shifted);
    e.add_constant(&data.lie(v), -1.0);
    e.add_constant(&data.r2, -eps);
    let d = prog.require_sos("derivative", e);
    data.quotient(&mut prog, d);
    (prog, y)
}

/// `s (V − γ + ν|x|²) − (Ṽ_c − γ_c) ∈ Σ`
pub(crate) fn containment_program(
    data: &SubspaceData,
    v: &Poly,
    gamma: f64,
    nu: f64,
    gamma_c: f64,
) -> (SosProgram, PolyVar) {
    let mut prog = SosProgram::new(data.dim);
    let s = prog.sos_poly("s", data.multiplier_basis(true));
    let mut inner = v.clone();
    inner.add_term(Monomial::one(data.dim), -gamma);
    inner.add_scaled(&data.r2, nu);
    let mut e = LinPoly::poly(s, inner);
    e.add_constant(&data.composite, -1.0);
    e.add_constant(&Poly::constant(data.dim, gamma_c), 1.0);
    let d = prog.require_sos("containment", e);
    data.quotient(&mut prog, d);
    (prog, s)
}

/// `l (Ṽ_c − γ_c) − V̇_c − ε|x|² ∈ Σ`
pub(crate) fn composite_level_program(data: &SubspaceData, gamma_c: f64, eps: f64) -> (SosProgram, PolyVar) {
    let mut prog = SosProgram::new(data.dim);
    let l = prog.sos_poly("l", data.multiplier_basis(false));
    let mut shifted = data.composite.clone();
    shifted.add_term(Monomial::one(data.dim), -gamma_c);
    let mut e = LinPoly::poly(l, shifted);
    e.add_constant(&data.composite_dot, -1.0);
    e.add_constant(&data.r2, -eps);
    let d = prog.require_sos("composite_derivative", e);
    data.quotient(&mut prog, d);
    (prog, l)
}

/// Unknowns of the slack-minimization program.
pub(crate) struct NuProgram {
    pub prog: SosProgram,
    pub coefficients: Vec<(ScalarVar, Monomial)>,
    pub nu: ScalarVar,
}

/// `min ν` over `V = Σ c_k m_k` and `ν ≥ 0` with the multipliers `s`, `y`
/// and the level `γ` held fixed.
pub(crate) fn nu_program(
    data: &SubspaceData,
    degree: u32,
    s: &Poly,
    y: &Poly,
    gamma: f64,
    gamma_c: f64,
    eps: f64,
) -> NuProgram {
    let dim = data.dim;
    let mut prog = SosProgram::new(dim);
    let monomials = data.function_monomials(degree);
    let mut v = LinPoly::zero(dim);
    let mut v_dot = LinPoly::zero(dim);
    let mut coefficients = Vec::with_capacity(monomials.len());
    for (k, m) in monomials.into_iter().enumerate() {
        let c = prog.scalar(format!("c{k}"), ScalarKind::Free);
        let mp = Poly::monomial(m.clone(), 1.0);
        v.add_scalar(c, &mp, 1.0);
        v_dot.add_scalar(c, &data.lie(&mp), 1.0);
        coefficients.push((c, m));
    }
    let nu = prog.scalar("nu", ScalarKind::Nonneg);

    prog.require_sos("V", v.clone());

    let mut cont = v.mul_fixed(s);
    cont.add_scalar(nu, &s.checked_mul(&data.r2).expect("same dimension"), 1.0);
    cont.add_constant(s, -gamma);
    cont.add_constant(&data.composite, -1.0);
    cont.add_constant(&Poly::constant(dim, gamma_c), 1.0);
    let d = prog.require_sos("containment", cont);
    data.quotient(&mut prog, d);

    let mut pos = v.clone();
    pos.add_scalar(nu, &data.r2, 1.0);
    pos.add_constant(&data.r2, -eps);
    let d = prog.require_sos("positivity", pos);
    data.quotient(&mut prog, d);

    let mut der = v.mul_fixed(y);
    der.add_constant(y, -gamma);
    der.add_lin(&v_dot, -1.0);
    der.add_constant(&data.r2, -eps);
    let d = prog.require_sos("derivative", der);
    data.quotient(&mut prog, d);

    prog.minimize(vec![(nu, 1.0)]);
    NuProgram {
        prog,
        coefficients,
        nu,
    }
}

/// Unknowns of the row program.
pub(crate) struct RowProgram {
    pub prog: SosProgram,
    /// `d_r = A_pr − B_pr` for `r ≠ p`.
    pub d: Vec<Option<ScalarVar>>,
    pub t: ScalarVar,
    pub beta: ScalarVar,
    pub z: Vec<Option<PolyVar>>,
}

/// Comparison rows for subset `p` at level `γ`:
/// `−V̇_p − ε|x|² + Σ_{r≠p} d_r (V_r − V_p) − t V_p + β Ṽ_c + Σ_r z_r (V_r − γ_r) ∈ Σ`
/// with `d_r, t, β ≥ 0`, minimizing `β`.
pub(crate) fn row_program(
    data: &SubspaceData,
    p: usize,
    v: &Poly,
    gamma: f64,
    peer_gammas: &[f64],
    eps: f64,
) -> RowProgram {
    let dim = data.dim;
    let mut prog = SosProgram::new(dim);
    let mut e = LinPoly::constant(data.lie(v).scale(-1.0));
    e.add_constant(&data.r2, -eps);
    let t = prog.scalar("t", ScalarKind::Nonneg);
    e.add_scalar(t, v, -1.0);
    let beta = prog.scalar("beta", ScalarKind::Nonneg);
    e.add_scalar(beta, &data.composite, 1.0);
    let mut d = vec![None; data.peers.len()];
    let mut z = vec![None; data.peers.len()];
    let basis = data.multiplier_basis(false);
    for r in 0..data.peers.len() {
        let (vr, gr) = if r == p { (v, gamma) } else { (&data.peers[r], peer_gammas[r]) };
        if r != p {
            let dr = prog.scalar(format!("d{}", r + 1), ScalarKind::Nonneg);
            e.add_scalar(dr, &vr.checked_sub(v).expect("same dimension"), 1.0);
            d[r] = Some(dr);
        }
        if !vr.is_zero() {
            let zr = prog.sos_poly(format!("z{}", r + 1), basis.clone());
            let mut shifted = vr.clone();
            shifted.add_term(Monomial::one(dim), -gr);
            e.add_poly(zr, &shifted, 1.0);
            z[r] = Some(zr);
        }
    }
    let decl = prog.require_sos("comparison", e);
    data.quotient(&mut prog, decl);
    prog.minimize(vec![(beta, 1.0)]);
    RowProgram { prog, d, t, beta, z }
}

/// `V ∈ Σ` for a fixed `V`.
pub(crate) fn is_sos(data: &SubspaceData, v: &Poly, tol: &Tolerances) -> bool {
    let mut prog = SosProgram::new(data.dim);
    let d = prog.require_sos("V", LinPoly::constant(v.clone()));
    data.quotient(&mut prog, d);
    solve_clean(&prog, tol).is_some()
}
