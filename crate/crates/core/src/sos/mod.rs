//! Sum-of-squares programs compiled to block semidefinite programs.

mod compile;
mod expr;
mod program;

pub use compile::{gram_to_poly, Compiled, IndexMap, Slot, SosSolution, RECONSTRUCTION_TOL};
pub use expr::{LinPoly, PolyVar, ScalarVar};
pub use program::{gram_basis, DeclKind, PolyKind, Relation, ScalarKind, SosDecl, SosProgram};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::min_eigenvalue;
    use crate::poly::{parse_poly, Monomial};
    use crate::sdp::{SdpStatus, Tolerances};
    use crate::{Matrix, Poly};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Terms as `<dim> <exponents…> <coefficient>` lines.
    fn p(text: &str, dim: usize) -> Poly {
        let mut s = format!("poly n={dim}\n");
        for line in text.lines() {
            let f: Vec<&str> = line.split_whitespace().collect();
            s.push_str(&format!("{} {}\n", f[f.len() - 1], f[1..f.len() - 1].join(" ")));
        }
        parse_poly(&s).unwrap()
    }

    fn mono(e: &[u8]) -> Monomial {
        Monomial::from_exponents(e.to_vec())
    }

    fn is_sos(target: &Poly, basis: Option<Vec<Monomial>>) -> SosSolution {
        let mut prog = SosProgram::new(target.dim());
        let e = LinPoly::constant(target.clone());
        match basis {
            Some(b) => prog.require_sos_with_basis("target", e, b),
            None => prog.require_sos("target", e),
        };
        prog.solve(&Tolerances::default()).unwrap()
    }

    #[test]
    fn gram_basis_examples() {
        assert_eq!(gram_basis(2, 2, &[0, 1], true), vec![mono(&[1, 0]), mono(&[0, 1])]);
        assert_eq!(gram_basis(1, 4, &[0], true), vec![mono(&[1]), mono(&[2])]);
        let b = gram_basis(2, 4, &[0, 1], true);
        assert_eq!(b.len(), 5);
        // count oracle: Σ_{d=1..2} C(d+1, 1)
        let count: usize = (1..=2).map(|d| d + 1).sum();
        assert_eq!(b.len(), count);
        assert_eq!(gram_basis(3, 4, &[0, 1, 2], false).len(), 10);
    }

    #[test]
    fn square_of_affine_is_sos() {
        let target = p("1 0 1.0\n1 1 2.0\n1 2 1.0\n", 1);
        let basis = vec![mono(&[0]), mono(&[1])];
        let s = is_sos(&target, Some(basis));
        assert_eq!(s.status, SdpStatus::Optimal);
        let g = &s.grams[0];
        for i in 0..2 {
            for j in 0..2 {
                assert!((g[(i, j)] - 1.0).abs() < 1e-6, "{g:?}");
            }
        }
        assert!(!s.flagged);
    }

    #[test]
    fn negative_constant_is_not_sos() {
        let target = p("1 2 1.0\n1 0 -1.0\n", 1);
        assert_eq!(is_sos(&target, None).status, SdpStatus::Infeasible);
        assert_eq!(is_sos(&target.scale(2.0), None).status, SdpStatus::Infeasible);
    }

    fn motzkin() -> Poly {
        p("2 4 2 1.0\n2 2 4 1.0\n2 2 2 -3.0\n2 0 0 1.0\n", 2)
    }

    #[test]
    fn motzkin_has_separating_functional() {
        let target = motzkin();
        let mut prog = SosProgram::new(2);
        prog.require_sos("motzkin", LinPoly::constant(target.clone()));
        let compiled = prog.compile().unwrap();
        let sol = crate::sdp::solve(&compiled.problem, &Tolerances::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);

        // L(m) = −y_m is a moment functional with L(target) < 0 and a PSD moment matrix.
        let mut moments = std::collections::BTreeMap::new();
        for (row, label) in compiled.map.rows.iter().enumerate() {
            let (_, m) = label.clone().unwrap();
            moments.insert(m, -sol.dual[row]);
        }
        let value: f64 = target.terms().map(|(m, c)| c * moments.get(m).copied().unwrap_or(0.0)).sum();
        assert!(value < -0.5, "L(target) = {value}");
        let Slot::Gram { basis, .. } = compiled.map.decls[0].clone().unwrap() else { panic!() };
        let mm = Matrix::from_fn(basis.len(), basis.len(), |a, b| {
            moments.get(&basis[a].mul(&basis[b])).copied().unwrap_or(0.0)
        });
        let scale = mm.max_abs();
        assert!(min_eigenvalue(&mm).unwrap() >= -1e-6 * scale.max(1.0));

        assert_eq!(is_sos(&target.scale(2.0), None).status, SdpStatus::Infeasible);
    }

    #[test]
    fn motzkin_times_norm_is_sos() {
        // (x² + y² + 1)·M is SOS, the classical certificate of non-negativity.
        let m = motzkin();
        let w = p("2 2 0 1.0\n2 0 2 1.0\n2 0 0 1.0\n", 2);
        let s = is_sos(&m.checked_mul(&w).unwrap(), None);
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!(!s.flagged, "residual {:?}", s.residuals);
    }

    #[test]
    fn unrepresentable_monomial_is_named() {
        let target = p("1 0 1.0\n1 2 1.0\n", 1);
        let mut prog = SosProgram::new(1);
        prog.require_sos_with_basis("t", LinPoly::constant(target), vec![mono(&[1])]);
        let err = prog.compile().unwrap_err().to_string();
        assert!(err.contains("`t`"), "{err}");
        assert!(err.contains("monomial 1 "), "{err}");
    }

    #[test]
    fn manifold_identity_via_multiplier() {
        // target = 2x₂ − x₁² − x₂², h = x₁² + x₂² − 2x₂
        let target = p("2 0 1 2.0\n2 2 0 -1.0\n2 0 2 -1.0\n", 2);
        let h = p("2 2 0 1.0\n2 0 2 1.0\n2 0 1 -2.0\n", 2);
        assert_eq!(is_sos(&target, None).status, SdpStatus::Infeasible);

        let mut prog = SosProgram::new(2);
        let d = prog.require_sos("target", LinPoly::constant(target.clone()));
        let mus = prog.quotient_terms(d, std::slice::from_ref(&h), 0);
        let s = prog.solve(&Tolerances::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!(!s.flagged);
        let mu = s.poly(mus[0]);
        assert!((mu.coefficient(&mono(&[0, 0])) - 1.0).abs() < 1e-6);

        // substitution oracle: on the circle the target equals −μ·h = 0 ≥ 0
        for k in 0..20 {
            let t = k as f64 * 0.3;
            let x = [t.sin(), 1.0 - t.cos()];
            assert!(h.eval(&x).abs() < 1e-12);
            assert!(target.eval(&x) >= -1e-9);
        }
    }

    #[test]
    fn empty_equality_list_leaves_program() {
        let target = p("1 2 1.0\n", 1);
        let mut prog = SosProgram::new(1);
        let d = prog.require_sos("t", LinPoly::constant(target));
        let before = prog.compile().unwrap().problem;
        assert!(prog.quotient_terms(d, &[], 2).is_empty());
        assert_eq!(prog.compile().unwrap().problem, before);
    }

    #[test]
    fn gram_reconstruction_examples() {
        let basis = vec![mono(&[1, 0]), mono(&[0, 1])];
        let q = gram_to_poly(2, &basis, &Matrix::identity(2));
        assert_eq!(q, p("2 2 0 1.0\n2 0 2 1.0\n", 2));
        let basis = vec![mono(&[0]), mono(&[1])];
        let q = gram_to_poly(1, &basis, &Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]));
        assert_eq!(q, p("1 0 1.0\n1 1 2.0\n1 2 1.0\n", 1));
    }

    #[test]
    fn gram_evaluation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let basis = vec![mono(&[0, 0]), mono(&[1, 0]), mono(&[0, 1]), mono(&[1, 1])];
        let f = Matrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
        let g = f.matmul(&f.transpose());
        let q = gram_to_poly(2, &basis, &g);
        for _ in 0..50 {
            let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let b: Vec<f64> = basis.iter().map(|m| m.eval(&x)).collect();
            let direct: f64 = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| b[i] * g[(i, j)] * b[j]).sum();
            assert!((q.eval(&x) - direct).abs() < 1e-9 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn scalar_unknowns_and_objective() {
        // min t s.t. x⁴ − 2x² + t ∈ Σ  →  t* = 1 (global minimum −1)
        let mut prog = SosProgram::new(1);
        let t = prog.scalar("t", ScalarKind::Free);
        let mut e = LinPoly::constant(p("1 4 1.0\n1 2 -2.0\n", 1));
        e.add_scalar(t, &Poly::constant(1, 1.0), 1.0);
        prog.require_sos("lower", e);
        prog.minimize(vec![(t, 1.0)]);
        let s = prog.solve(&Tolerances::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.scalar(t) - 1.0).abs() < 1e-5, "{}", s.scalar(t));
    }

    #[test]
    fn inequality_scalar_constraints() {
        // min t subject to t ≥ 2 and t ≤ 5
        let mut prog = SosProgram::new(1);
        let t = prog.scalar("t", ScalarKind::Free);
        prog.scalar_constraint("lo", vec![(t, 1.0)], Relation::Ge, 2.0);
        prog.scalar_constraint("hi", vec![(t, 1.0)], Relation::Le, 5.0);
        prog.minimize(vec![(t, 1.0)]);
        let s = prog.solve(&Tolerances::default()).unwrap();
        assert!((s.scalar(t) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn sos_unknown_in_product() {
        // find SOS s with s·x² − x⁴ − x² ∈ Σ; e.g. s = 1 + x²
        let mut prog = SosProgram::new(1);
        let s = prog.sos_poly("s", vec![mono(&[0]), mono(&[1])]);
        let mut e = LinPoly::poly(s, p("1 2 1.0\n", 1));
        e.add_constant(&p("1 4 1.0\n1 2 1.0\n", 1), -1.0);
        prog.require_sos("prod", e);
        let sol = prog.solve(&Tolerances::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!(!sol.flagged);
        let sv = sol.poly(s);
        assert!(sv.coefficient(&mono(&[0])) >= 1.0 - 1e-6);
        assert!(sv.coefficient(&mono(&[2])) >= 1.0 - 1e-6);
    }
}
