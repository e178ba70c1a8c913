use crate::error::Result;
use crate::sdp::{solve, SdpProblem, SdpStatus, Term, Tolerances};
use crate::Matrix;

/// Normalization of the weight vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightNorm {
    /// `Σ w = 1`: the composite is a convex combination.
    Sum,
    /// The `Σ w = 1` optimum rescaled to unit Euclidean norm.
    Euclidean,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightResult {
    pub w: Vec<f64>,
    pub lambda: f64,
    /// `λ ≤ eps`: the decay rate certifies nothing.
    pub non_certifying: bool,
    /// The program was infeasible and uniform weights were used.
    pub degraded: bool,
}

/// `max λ` over `Σw = 1, w ≥ w_min, −eps ≤ (A−B)ᵀw ≤ 0, λ ≤ −wᵀB·1`.
///
/// With `balance = Some(γ)`, ties in `λ` are broken by a second program that
/// keeps `λ` optimal and maximizes `min_p w_p γ_p`.
pub fn optimize_weights(
    a: &Matrix,
    b: &Matrix,
    eps: f64,
    w_min: f64,
    norm: WeightNorm,
    balance: Option<&[f64]>,
) -> Result<WeightResult> {
    let l = a.rows();
    let b_rows: Vec<f64> = (0..l).map(|p| b.row(p).iter().sum()).collect();
    if l == 1 {
        let lambda = -b_rows[0];
        return Ok(WeightResult {
            w: vec![1.0],
            lambda,
            non_certifying: lambda <= eps,
            degraded: false,
        });
    }
    let d = a.sub(b);
    let mut sol = solve_lp(&d, &b_rows, eps, w_min, None)?;
    if let (Some((_, lambda)), Some(gamma)) = (&sol, balance) {
        let floor = lambda - LAMBDA_SLACK * (1.0 + lambda.abs());
        let top = gamma.iter().copied().fold(0.0, f64::max);
        let scaled: Vec<f64> = gamma.iter().map(|g| g / top).collect();
        if let Some(tied) = solve_lp(&d, &b_rows, eps, w_min, Some((floor, &scaled)))? {
            sol = Some(tied);
        }
    }
    let (mut w, mut lambda, degraded) = match sol {
        Some((w, lambda)) => (w, lambda, false),
        None => {
            let w = vec![1.0 / l as f64; l];
            (w, 0.0, true)
        }
    };
    if norm == WeightNorm::Euclidean && !degraded {
        let r = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        w.iter_mut().for_each(|v| *v /= r);
        lambda /= r;
    }
    Ok(WeightResult {
        w,
        lambda,
        non_certifying: lambda <= eps,
        degraded,
    })
}

/// Loss of `λ` accepted by the tie-breaking program, relative to `1 + |λ*|`.
const LAMBDA_SLACK: f64 = 1e-8;

/// Weights are `w = w_min + u` with `u ≥ 0`. `tie = Some((λ_floor, γ))`
/// maximizes `min_p w_p γ_p` subject to `λ ≥ λ_floor` instead of `λ`.
fn solve_lp(
    d: &Matrix,
    b_rows: &[f64],
    eps: f64,
    w_min: f64,
    tie: Option<(f64, &[f64])>,
) -> Result<Option<(Vec<f64>, f64)>> {
    let l = d.rows();
    let mut prob = SdpProblem::new();
    let u = prob.add_nonneg(l);
    let lam = prob.add_free(1);
    let upper = prob.add_nonneg(l);
    let lower = (eps > 0.0).then(|| prob.add_nonneg(l));
    let rate = prob.add_nonneg(1);

    prob.add_constraint((0..l).map(|p| Term::scalar(u, p, 1.0)).collect(), 1.0 - l as f64 * w_min);
    for r in 0..l {
        let col: Vec<Term> = (0..l).map(|p| Term::scalar(u, p, d[(p, r)])).collect();
        let shift = -w_min * (0..l).map(|p| d[(p, r)]).sum::<f64>();
        match lower {
            Some(lower) => {
                let mut t = col.clone();
                t.push(Term::scalar(upper, r, 1.0));
                prob.add_constraint(t, shift);
                let mut t = col;
                t.push(Term::scalar(lower, r, -1.0));
                prob.add_constraint(t, shift - eps);
            }
            None => {
                prob.add_constraint(col, shift);
            }
        }
    }
    let mut t: Vec<Term> = (0..l).map(|p| Term::scalar(u, p, b_rows[p])).collect();
    t.push(Term::scalar(lam, 0, 1.0));
    t.push(Term::scalar(rate, 0, 1.0));
    prob.add_constraint(t, -w_min * b_rows.iter().sum::<f64>());
    match tie {
        None => prob.set_objective(vec![Term::scalar(lam, 0, -1.0)]),
        Some((floor, gamma)) => {
            let gap = prob.add_nonneg(1);
            prob.add_constraint(vec![Term::scalar(lam, 0, 1.0), Term::scalar(gap, 0, -1.0)], floor);
            let level = prob.add_free(1);
            let excess = prob.add_nonneg(l);
            for p in 0..l {
                prob.add_constraint(
                    vec![
                        Term::scalar(u, p, gamma[p]),
                        Term::scalar(level, 0, -1.0),
                        Term::scalar(excess, p, -1.0),
                    ],
                    -w_min * gamma[p],
                );
            }
            prob.set_objective(vec![Term::scalar(level, 0, -1.0)]);
        }
    }

    let sol = solve(&prob, &Tolerances::default())?;
    if sol.status != SdpStatus::Optimal {
        return Ok(None);
    }
    let mut w: Vec<f64> = sol.vector(u).iter().map(|v| w_min + v.max(0.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Ok(Some((w, sol.vector(lam)[0])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row_bypass() {
        let r = optimize_weights(&Matrix::from_rows(&[[-1.0]]), &Matrix::zeros(1, 1), 1e-6, 1e-3, WeightNorm::Sum, None).unwrap();
        assert_eq!(r.w, vec![1.0]);
        assert_eq!(r.lambda, 0.0);
        assert!(r.non_certifying);
        assert!(!r.degraded);
    }

    #[test]
    fn two_row_vertex_oracle() {
        // A − B = [[−1, .5], [.5, −1]], B = −0.2 I: w₁ ∈ [7/15, 8/15], λ* = 0.2
        let b = Matrix::from_rows(&[[-0.2, 0.0], [0.0, -0.2]]);
        let a = Matrix::from_rows(&[[-1.0, 0.5], [0.5, -1.0]]).add(&b);
        let r = optimize_weights(&a, &b, 0.3, 1e-3, WeightNorm::Sum, None).unwrap();
        assert!((r.lambda - 0.2).abs() < 1e-6, "{}", r.lambda);
        assert!((r.w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(r.w[0] >= 7.0 / 15.0 - 1e-6 && r.w[0] <= 8.0 / 15.0 + 1e-6, "{:?}", r.w);
        // uniform weights satisfy the band
        let d = a.sub(&b);
        for c in 0..2 {
            let v = 0.5 * (d[(0, c)] + d[(1, c)]);
            assert!((-0.3..=0.0).contains(&v));
        }
    }

    #[test]
    fn zero_band_forces_equality() {
        let b = Matrix::zeros(2, 2);
        let a = Matrix::from_rows(&[[-1.0, 1.0], [1.0, -1.0]]);
        let r = optimize_weights(&a, &b, 0.0, 1e-3, WeightNorm::Sum, None).unwrap();
        assert!(!r.degraded);
        let d = a.sub(&b);
        for c in 0..2 {
            let v: f64 = (0..2).map(|p| d[(p, c)] * r.w[p]).sum();
            assert!(v.abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn infeasible_band_degrades_to_uniform() {
        // (A − B)ᵀw = w > 0 can never lie in [−eps, 0]
        let a = Matrix::identity(2);
        let r = optimize_weights(&a, &Matrix::zeros(2, 2), 1e-3, 1e-3, WeightNorm::Sum, None).unwrap();
        assert!(r.degraded);
        assert_eq!(r.w, vec![0.5, 0.5]);
        assert_eq!(r.lambda, 0.0);
    }

    #[test]
    fn euclidean_variant_has_unit_norm() {
        let b = Matrix::from_rows(&[[-0.2, 0.0], [0.0, -0.2]]);
        let a = Matrix::from_rows(&[[-1.0, 0.5], [0.5, -1.0]]).add(&b);
        let r = optimize_weights(&a, &b, 0.3, 1e-3, WeightNorm::Euclidean, None).unwrap();
        assert!((r.w.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_favor_balanced_contributions() {
        // decoupled rows: every weight vector gives λ = 0
        let a = Matrix::from_rows(&[[-0.1, 0.0], [0.0, -0.1]]);
        let b = Matrix::zeros(2, 2);
        let r = optimize_weights(&a, &b, 1.0, 1e-3, WeightNorm::Sum, Some(&[1.0, 3.0])).unwrap();
        // w₁γ₁ = w₂γ₂ with w₁ + w₂ = 1
        assert!((r.w[0] - 0.75).abs() < 1e-6, "{:?}", r.w);
        assert!(r.lambda.abs() < 1e-6);
        let g = [3e4, 1e2, 2e5, 4e3, 2e4];
        let a = Matrix::identity(5).scale(-0.1);
        let r = optimize_weights(&a, &Matrix::zeros(5, 5), 10.0, 2e-4, WeightNorm::Sum, Some(&g)).unwrap();
        let c: Vec<f64> = r.w.iter().zip(&g).map(|(w, g)| w * g).collect();
        for v in &c {
            assert!((v / c[0] - 1.0).abs() < 1e-2, "{c:?}");
        }
    }
}
