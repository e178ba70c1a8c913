//! Composite function from weighted partial functions, weight optimization,
//! the sampled level audit, and the outer iteration.

mod audit;
mod outer;
mod text;
mod weights;

pub use audit::{ray_limit, LevelAudit};
pub use outer::{audited_level, outer_loop, quadratic_baseline, quadratic_initializer, OuterConfig};
pub use text::{read_composite, write_composite};
pub use weights::{optimize_weights, WeightNorm, WeightResult};

use crate::error::{Error, Result};
use crate::synthesis::PartialCertificate;
use crate::{Matrix, Poly};

/// One outer iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub lambda: f64,
    pub eta: f64,
    /// Factor applied to every level by the audit.
    pub audit_scale: f64,
    pub failed_subsets: usize,
}

#[derive(Clone, Debug)]
pub struct CompositeCertificate {
    pub weights: Vec<f64>,
    pub v: Poly,
    pub lambda: f64,
    /// Stability margin `η = Σ w_p γ_p`.
    pub eta: f64,
    pub a: Matrix,
    pub b: Matrix,
    pub partials: Vec<PartialCertificate>,
    pub history: Vec<IterationRecord>,
    /// Decay rate does not exceed the weight program's band.
    pub non_certifying: bool,
    /// The weight program was infeasible and uniform weights were used.
    pub degraded_weights: bool,
    /// Labels and reasons of subsets without a certificate.
    pub failed: Vec<(String, String)>,
    pub system_digest: String,
    pub config_digest: String,
    pub seed: u64,
}

impl CompositeCertificate {
    pub fn partial_coverage(&self) -> bool {
        !self.failed.is_empty()
    }

    /// Certificate for a single function and level.
    pub fn from_function(v: Poly, eta: f64) -> Self {
        Self {
            weights: vec![1.0],
            v,
            lambda: 0.0,
            eta,
            a: Matrix::zeros(1, 1),
            b: Matrix::zeros(1, 1),
            partials: Vec::new(),
            history: Vec::new(),
            non_certifying: true,
            degraded_weights: false,
            failed: Vec::new(),
            system_digest: String::new(),
            config_digest: String::new(),
            seed: 0,
        }
    }

    /// Off-diagonal entries of `A − B` are at least `−tol`.
    pub fn metzler_margin(&self) -> f64 {
        let l = self.a.rows();
        let mut m = f64::INFINITY;
        for p in 0..l {
            for r in 0..l {
                if p != r {
                    m = m.min(self.a[(p, r)] - self.b[(p, r)]);
                }
            }
        }
        m
    }
}

fn check_weights(w: &[f64], l: usize) -> Result<()> {
    if w.len() != l {
        return Err(Error::InvalidWeights(format!("{} weights for {l} functions", w.len())));
    }
    if w.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidWeights("weights must be strictly positive".into()));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidWeights(format!("weights sum to {sum}")));
    }
    Ok(())
}

/// `Σ_p w_p V_p`.
pub fn assemble(certs: &[PartialCertificate], w: &[f64]) -> Result<Poly> {
    check_weights(w, certs.len())?;
    let dim = certs.first().map(|c| c.v.dim()).ok_or(Error::NoCertificates)?;
    let mut out = Poly::zero(dim);
    for (c, wp) in certs.iter().zip(w) {
        out.add_scaled(&c.v, *wp);
    }
    Ok(out)
}

/// `Σ_p w_p γ_p`.
pub fn margin(certs: &[PartialCertificate], w: &[f64]) -> f64 {
    certs.iter().zip(w).map(|(c, wp)| wp * c.gamma).sum()
}

/// `L × L` matrices from the certificate rows.
pub fn assemble_rows(certs: &[PartialCertificate]) -> (Matrix, Matrix) {
    let l = certs.len();
    let a = Matrix::from_fn(l, l, |p, r| certs[p].row_a[r]);
    let b = Matrix::from_fn(l, l, |p, r| certs[p].row_b[r]);
    (a, b)
}

/// `Ṽ_c(x) ≤ η`.
pub fn roa_membership(cert: &CompositeCertificate, x: &[f64]) -> bool {
    cert.v.eval(x) <= cert.eta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Subset;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cert(index: usize, v: Poly, gamma: f64, l: usize) -> PartialCertificate {
        PartialCertificate {
            index,
            subset: Subset::new(vec![index], l, 1).unwrap(),
            v,
            gamma,
            nu: 0.0,
            row_a: vec![0.0; l],
            row_b: vec![0.0; l],
            gamma_c: 1.0,
            multipliers: Vec::new(),
            stalled: false,
            history: Vec::new(),
        }
    }

    #[test]
    fn single_function() {
        let v = Poly::var(1, 0).powi(2);
        let c = vec![cert(0, v.clone(), 0.8, 1)];
        assert_eq!(assemble(&c, &[1.0]).unwrap(), v);
        assert_eq!(margin(&c, &[1.0]), 0.8);
    }

    #[test]
    fn margin_arithmetic() {
        let c = vec![cert(0, Poly::var(2, 0).powi(2), 2.0, 2), cert(1, Poly::var(2, 1).powi(2), 4.0, 2)];
        assert_eq!(margin(&c, &[0.5, 0.5]), 3.0);
    }

    #[test]
    fn assembly_is_pointwise_weighted_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c: Vec<PartialCertificate> = (0..3)
            .map(|i| {
                let x = Poly::var(3, i);
                let v = &x.powi(2).scale(rng.random_range(0.5..2.0)) + &x.powi(4).scale(rng.random_range(0.0..1.0));
                cert(i, v, 1.0, 3)
            })
            .collect();
        let w = [0.2, 0.3, 0.5];
        let vc = assemble(&c, &w).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let direct: f64 = c.iter().zip(&w).map(|(c, w)| w * c.v.eval(&x)).sum();
            assert!((vc.eval(&x) - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn weight_violations() {
        let c = vec![cert(0, Poly::var(2, 0).powi(2), 1.0, 2), cert(1, Poly::var(2, 1).powi(2), 1.0, 2)];
        assert!(assemble(&c, &[1.0]).is_err());
        assert!(assemble(&c, &[0.0, 1.0]).is_err());
        assert!(assemble(&c, &[0.6, 0.6]).is_err());
    }

    #[test]
    fn membership_cases() {
        let c = CompositeCertificate::from_function(Poly::var(1, 0).powi(2), 1.0);
        assert!(roa_membership(&c, &[0.0]));
        assert!(!roa_membership(&c, &[2.0]));
        assert!(roa_membership(&c, &[1.0]));
    }
}
