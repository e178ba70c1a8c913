use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Model, NetworkSystem};
use crate::error::{Error, Result};
use crate::numerics::gen_eig_max_real;
use crate::{Matrix, Poly};

const PATTERN_TOL: f64 = 1e-9;

/// Coupled Ising oscillators `φ̇_i = Σ_j K_ij sin(φ_j − φ_i) − μ sin 2φ_i`
/// around the phase-locked equilibrium `pattern ∈ {0, π}^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingConfig {
    pub adjacency: Vec<Vec<f64>>,
    pub mu: f64,
    pub pattern: Vec<f64>,
}

impl IsingConfig {
    /// Ring of `n` nodes with `K = −1` on ring edges.
    pub fn ring(n: usize, mu: f64, pattern: Vec<f64>) -> Self {
        let mut k = vec![vec![0.0; n]; n];
        if n > 1 {
            for i in 0..n {
                let j = (i + 1) % n;
                if i != j {
                    k[i][j] = -1.0;
                    k[j][i] = -1.0;
                }
            }
        }
        Self {
            adjacency: k,
            mu,
            pattern,
        }
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::Config("Ising network needs at least one node".into()));
        }
        if self.adjacency.iter().any(|r| r.len() != n) || self.pattern.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.pattern.len(),
            });
        }
        for i in 0..n {
            if self.adjacency[i][i] != 0.0 {
                return Err(Error::Config("Ising adjacency must have a zero diagonal".into()));
            }
            for j in 0..n {
                if self.adjacency[i][j] != self.adjacency[j][i] {
                    return Err(Error::Config("Ising adjacency must be symmetric".into()));
                }
            }
        }
        if !(self.mu >= 0.0) {
            return Err(Error::Config("regularization μ must be non-negative".into()));
        }
        for (i, &p) in self.pattern.iter().enumerate() {
            if p.abs() > PATTERN_TOL && (p - PI).abs() > PATTERN_TOL {
                return Err(Error::InvalidPhasePattern(format!(
                    "entry {} is {p}, expected 0 or π",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// `cos(φ*_j − φ*_i) ∈ {±1}`
    fn sign(&self, i: usize, j: usize) -> f64 {
        if is_pi(self.pattern[i]) == is_pi(self.pattern[j]) {
            1.0
        } else {
            -1.0
        }
    }
}

fn is_pi(p: f64) -> bool {
    (p - PI).abs() <= PATTERN_TOL
}

/// Pattern from bits: `true` maps to π.
pub fn pattern_from_bits(bits: &[bool]) -> Vec<f64> {
    bits.iter().map(|&b| if b { PI } else { 0.0 }).collect()
}

pub fn alternating_pattern(n: usize) -> Vec<f64> {
    (0..n).map(|i| if i % 2 == 1 { PI } else { 0.0 }).collect()
}

/// Lifts phase deviations into `x_i = (sin φ̃_i, 1 − cos φ̃_i)` and shifts the
/// equilibrium to the origin.
pub fn build_ising(cfg: &IsingConfig) -> Result<NetworkSystem> {
    cfg.validate()?;
    let n = cfg.n();
    let dim = 2 * n;
    let x = |i: usize, c: usize| Poly::var(dim, 2 * i + c);
    let one = Poly::constant(dim, 1.0);
    let cos = |i: usize| &one - &x(i, 1);
    let mut field = Vec::with_capacity(dim);
    let mut equalities = Vec::with_capacity(n);
    for i in 0..n {
        let mut phi_dot = (&x(i, 0) * &cos(i)).scale(-2.0 * cfg.mu);
        for j in 0..n {
            let kij = cfg.adjacency[i][j];
            if j == i || kij == 0.0 {
                continue;
            }
            // sin(φ̃_j − φ̃_i)
            let s = &(&x(j, 0) * &cos(i)) - &(&cos(j) * &x(i, 0));
            phi_dot = &phi_dot + &s.scale(kij * cfg.sign(i, j));
        }
        field.push(&cos(i) * &phi_dot);
        field.push(&x(i, 0) * &phi_dot);
        equalities.push(&(&x(i, 0).powi(2) + &x(i, 1).powi(2)) - &x(i, 1).scale(2.0));
    }
    NetworkSystem::new(
        n,
        2,
        field,
        cfg.adjacency.clone(),
        equalities,
        lift_phases(&cfg.pattern),
        Model::Ising(cfg.clone()),
    )
}

/// Phase dynamics in deviation coordinates `φ̃ = φ − φ*`.
pub fn phase_field(cfg: &IsingConfig, dev: &[f64], out: &mut [f64]) {
    let n = cfg.n();
    for i in 0..n {
        let pi = cfg.pattern[i] + dev[i];
        let mut v = -cfg.mu * (2.0 * pi).sin();
        for (j, &kij) in cfg.adjacency[i].iter().enumerate() {
            if j != i && kij != 0.0 {
                v += kij * (cfg.pattern[j] + dev[j] - pi).sin();
            }
        }
        out[i] = v;
    }
}

/// Jacobian of the phase dynamics at the equilibrium.
pub fn phase_jacobian(cfg: &IsingConfig) -> Matrix {
    let n = cfg.n();
    let mut j = Matrix::zeros(n, n);
    for i in 0..n {
        let mut diag = -2.0 * cfg.mu;
        for k in 0..n {
            if k != i && cfg.adjacency[i][k] != 0.0 {
                let w = cfg.adjacency[i][k] * cfg.sign(i, k);
                j[(i, k)] = w;
                diag -= w;
            }
        }
        j[(i, i)] = diag;
    }
    j
}

/// `H = −Σ_i Σ_{j≠i} K_ij cos(φ_i − φ_j)`
pub fn ising_energy(cfg: &IsingConfig, phases: &[f64]) -> f64 {
    let n = cfg.n();
    let mut h = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && cfg.adjacency[i][j] != 0.0 {
                h -= cfg.adjacency[i][j] * (phases[i] - phases[j]).cos();
            }
        }
    }
    h
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equilibrium {
    pub pattern: Vec<f64>,
    pub energy: f64,
    pub lambda_max: f64,
}

/// Uniformly random `{0, π}^N` patterns, deduplicated up to a global flip
/// (the first node is normalized to phase 0).
pub fn sample_equilibria(cfg: &IsingConfig, count: usize, seed: u64) -> Result<Vec<Equilibrium>> {
    let n = cfg.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let distinct = if n >= 64 { usize::MAX } else { 1usize << (n - 1) };
    let target = count.min(distinct);
    let mut attempts = 0;
    while out.len() < target && attempts < 50 * count.max(1) {
        attempts += 1;
        let mut bits: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        if bits[0] {
            bits.iter_mut().for_each(|b| *b = !*b);
        }
        if !seen.insert(bits.clone()) {
            continue;
        }
        let eq_cfg = IsingConfig {
            pattern: pattern_from_bits(&bits),
            ..cfg.clone()
        };
        let lambda_max = gen_eig_max_real(&phase_jacobian(&eq_cfg))?;
        out.push(Equilibrium {
            energy: ising_energy(cfg, &eq_cfg.pattern),
            pattern: eq_cfg.pattern,
            lambda_max,
        });
    }
    Ok(out)
}

/// `(sin φ_i, 1 − cos φ_i)` per node.
pub fn lift_phases(phases: &[f64]) -> Vec<f64> {
    phases
        .iter()
        .flat_map(|&p| [p.sin(), 1.0 - p.cos()])
        .collect()
}

/// Inverse of [`lift_phases`] on the constraint manifold, phases in `(−π, π]`.
pub fn chart_phases(x: &[f64]) -> Vec<f64> {
    x.chunks_exact(2).map(|c| c[0].atan2(1.0 - c[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn two_node(mu: f64, pattern: Vec<f64>) -> IsingConfig {
        IsingConfig {
            adjacency: vec![vec![0.0, -1.0], vec![-1.0, 0.0]],
            mu,
            pattern,
        }
    }

    #[test]
    fn two_node_expansion() {
        let mu = 1.6;
        let sys = build_ising(&two_node(mu, vec![0.0, 0.0])).unwrap();
        let x = |v: usize| Poly::var(4, v);
        let one = Poly::constant(4, 1.0);
        let s = &(&x(2) * &(&one - &x(1))) - &(&(&one - &x(3)) * &x(0));
        let phi1 = &(-s) - &(&x(0) * &(&one - &x(1))).scale(2.0 * mu);
        assert!(sys.field()[0].max_coefficient_distance(&(&(&one - &x(1)) * &phi1)) < 1e-14);
        assert!(sys.field()[1].max_coefficient_distance(&(&x(0) * &phi1)) < 1e-14);
    }

    #[test]
    fn field_matches_phase_dynamics() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = IsingConfig::ring(5, 0.7, pattern_from_bits(&[false, true, true, false, true]));
        let sys = build_ising(&cfg).unwrap();
        for _ in 0..20 {
            let th: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            let x = lift_phases(&th);
            let mut dx = vec![0.0; 10];
            sys.eval_field(&x, &mut dx);
            let phi: Vec<f64> = th.iter().zip(&cfg.pattern).map(|(a, b)| a + b).collect();
            for i in 0..5 {
                let mut rate = -cfg.mu * (2.0 * phi[i]).sin();
                for j in 0..5 {
                    rate += cfg.adjacency[i][j] * (phi[j] - phi[i]).sin();
                }
                assert!((dx[2 * i] - th[i].cos() * rate).abs() < 1e-12);
                assert!((dx[2 * i + 1] - th[i].sin() * rate).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_invalid_pattern() {
        assert!(matches!(
            build_ising(&two_node(1.0, vec![0.0, 1.0])),
            Err(Error::InvalidPhasePattern(_))
        ));
    }

    #[test]
    fn ring_energies() {
        let n = 30;
        let zeros = IsingConfig::ring(n, 0.0, vec![0.0; n]);
        assert!((ising_energy(&zeros, &vec![0.0; n]) - 60.0).abs() < 1e-12);
        let alt = alternating_pattern(n);
        assert!((ising_energy(&zeros, &alt) + 60.0).abs() < 1e-12);
        let empty = IsingConfig {
            adjacency: vec![vec![0.0; n]; n],
            ..zeros.clone()
        };
        assert_eq!(ising_energy(&empty, &alt), 0.0);
        let flipped: Vec<f64> = alt.iter().map(|p| p + PI).collect();
        assert!((ising_energy(&zeros, &flipped) - ising_energy(&zeros, &alt)).abs() < 1e-12);
    }

    #[test]
    fn phase_jacobian_shift() {
        let base = IsingConfig::ring(10, 0.0, alternating_pattern(10));
        let l0 = gen_eig_max_real(&phase_jacobian(&base)).unwrap();
        for mu in [0.3, 1.0, 1.6] {
            let cfg = IsingConfig { mu, ..base.clone() };
            let l = gen_eig_max_real(&phase_jacobian(&cfg)).unwrap();
            assert!((l - (l0 - 2.0 * mu)).abs() < 1e-9);
        }
        // alternating pattern on an even ring: all couplings stabilizing, λ_max = −2μ
        assert!(l0.abs() < 1e-9);
    }

    #[test]
    fn lifted_jacobian_carries_phase_block() {
        let cfg = IsingConfig::ring(4, 1.2, pattern_from_bits(&[false, false, true, false]));
        let sys = build_ising(&cfg).unwrap();
        let j = sys.jacobian();
        let jp = phase_jacobian(&cfg);
        for a in 0..4 {
            for b in 0..4 {
                assert!((j[(2 * a, 2 * b)] - jp[(a, b)]).abs() < 1e-12);
                assert_eq!(j[(2 * a + 1, 2 * b)], 0.0);
                assert_eq!(j[(2 * a, 2 * b + 1)], 0.0);
            }
        }
    }

    #[test]
    fn sampled_equilibria() {
        let cfg = IsingConfig::ring(8, 1.0, vec![0.0; 8]);
        let a = sample_equilibria(&cfg, 5, 9).unwrap();
        assert_eq!(a, sample_equilibria(&cfg, 5, 9).unwrap());
        assert_eq!(a.len(), 5);
        let shifted = sample_equilibria(&IsingConfig { mu: 1.5, ..cfg.clone() }, 5, 9).unwrap();
        for (p, q) in a.iter().zip(&shifted) {
            assert_eq!(p.pattern, q.pattern);
            assert!((q.lambda_max - (p.lambda_max - 1.0)).abs() < 1e-9);
        }
        // exhausting the 2^(N−1) classes terminates
        let small = IsingConfig::ring(3, 1.0, vec![0.0; 3]);
        assert_eq!(sample_equilibria(&small, 100, 1).unwrap().len(), 4);
    }

    #[test]
    fn chart_round_trip() {
        let th = [0.3, -2.9, 3.1, 0.0];
        let back = chart_phases(&lift_phases(&th));
        for (a, b) in th.iter().zip(back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
