//! Per-subset synthesis of partial Lyapunov functions: level maximization by
//! bisection, slack minimization over the function itself, and the rows of the
//! comparison matrices.

mod bisect;
mod certificate;
mod partial;
mod programs;

pub use bisect::bisect;
pub use certificate::{read_partial, write_partial};
pub use partial::{inner_maximize_gamma, outer_minimize_nu, synthesize_partial, InnerResult, NuStep};
pub use programs::SubspaceData;

use crate::error::{Error, Result};
use crate::poly::{project, Subset};
use crate::sdp::Tolerances;
use crate::system::NetworkSystem;
use crate::Poly;

/// Default cap on the number of subsets.
pub const SUBSET_CAP: usize = 500;

/// All `C(N, k)` node subsets of size `k` in lexicographic order.
pub fn enumerate_subsets(n_nodes: usize, node_dim: usize, k: usize, cap: usize) -> Result<Vec<Subset>> {
    if k == 0 || k > n_nodes {
        return Err(Error::Config(format!("subset size k={k} must lie in 1..={n_nodes}")));
    }
    let count = binomial(n_nodes, k);
    if count > cap {
        return Err(Error::TooManySubsets {
            n: n_nodes,
            k,
            count,
            cap,
        });
    }
    let mut out = Vec::with_capacity(count);
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(Subset::new(idx.clone(), n_nodes, node_dim)?);
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n_nodes - k + i) else {
            break;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    Ok(out)
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    c as usize
}

/// A published partial function from the previous sweep.
#[derive(Clone, Debug)]
pub struct Peer {
    pub v: Poly,
    pub gamma: f64,
}

/// Everything subset `index` needs for one synthesis, as an immutable snapshot.
#[derive(Clone, Debug)]
pub struct PartialProblem<'a> {
    pub index: usize,
    pub subset: Subset,
    /// The subset plus its first neighbors.
    pub neighborhood: Subset,
    pub sys: &'a NetworkSystem,
    /// Composite function projected onto the neighborhood variables.
    pub composite: Poly,
    /// Composite level the partial region must stay inside.
    pub gamma_c: f64,
    /// One entry per subset, including this one.
    pub peers: Vec<Peer>,
    /// Points of the subset subspace known to lie outside the region of
    /// attraction; they bound the level search from above.
    pub probe: Vec<Vec<f64>>,
}

impl<'a> PartialProblem<'a> {
    pub fn new(
        index: usize,
        subset: Subset,
        sys: &'a NetworkSystem,
        composite: &Poly,
        gamma_c: f64,
        peers: Vec<Peer>,
        probe: Vec<Vec<f64>>,
    ) -> Self {
        let neighborhood = subset.with_neighbors(sys.adjacency());
        Self {
            index,
            composite: project(composite, &neighborhood),
            subset,
            neighborhood,
            sys,
            gamma_c,
            peers,
            probe,
        }
    }

    pub fn n_subsets(&self) -> usize {
        self.peers.len()
    }
}

/// Iteration controls for one partial synthesis.
#[derive(Clone, Debug)]
pub struct Schedule {
    /// Degree `D` of the partial functions.
    pub degree: u32,
    /// Strictness margin `ε` in the derivative constraints.
    pub eps: f64,
    /// Bisection tolerance relative to the bracket's upper end.
    pub tol_gamma_rel: f64,
    pub tol_nu: f64,
    pub sweep_cap: usize,
    /// Initial slack as a fraction of the smallest curvature of `V_p`.
    pub nu0_frac: f64,
    pub sdp: Tolerances,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            degree: 4,
            eps: 1e-4,
            tol_gamma_rel: 1e-3,
            tol_nu: 1e-4,
            sweep_cap: 8,
            nu0_frac: 0.1,
            sdp: Tolerances::default(),
        }
    }
}

/// Certified partial function of one subset.
#[derive(Clone, Debug)]
pub struct PartialCertificate {
    pub index: usize,
    pub subset: Subset,
    pub v: Poly,
    pub gamma: f64,
    pub nu: f64,
    pub row_a: Vec<f64>,
    pub row_b: Vec<f64>,
    /// Composite level used in the containment constraint.
    pub gamma_c: f64,
    pub multipliers: Vec<(String, Poly)>,
    /// The slack step failed and the previous function was kept.
    pub stalled: bool,
    /// `(γ_p, ν_p)` after every alternation.
    pub history: Vec<(f64, f64)>,
}

/// Margin for the row conditions.
pub const ROW_TOL: f64 = 1e-9;

impl PartialCertificate {
    /// Row conditions: `A_pr − B_pr ≥ 0` for `r ≠ p`, `Σ_r (A_pr − B_pr) ≤ 0`,
    /// `Σ_r B_pr ≥ 0`, each to [`ROW_TOL`].
    pub fn rows_valid(&self) -> bool {
        let p = self.index;
        let off = self
            .row_a
            .iter()
            .zip(&self.row_b)
            .enumerate()
            .all(|(r, (a, b))| r == p || a - b >= -ROW_TOL);
        let sum_d: f64 = self.row_a.iter().zip(&self.row_b).map(|(a, b)| a - b).sum();
        let sum_b: f64 = self.row_b.iter().sum();
        off && sum_d <= ROW_TOL && sum_b >= -ROW_TOL
    }
}

/// `Σ_r [(A_pr − B_pr) V_r + B_pr V_c]` for fixed rows.
pub fn theta_terms(prob: &PartialProblem<'_>, row_a: &[f64], row_b: &[f64]) -> Poly {
    let mut out = Poly::zero(prob.sys.dim());
    let mut b_sum = 0.0;
    for (r, peer) in prob.peers.iter().enumerate() {
        let d = row_a[r] - row_b[r];
        if d != 0.0 {
            out.add_scaled(&peer.v, d);
        }
        b_sum += row_b[r];
    }
    if b_sum != 0.0 {
        out.add_scaled(&prob.composite, b_sum);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{Model, NetworkSystem};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn decoupled(n: usize) -> NetworkSystem {
        let field = (0..n)
            .map(|i| {
                let x = Poly::var(n, i);
                &x.powi(3) - &x
            })
            .collect();
        NetworkSystem::new(n, 1, field, vec![vec![0.0; n]; n], vec![], vec![0.0; n], Model::Custom).unwrap()
    }

    #[test]
    fn subset_counts() {
        assert_eq!(enumerate_subsets(5, 2, 2, SUBSET_CAP).unwrap().len(), 10);
        let singles = enumerate_subsets(6, 1, 1, SUBSET_CAP).unwrap();
        let nodes: Vec<Vec<usize>> = singles.iter().map(|s| s.nodes().to_vec()).collect();
        assert_eq!(nodes, (0..6).map(|i| vec![i]).collect::<Vec<_>>());
        let all = enumerate_subsets(4, 2, 4, SUBSET_CAP).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].nodes(), &[0, 1, 2, 3]);
    }

    #[test]
    fn subsets_are_lexicographic() {
        let s = enumerate_subsets(4, 1, 2, SUBSET_CAP).unwrap();
        let labels: Vec<String> = s.iter().map(|s| s.label()).collect();
        assert_eq!(labels, ["{1,2}", "{1,3}", "{1,4}", "{2,3}", "{2,4}", "{3,4}"]);
    }

    #[test]
    fn subset_cap_is_enforced() {
        let err = enumerate_subsets(30, 1, 3, SUBSET_CAP).unwrap_err();
        assert!(matches!(err, Error::TooManySubsets { count: 4060, .. }));
        assert!(enumerate_subsets(3, 1, 0, SUBSET_CAP).is_err());
        assert!(enumerate_subsets(3, 1, 4, SUBSET_CAP).is_err());
    }

    fn problem(sys: &NetworkSystem, peers: Vec<Peer>) -> PartialProblem<'_> {
        let n = sys.dim();
        let subset = Subset::new(vec![0], sys.n_nodes(), 1).unwrap();
        PartialProblem::new(0, subset, sys, &Poly::sum_of_squares(n, 0..n), 1.0, peers, vec![])
    }

    #[test]
    fn theta_single_subset() {
        let sys = decoupled(1);
        let v1 = Poly::var(1, 0).powi(2).scale(3.0);
        let prob = problem(&sys, vec![Peer { v: v1.clone(), gamma: 1.0 }]);
        let theta = theta_terms(&prob, &[2.0], &[0.5]);
        let mut expected = v1.scale(1.5);
        expected.add_scaled(&prob.composite, 0.5);
        assert!(theta.max_coefficient_distance(&expected) < 1e-15);
        assert!(theta_terms(&prob, &[0.0], &[0.0]).is_zero());
    }

    #[test]
    fn theta_matches_term_by_term_sum() {
        let sys = decoupled(3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let peers: Vec<Peer> = (0..3)
            .map(|i| Peer {
                v: &Poly::var(3, i).powi(2) + &Poly::var(3, i).powi(4).scale(rng.random_range(0.0..1.0)),
                gamma: 1.0,
            })
            .collect();
        let prob = problem(&sys, peers.clone());
        let a: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let theta = theta_terms(&prob, &a, &b);
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let direct: f64 = (0..3)
                .map(|r| (a[r] - b[r]) * peers[r].v.eval(&x) + b[r] * prob.composite.eval(&x))
                .sum();
            assert!((theta.eval(&x) - direct).abs() < 1e-12);
        }
    }
}
