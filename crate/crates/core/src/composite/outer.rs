use log::{info, warn};
use rayon::prelude::*;

use super::audit::{ray_limit, LevelAudit};
use super::weights::{optimize_weights, WeightNorm};
use super::{assemble, assemble_rows, margin, CompositeCertificate, IterationRecord};
use crate::error::{Error, Result};
use crate::groundtruth::{random_directions, ray_distance, Chart, RayMode, SimConfig};
use crate::numerics::{min_eigenvalue, solve_lyapunov};
use crate::poly::{project, Monomial, Subset};
use crate::synthesis::{enumerate_subsets, synthesize_partial, PartialCertificate, PartialProblem, Peer, Schedule, SUBSET_CAP};
use crate::system::NetworkSystem;
use crate::{Matrix, Poly};

/// Composite ceiling relative to the audited level on subspaces without probe
/// points.
const PROBE_FREE_FACTOR: f64 = 10.0;

#[derive(Clone, Debug)]
pub struct OuterConfig {
    /// Nodes per subset.
    pub k: usize,
    /// Explicit subsets; overrides `k`.
    pub subsets: Option<Vec<Subset>>,
    pub schedule: Schedule,
    /// Band width of the weight program.
    pub weight_eps: f64,
    /// Lower bound on each weight; `None` uses `1e-3 / L`.
    pub w_min: Option<f64>,
    pub norm: WeightNorm,
    /// Stop once `|Δλ|` falls to this value.
    pub eps_outer: f64,
    pub max_iter: usize,
    /// Boundary directions per level audit.
    pub audit_samples: usize,
    /// Boundary points must also satisfy `∇V·f ≤ 0`.
    pub require_decrease: bool,
    /// Simulated rays per subset bounding the level search.
    pub probe_rays: usize,
    pub sim: SimConfig,
    pub seed: u64,
}

impl OuterConfig {
    pub fn new(sys: &NetworkSystem, k: usize, seed: u64) -> Self {
        Self {
            k,
            subsets: None,
            schedule: Schedule::default(),
            weight_eps: 1e-3,
            w_min: None,
            norm: WeightNorm::Sum,
            eps_outer: 1e-3,
            max_iter: 10,
            audit_samples: 200,
            require_decrease: true,
            probe_rays: 32,
            sim: SimConfig::for_system(sys, seed),
            seed,
        }
    }
}

/// `xᵀQx` with `J_sᵀQ + QJ_s = −I` on the stability chart. For Ising networks
/// `Q` acts on the `x_{i,1}` coordinates and the `x_{i,2}` coordinates get
/// the smallest eigenvalue of `Q`.
pub fn quadratic_initializer(sys: &NetworkSystem) -> Result<Poly> {
    let (j, vars) = sys.stability_jacobian();
    let q = solve_lyapunov(&j.transpose())?;
    let n = sys.dim();
    let mut v = Poly::zero(n);
    for (a, &i) in vars.iter().enumerate() {
        for (b, &k) in vars.iter().enumerate() {
            let m = Monomial::var(n, i).mul(&Monomial::var(n, k));
            v.add_term(m, q[(a, b)]);
        }
    }
    if vars.len() < n {
        let q_min = min_eigenvalue(&q)?;
        for i in (0..n).filter(|i| !vars.contains(i)) {
            v.add_term(Monomial::var(n, i).mul(&Monomial::var(n, i)), q_min);
        }
    }
    Ok(v)
}

/// Largest audited level of `v` below the sampled domain.
pub fn audited_level(sys: &NetworkSystem, v: &Poly, samples: usize, seed: u64, sim: &SimConfig, require_decrease: bool) -> f64 {
    let audit = LevelAudit::new(sys, v, samples, seed, sim, require_decrease);
    audit.largest_sound_level(audit.domain_level())
}

/// The quadratic initializer with its own audited level.
pub fn quadratic_baseline(
    sys: &NetworkSystem,
    sim: &SimConfig,
    seed: u64,
    samples: usize,
    require_decrease: bool,
) -> Result<CompositeCertificate> {
    let v = quadratic_initializer(sys)?;
    let eta = audited_level(sys, &v, samples, seed, sim, require_decrease);
    let mut c = CompositeCertificate::from_function(v, eta);
    c.system_digest = sys.digest();
    c.seed = seed;
    Ok(c)
}

/// Outermost simulated non-converging points along random rays of the subset
/// subspace.
fn probe_points(sys: &NetworkSystem, subset: &Subset, count: usize, seed: u64, sim: &SimConfig) -> Vec<Vec<f64>> {
    let chart = Chart::of(sys);
    let coords: Vec<usize> = if sys.is_ising() { subset.nodes().to_vec() } else { subset.vars() };
    let d_max = ray_limit(sys, sim);
    random_directions(coords.len(), count, seed)
        .par_iter()
        .filter_map(|dir| {
            let mut rho = vec![0.0; chart.dim()];
            for (c, v) in coords.iter().zip(dir) {
                rho[*c] = *v;
            }
            let r = ray_distance(sys, &rho, d_max, RayMode::GroundTruth(sim)).ok()?;
            if r.saturated {
                return None;
            }
            let hi = (r.d * (1.0 + 1e-3)).min(d_max);
            let y: Vec<f64> = rho.iter().map(|v| v * hi).collect();
            Some(chart.lift(&y))
        })
        .collect()
}

/// Composite level at the nearest probe point of a subspace, never below the
/// audited level; the partial step certifies how much of it is usable.
fn composite_ceiling(composite: &Poly, probe: &[Vec<f64>], audited: f64) -> f64 {
    let nearest = probe.iter().map(|x| composite.eval(x)).fold(f64::INFINITY, f64::min);
    if nearest.is_finite() {
        nearest.max(audited)
    } else {
        PROBE_FREE_FACTOR * audited
    }
}

fn sub_matrix(m: &Matrix, keep: &[usize]) -> Matrix {
    Matrix::from_fn(keep.len(), keep.len(), |r, c| m[(keep[r], keep[c])])
}

/// Composite of one sweep, before the level audit.
struct Assembly {
    certs: Vec<PartialCertificate>,
    a: Matrix,
    b: Matrix,
    w: Vec<f64>,
    lambda: f64,
    non_certifying: bool,
    degraded: bool,
}

fn assemble_sweep(certs: Vec<PartialCertificate>, cfg: &OuterConfig) -> Result<Assembly> {
    let keep: Vec<usize> = certs.iter().map(|c| c.index).collect();
    let (a_full, b_full) = {
        let l = certs[0].row_a.len();
        let mut a = Matrix::zeros(l, l);
        let mut b = Matrix::zeros(l, l);
        for c in &certs {
            a.row_mut(c.index).copy_from_slice(&c.row_a);
            b.row_mut(c.index).copy_from_slice(&c.row_b);
        }
        (a, b)
    };
    let (a, b) = if keep.len() == a_full.rows() {
        assemble_rows(&certs)
    } else {
        (sub_matrix(&a_full, &keep), sub_matrix(&b_full, &keep))
    };
    let l = keep.len();
    let w_min = cfg.w_min.unwrap_or(1e-3 / l as f64);
    let gammas: Vec<f64> = certs.iter().map(|c| c.gamma).collect();
    let r = optimize_weights(&a, &b, cfg.weight_eps, w_min, cfg.norm, Some(&gammas))?;
    // the composite is always a convex combination
    let total: f64 = r.w.iter().sum();
    let w: Vec<f64> = r.w.iter().map(|v| v / total).collect();
    Ok(Assembly {
        certs,
        a,
        b,
        w,
        lambda: r.lambda,
        non_certifying: r.non_certifying,
        degraded: r.degraded,
    })
}

/// Alternates partial synthesis over all subsets against the current
/// composite with weight optimization, until the decay rate settles.
pub fn outer_loop(sys: &NetworkSystem, cfg: &OuterConfig) -> Result<CompositeCertificate> {
    let subsets = match &cfg.subsets {
        Some(s) => s.clone(),
        None => enumerate_subsets(sys.n_nodes(), sys.node_dim(), cfg.k, SUBSET_CAP)?,
    };
    let l_total = subsets.len();
    let v0 = quadratic_initializer(sys)?;
    let eta0 = audited_level(sys, &v0, cfg.audit_samples, cfg.seed, &cfg.sim, cfg.require_decrease);
    if !(eta0 > 0.0) {
        return Err(Error::NoCertificates);
    }
    info!("initial quadratic level {eta0:.6e} over {l_total} subsets");

    let probes: Vec<Vec<Vec<f64>>> = subsets
        .iter()
        .enumerate()
        .map(|(i, s)| probe_points(sys, s, cfg.probe_rays, cfg.seed.wrapping_add(1 + i as u64), &cfg.sim))
        .collect();

    let mut composite = v0.clone();
    let mut gamma_c = eta0;
    let mut peers: Vec<Peer> = subsets
        .iter()
        .map(|s| Peer {
            v: project(&v0, s),
            gamma: eta0,
        })
        .collect();
    let mut best: Option<CompositeCertificate> = None;
    let mut history = Vec::new();

    for iter in 0..cfg.max_iter.max(1) {
        let results: Vec<Result<PartialCertificate>> = subsets
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let cap = composite_ceiling(&composite, &probes[i], gamma_c);
                let prob = PartialProblem::new(i, s.clone(), sys, &composite, cap, peers.clone(), probes[i].clone());
                synthesize_partial(&prob, &peers[i].v, &cfg.schedule)
            })
            .collect();
        let mut certs = Vec::new();
        let mut failed = Vec::new();
        for (s, r) in subsets.iter().zip(results) {
            match r {
                Ok(c) => certs.push(c),
                Err(e) => {
                    warn!("subset {}: {e}", s.label());
                    failed.push((s.label(), e.to_string()));
                }
            }
        }
        if certs.is_empty() {
            warn!("iteration {}: no subset produced a certificate", iter + 1);
            break;
        }
        let asm = assemble_sweep(certs, cfg)?;
        let v = assemble(&asm.certs, &asm.w)?;
        let eta_cert = margin(&asm.certs, &asm.w);
        let audit = LevelAudit::new(sys, &v, cfg.audit_samples, cfg.seed, &cfg.sim, cfg.require_decrease);
        let eta = audit.largest_sound_level(eta_cert);
        let scale = if eta_cert > 0.0 { eta / eta_cert } else { 0.0 };
        let mut certs = asm.certs;
        for c in &mut certs {
            c.gamma *= scale;
        }
        info!(
            "iteration {}: λ = {:.6e}, certified η = {eta_cert:.6e}, audited η = {eta:.6e}, {} failed",
            iter + 1,
            asm.lambda,
            failed.len()
        );
        let prev_lambda = history.last().map(|h: &IterationRecord| h.lambda);
        history.push(IterationRecord {
            lambda: asm.lambda,
            eta,
            audit_scale: scale,
            failed_subsets: failed.len(),
        });
        for c in &certs {
            peers[c.index] = Peer {
                v: c.v.clone(),
                gamma: c.gamma,
            };
        }
        composite = v.clone();
        gamma_c = eta;
        best = Some(CompositeCertificate {
            weights: asm.w,
            v,
            lambda: asm.lambda,
            eta,
            a: asm.a,
            b: asm.b,
            partials: certs,
            history: history.clone(),
            non_certifying: asm.non_certifying,
            degraded_weights: asm.degraded,
            failed,
            system_digest: sys.digest(),
            config_digest: String::new(),
            seed: cfg.seed,
        });
        if !(eta > 0.0) {
            warn!("level audit collapsed at iteration {}", iter + 1);
            break;
        }
        if prev_lambda.is_some_and(|p| (asm.lambda - p).abs() <= cfg.eps_outer) {
            break;
        }
    }
    best.ok_or(Error::NoCertificates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::ising::alternating_pattern;
    use crate::system::{build_ising, IsingConfig, Model};

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
    fn initializer_solves_lyapunov() {
        let sys = decoupled(2);
        let v = quadratic_initializer(&sys).unwrap();
        // J = −I: Q = I/2
        assert!((v.eval(&[1.0, 0.0]) - 0.5).abs() < 1e-12);
        assert!((v.eval(&[1.0, 1.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn initializer_is_decreasing_near_ising_equilibrium() {
        let sys = build_ising(&IsingConfig::ring(4, 1.6, alternating_pattern(4))).unwrap();
        let v = quadratic_initializer(&sys).unwrap();
        let vd = v.lie_derivative(sys.field()).unwrap();
        let chart = Chart::of(&sys);
        for dir in random_directions(4, 20, 3) {
            let y: Vec<f64> = dir.iter().map(|c| 0.05 * c).collect();
            let x = chart.lift(&y);
            assert!(v.eval(&x) > 0.0);
            assert!(vd.eval(&x) < 0.0);
        }
    }

    #[test]
    fn decoupled_pair_matches_single_node() {
        let sys = decoupled(2);
        let mut cfg = OuterConfig::new(&sys, 1, 5);
        cfg.audit_samples = 64;
        cfg.probe_rays = 4;
        let c = outer_loop(&sys, &cfg).unwrap();
        assert!(c.history.len() <= 2, "{:?}", c.history);
        assert!(c.failed.is_empty());
        assert!((c.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let direct: f64 = c.partials.iter().zip(&c.weights).map(|(p, w)| w * p.gamma).sum();
        assert!((c.eta - direct).abs() <= 1e-12 * c.eta);
        // each node alone certifies nearly all of |x| < 1
        for p in &c.partials {
            let certified = p.history.last().unwrap().0;
            let at = |t: f64| {
                let mut x = [0.0; 2];
                x[p.index] = t;
                p.v.eval(&x)
            };
            let (mut lo, mut hi) = (0.0, 2.0);
            while hi - lo > 1e-9 {
                let mid = 0.5 * (lo + hi);
                if at(mid) <= certified { lo = mid } else { hi = mid }
            }
            assert!(lo > 0.98 && lo < 1.0 + 1e-6, "boundary {lo}");
        }
        assert!(c.eta > 0.0);
    }

    #[test]
    fn iteration_cap_one_returns_first_sweep() {
        let sys = decoupled(2);
        let mut cfg = OuterConfig::new(&sys, 2, 5);
        cfg.max_iter = 1;
        cfg.audit_samples = 64;
        cfg.probe_rays = 4;
        let c = outer_loop(&sys, &cfg).unwrap();
        assert_eq!(c.history.len(), 1);
        assert_eq!(c.weights, vec![1.0]);
        assert!(c.eta > 0.0);
    }
}
