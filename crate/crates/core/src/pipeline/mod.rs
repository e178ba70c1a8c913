//! Run configuration, presets and end-to-end orchestration.

mod benchmark;

pub use benchmark::{ising_sweep, vdp_sweep, Table};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::composite::{outer_loop, quadratic_baseline, CompositeCertificate, OuterConfig, WeightNorm};
use crate::error::{Error, Result};
use crate::groundtruth::SimConfig;
use crate::metrics::{ClassifyConfig, EvalConfig, RadialProfile};
use crate::poly::Subset;
use crate::system::ising::{alternating_pattern, pattern_from_bits};
use crate::system::{build_ising, build_vdp, IsingConfig, NetworkSystem, VdpConfig};

/// Built-in configurations.
pub const PRESETS: [(&str, &str); 4] = [
    ("vdp", include_str!("../../presets/vdp.toml")),
    ("ising", include_str!("../../presets/ising.toml")),
    ("vdp_sweep", include_str!("../../presets/vdp_sweep.toml")),
    ("ising_sweep", include_str!("../../presets/ising_sweep.toml")),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; `None` uses every core.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub system: SystemSpec,
    #[serde(default)]
    pub synthesis: SynthesisSettings,
    #[serde(default)]
    pub evaluation: EvaluationSettings,
    #[serde(default)]
    pub sweep: SweepSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SystemSpec {
    Vdp(VdpSpec),
    Ising(IsingSpec),
    /// A serialized network.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VdpSpec {
    pub n: usize,
    pub mean_alpha: f64,
    pub mean_k: f64,
    /// Defaults to `0.2 · mean_alpha`.
    pub sigma_alpha: Option<f64>,
    /// Defaults to `0.2 · mean_k`.
    pub sigma_k: Option<f64>,
    /// Parameter draw; defaults to the run seed.
    pub parameter_seed: Option<u64>,
}

impl Default for VdpSpec {
    fn default() -> Self {
        Self {
            n: 5,
            mean_alpha: 1.0,
            mean_k: 0.2,
            sigma_alpha: None,
            sigma_k: None,
            parameter_seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsingSpec {
    pub n: usize,
    pub mu: f64,
    /// `alternating` or one bit per node, `1` meaning phase π.
    pub pattern: String,
    /// Coupling matrix; defaults to a ring with `K = −1`.
    pub adjacency: Option<Vec<Vec<f64>>>,
}

impl Default for IsingSpec {
    fn default() -> Self {
        Self {
            n: 10,
            mu: 1.6,
            pattern: "alternating".into(),
            adjacency: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisSettings {
    pub k: usize,
    pub degree: u32,
    /// Explicit zero-based node subsets; override `k`.
    pub subsets: Option<Vec<Vec<usize>>>,
    pub eps: f64,
    pub tol_gamma_rel: f64,
    pub tol_nu: f64,
    pub sweep_cap: usize,
    pub weight_eps: f64,
    pub w_min: Option<f64>,
    /// Normalize weights to unit Euclidean norm instead of unit sum.
    pub euclidean_weights: bool,
    pub eps_outer: f64,
    pub max_iter: usize,
    pub audit_samples: usize,
    pub require_decrease: bool,
    pub probe_rays: usize,
    pub sdp_gap: f64,
    pub sdp_feasibility: f64,
    pub sdp_max_iterations: usize,
}

impl Default for SynthesisSettings {
    fn default() -> Self {
        Self {
            k: 2,
            degree: 4,
            subsets: None,
            eps: 1e-4,
            tol_gamma_rel: 1e-3,
            tol_nu: 1e-4,
            sweep_cap: 8,
            weight_eps: 1e-3,
            w_min: None,
            euclidean_weights: false,
            eps_outer: 1e-3,
            max_iter: 10,
            audit_samples: 200,
            require_decrease: true,
            probe_rays: 32,
            sdp_gap: 1e-7,
            sdp_feasibility: 1e-7,
            sdp_max_iterations: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSettings {
    /// Box samples.
    pub n1: usize,
    /// Rays.
    pub n2: usize,
    /// Boundary directions of the quadratic baseline audit.
    pub baseline_samples: usize,
    pub horizon: Option<f64>,
    pub atol: Option<f64>,
    pub rtol: Option<f64>,
    pub eps_conv: Option<f64>,
    pub r_div: Option<f64>,
    pub half_width: Option<f64>,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        Self {
            n1: 2000,
            n2: 500,
            baseline_samples: 500,
            horizon: None,
            atol: None,
            rtol: None,
            eps_conv: None,
            r_div: None,
            half_width: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub alphas: Vec<f64>,
    pub ks: Vec<usize>,
    pub reps: usize,
    pub mus: Vec<f64>,
    /// Equilibria sampled per Ising sweep.
    pub equilibria: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            alphas: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            ks: vec![1, 2, 3],
            reps: 3,
            mus: vec![0.8, 1.2, 1.6, 2.0, 2.4],
            equilibria: 5,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        // system files resolve relative to the config
        if let SystemSpec::File { path: p } = &mut cfg.system {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?;
        Self::from_toml(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical configuration without output location and
    /// worker count, which do not affect results.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        c.workers = None;
        let mut text = c.to_toml();
        if let SystemSpec::File { path } = &self.system {
            if let Ok(body) = std::fs::read_to_string(path) {
                text.push_str(&body);
            }
        }
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn system_id(&self) -> String {
        match &self.system {
            SystemSpec::Vdp(_) => "vdp".into(),
            SystemSpec::Ising(_) => "ising".into(),
            SystemSpec::File { path } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".into()),
        }
    }

    pub fn build_system(&self) -> Result<NetworkSystem> {
        match &self.system {
            SystemSpec::Vdp(v) => build_vdp(&vdp_config(v, self.seed)),
            SystemSpec::Ising(s) => build_ising(&ising_config(s)?),
            SystemSpec::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("system file {}: {e}", path.display())))?;
                NetworkSystem::from_text(&text)
            }
        }
    }

    /// Checks the configuration against the system it describes.
    pub fn validate(&self, sys: &NetworkSystem) -> Result<()> {
        let s = &self.synthesis;
        if s.degree < 2 || s.degree % 2 != 0 {
            return Err(Error::Config(format!("degree D = {} must be even and at least 2", s.degree)));
        }
        if s.subsets.is_none() && (s.k == 0 || s.k > sys.n_nodes()) {
            return Err(Error::Config(format!("k = {} must lie in 1..={}", s.k, sys.n_nodes())));
        }
        if self.evaluation.n1 == 0 || self.evaluation.n2 == 0 {
            return Err(Error::Config("N1 and N2 must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("worker count must be positive".into()));
        }
        self.subsets(sys).map(|_| ())
    }

    fn subsets(&self, sys: &NetworkSystem) -> Result<Option<Vec<Subset>>> {
        self.synthesis
            .subsets
            .as_ref()
            .map(|list| {
                list.iter()
                    .map(|nodes| Subset::new(nodes.clone(), sys.n_nodes(), sys.node_dim()))
                    .collect()
            })
            .transpose()
    }

    pub fn sim_config(&self, sys: &NetworkSystem) -> SimConfig {
        let e = &self.evaluation;
        let mut sim = SimConfig::for_system(sys, self.seed);
        sim.horizon = e.horizon.unwrap_or(sim.horizon);
        sim.atol = e.atol.unwrap_or(sim.atol);
        sim.rtol = e.rtol.unwrap_or(sim.rtol);
        sim.eps_conv = e.eps_conv.unwrap_or(sim.eps_conv);
        sim.half_width = e.half_width.unwrap_or(sim.half_width);
        sim.r_div = e.r_div.unwrap_or(sim.r_div);
        sim
    }

    pub fn outer_config(&self, sys: &NetworkSystem) -> Result<OuterConfig> {
        let s = &self.synthesis;
        let mut c = OuterConfig::new(sys, s.k, self.seed);
        c.subsets = self.subsets(sys)?;
        c.schedule.degree = s.degree;
        c.schedule.eps = s.eps;
        c.schedule.tol_gamma_rel = s.tol_gamma_rel;
        c.schedule.tol_nu = s.tol_nu;
        c.schedule.sweep_cap = s.sweep_cap;
        c.schedule.sdp.gap = s.sdp_gap;
        c.schedule.sdp.feasibility = s.sdp_feasibility;
        c.schedule.sdp.max_iterations = s.sdp_max_iterations;
        c.weight_eps = s.weight_eps;
        c.w_min = s.w_min;
        c.norm = if s.euclidean_weights { WeightNorm::Euclidean } else { WeightNorm::Sum };
        c.eps_outer = s.eps_outer;
        c.max_iter = s.max_iter;
        c.audit_samples = s.audit_samples;
        c.require_decrease = s.require_decrease;
        c.probe_rays = s.probe_rays;
        c.sim = self.sim_config(sys);
        Ok(c)
    }

    pub fn eval_config(&self, sys: &NetworkSystem) -> EvalConfig {
        EvalConfig {
            system_id: self.system_id(),
            k: self.synthesis.subsets.as_ref().map_or(self.synthesis.k, |s| s.iter().map(Vec::len).max().unwrap_or(0)),
            degree: self.synthesis.degree,
            n1: self.evaluation.n1,
            n2: self.evaluation.n2,
            sim: self.sim_config(sys),
            classify: ClassifyConfig::default(),
            config_digest: self.digest(),
        }
    }
}

fn vdp_config(v: &VdpSpec, seed: u64) -> VdpConfig {
    let mut c = VdpConfig::with_means(v.n, v.mean_alpha, v.mean_k, v.parameter_seed.unwrap_or(seed));
    c.sigma_alpha = v.sigma_alpha.unwrap_or(c.sigma_alpha);
    c.sigma_k = v.sigma_k.unwrap_or(c.sigma_k);
    c
}

pub fn ising_config(s: &IsingSpec) -> Result<IsingConfig> {
    let pattern = if s.pattern == "alternating" {
        alternating_pattern(s.n)
    } else {
        let bits = s
            .pattern
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidPhasePattern(format!("`{}` is not a bit string", s.pattern))),
            })
            .collect::<Result<Vec<bool>>>()?;
        if bits.len() != s.n {
            return Err(Error::InvalidPhasePattern(format!("{} bits for {} nodes", bits.len(), s.n)));
        }
        pattern_from_bits(&bits)
    };
    let mut cfg = IsingConfig::ring(s.n, s.mu, pattern);
    if let Some(k) = &s.adjacency {
        cfg.adjacency = k.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Bit string of an Ising pattern, `1` for phase π.
pub fn pattern_bits(pattern: &[f64]) -> String {
    pattern.iter().map(|p| if p.abs() > 1.0 { '1' } else { '0' }).collect()
}

/// Synthesized certificate stamped with the configuration.
pub fn synthesize(cfg: &RunConfig, sys: &NetworkSystem) -> Result<CompositeCertificate> {
    cfg.validate(sys)?;
    let mut cert = outer_loop(sys, &cfg.outer_config(sys)?)?;
    cert.config_digest = cfg.digest();
    Ok(cert)
}

/// Quadratic initializer certificate with its own audited level.
pub fn baseline(cfg: &RunConfig, sys: &NetworkSystem) -> Result<CompositeCertificate> {
    let sim = cfg.sim_config(sys);
    let mut c = quadratic_baseline(sys, &sim, cfg.seed, cfg.evaluation.baseline_samples, cfg.synthesis.require_decrease)?;
    c.config_digest = cfg.digest();
    Ok(c)
}

/// Degraded certificates: partial coverage, no certified decay rate, band
/// fallback in the weights, or a collapsed level audit.
pub fn is_degraded(cert: &CompositeCertificate) -> bool {
    !cert.failed.is_empty() || cert.non_certifying || cert.degraded_weights || !(cert.eta > 0.0)
}

/// Outer-loop history as CSV.
pub fn history_csv(cert: &CompositeCertificate) -> String {
    let mut s = format!("# digest={} seed={}\n", cert.config_digest, cert.seed);
    s.push_str("iteration,lambda,eta,audit_scale,failed_subsets\n");
    for (i, h) in cert.history.iter().enumerate() {
        let _ = writeln!(s, "{},{:.12e},{:.12e},{:.12e},{}", i + 1, h.lambda, h.eta, h.audit_scale, h.failed_subsets);
    }
    s
}

/// Per-ray distances as CSV.
pub fn rays_csv(profile: &RadialProfile, digest: &str, seed: u64) -> String {
    let mut s = format!("# digest={digest} seed={seed}\n");
    s.push_str("ray,d_gt,d_est,saturated\n");
    for i in 0..profile.d_gt.len() {
        let _ = writeln!(
            s,
            "{},{:.12e},{:.12e},{}",
            i + 1,
            profile.d_gt[i],
            profile.d_est[i],
            u8::from(profile.saturated[i])
        );
    }
    s
}

/// Short reason code for a failed cell.
pub fn reason_code(e: &Error) -> &'static str {
    match e {
        Error::NoCertificates => "no_certificates",
        Error::SynthesisFailed { .. } => "synthesis_failed",
        Error::TooManySubsets { .. } => "too_many_subsets",
        Error::ResamplingExhausted(_) => "unstable_parameters",
        Error::NotHurwitz(_) => "unstable_equilibrium",
        Error::Undefined(_) => "undefined_metric",
        Error::Config(_) => "config",
        _ => "numerical",
    }
}
