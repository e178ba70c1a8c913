use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;

use distlyap::composite::{read_composite, ray_limit, write_composite, CompositeCertificate};
use distlyap::groundtruth::{random_directions, ray_distance, sample_box, samples_to_csv, Chart, RayMode};
use distlyap::metrics::{evaluate, soundness, MetricReport};
use distlyap::pipeline::{
    self, history_csv, is_degraded, ising_sweep, rays_csv, vdp_sweep, IsingSpec, RunConfig, SystemSpec, VdpSpec,
};
use distlyap::synthesis::{write_partial, ROW_TOL};
use distlyap::system::NetworkSystem;

/// Exit status of a run that produced a certificate with weaker guarantees.
const EXIT_DEGRADED: u8 = 2;

#[derive(Parser)]
#[command(name = "distlyap", version, about = "Composite Lyapunov certificates for oscillator networks")]
struct Cli {
    /// Worker threads; overrides the configuration.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the outer loop and write the composite certificate.
    Synthesize(RunArgs),
    /// Score a certificate against simulation.
    Evaluate {
        /// Certificate to score; omit with `--baseline`.
        #[arg(long)]
        certificate: Option<PathBuf>,
        /// Score the quadratic initializer with its audited level instead.
        #[arg(long)]
        baseline: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Label box samples and measure boundary distances by simulation.
    GroundTruth(RunArgs),
    /// Run a benchmark sweep.
    Benchmark {
        /// `vdp_sweep` or `ising_sweep`.
        #[arg(long)]
        preset: String,
        /// Repetitions per grid point.
        #[arg(long)]
        reps: Option<usize>,
        /// Damping grid, comma separated.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        /// Subset sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<usize>>,
        /// Regularization grid, comma separated.
        #[arg(long, value_delimiter = ',')]
        mus: Option<Vec<f64>>,
        #[arg(long)]
        equilibria: Option<usize>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Summarize a certificate and recheck its stored conditions.
    InspectCertificate {
        certificate: PathBuf,
        /// Check the certificate against this system file.
        #[arg(long)]
        system_file: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `vdp`, `ising`, or a serialized system file.
    #[arg(long)]
    system: Option<String>,
    /// Node count.
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Degree of the partial functions.
    #[arg(long = "D")]
    degree: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Mean damping of a van der Pol network.
    #[arg(long)]
    alpha: Option<f64>,
    /// Regularization of an Ising network.
    #[arg(long)]
    mu: Option<f64>,
    /// Ising equilibrium as bits or `alternating`.
    #[arg(long)]
    pattern: Option<String>,
    /// Box samples.
    #[arg(long = "N1")]
    n1: Option<usize>,
    /// Rays.
    #[arg(long = "N2")]
    n2: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self, workers: Option<usize>, default_preset: &str) -> Result<RunConfig> {
        let mut cfg = match (&self.config, self.system.as_deref()) {
            (Some(path), _) => RunConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
            (None, Some(name @ ("vdp" | "ising"))) => RunConfig::preset(name)?,
            (None, Some(path)) => {
                let mut c = RunConfig::preset("vdp")?;
                c.system = SystemSpec::File { path: path.into() };
                c
            }
            (None, None) => RunConfig::preset(default_preset)?,
        };
        if let (Some(_), Some(s)) = (&self.config, self.system.as_deref()) {
            cfg.system = match s {
                "vdp" => SystemSpec::Vdp(VdpSpec::default()),
                "ising" => SystemSpec::Ising(IsingSpec::default()),
                path => SystemSpec::File { path: path.into() },
            };
        }
        match &mut cfg.system {
            SystemSpec::Vdp(v) => {
                v.n = self.n.unwrap_or(v.n);
                v.mean_alpha = self.alpha.unwrap_or(v.mean_alpha);
            }
            SystemSpec::Ising(s) => {
                if let Some(n) = self.n {
                    if n != s.n && s.pattern != "alternating" && self.pattern.is_none() {
                        s.pattern = "alternating".into();
                    }
                    s.n = n;
                    if s.adjacency.is_some() {
                        bail!("--N cannot resize an explicit coupling matrix");
                    }
                }
                s.mu = self.mu.unwrap_or(s.mu);
                if let Some(p) = &self.pattern {
                    s.pattern = p.clone();
                }
            }
            SystemSpec::File { .. } => {
                if self.n.is_some() || self.alpha.is_some() || self.mu.is_some() || self.pattern.is_some() {
                    bail!("--N, --alpha, --mu and --pattern do not apply to a system file");
                }
            }
        }
        if let Some(k) = self.k {
            cfg.synthesis.k = k;
            cfg.synthesis.subsets = None;
        }
        if let Some(d) = self.degree {
            cfg.synthesis.degree = u32::try_from(d).context("degree out of range")?;
        }
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.evaluation.n1 = self.n1.unwrap_or(cfg.evaluation.n1);
        cfg.evaluation.n2 = self.n2.unwrap_or(cfg.evaluation.n2);
        cfg.synthesis.max_iter = self.max_iter.unwrap_or(cfg.synthesis.max_iter);
        if self.out.is_some() {
            cfg.output = self.out.clone();
        }
        if workers.is_some() {
            cfg.workers = workers;
        }
        Ok(cfg)
    }
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

/// Effective configuration with its digest.
fn config_file(cfg: &RunConfig) -> String {
    format!("# digest={} seed={}\n{}", cfg.digest(), cfg.seed, cfg.to_toml())
}

fn setup(cfg: &RunConfig) -> Result<NetworkSystem> {
    if let Some(w) = cfg.workers {
        if w == 0 {
            bail!("worker count must be positive");
        }
        // fails only if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let sys = cfg.build_system()?;
    cfg.validate(&sys)?;
    Ok(sys)
}

fn cmd_synthesize(cfg: &RunConfig) -> Result<u8> {
    let sys = setup(cfg)?;
    let dir = output_dir(cfg)?;
    let cert = pipeline::synthesize(cfg, &sys)?;
    write(&dir, "config.toml", &config_file(cfg))?;
    write(&dir, "system.txt", &sys.to_text())?;
    write(&dir, "certificate.txt", &write_composite(&cert))?;
    write(&dir, "history.csv", &history_csv(&cert))?;
    let partials = dir.join("partials");
    if partials.exists() {
        fs::remove_dir_all(&partials)?;
    }
    fs::create_dir_all(&partials)?;
    for p in &cert.partials {
        write(&partials, &format!("partial_{:03}.txt", p.index + 1), &write_partial(p))?;
    }
    for (label, reason) in &cert.failed {
        warn!("subset {label} failed: {reason}");
    }
    println!(
        "L={} lambda={:.6e} eta={:.6e} failed={}",
        cert.weights.len(),
        cert.lambda,
        cert.eta,
        cert.failed.len()
    );
    Ok(if is_degraded(&cert) { EXIT_DEGRADED } else { 0 })
}

fn load_certificate(path: &Path) -> Result<CompositeCertificate> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    read_composite(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_evaluate(cfg: &RunConfig, certificate: Option<&Path>, baseline: bool) -> Result<u8> {
    let sys = setup(cfg)?;
    let cert = match (certificate, baseline) {
        (Some(_), true) => bail!("--certificate and --baseline are exclusive"),
        (Some(path), false) => load_certificate(path)?,
        (None, true) => pipeline::baseline(cfg, &sys)?,
        (None, false) => bail!("give --certificate or --baseline"),
    };
    let dir = output_dir(cfg)?;
    let mut ecfg = cfg.eval_config(&sys);
    if baseline {
        ecfg.system_id = format!("{}_baseline", ecfg.system_id);
    }
    let e = evaluate(&sys, &cert, &ecfg)?;
    let digest = cfg.digest();
    write(&dir, "metrics.csv", &e.report.to_csv())?;
    write(&dir, "samples.csv", &samples_to_csv(&e.samples, &digest, cfg.seed))?;
    write(&dir, "rays.csv", &rays_csv(&e.profile, &digest, cfg.seed))?;
    println!("{}\n{}", MetricReport::HEADER, e.report.csv_row());
    if e.report.i_s_flagged {
        warn!("some simulated rays reached the ray limit; I_s is a lower bound");
    }
    Ok(0)
}

fn cmd_ground_truth(cfg: &RunConfig) -> Result<u8> {
    let sys = setup(cfg)?;
    let dir = output_dir(cfg)?;
    let sim = cfg.sim_config(&sys);
    let samples = sample_box(&sys, &sim, cfg.evaluation.n1);
    let d_max = ray_limit(&sys, &sim);
    let dirs = random_directions(Chart::of(&sys).dim(), cfg.evaluation.n2, sim.seed.wrapping_add(1));
    let rays = dirs
        .par_iter()
        .map(|rho| ray_distance(&sys, rho, d_max, RayMode::GroundTruth(&sim)))
        .collect::<distlyap::Result<Vec<_>>>()?;
    let digest = cfg.digest();
    let mut csv = format!("# digest={digest} seed={}\nray,d_gt,saturated\n", cfg.seed);
    for (i, r) in rays.iter().enumerate() {
        csv.push_str(&format!("{},{:.12e},{}\n", i + 1, r.d, u8::from(r.saturated)));
    }
    write(&dir, "samples.csv", &samples_to_csv(&samples, &digest, cfg.seed))?;
    write(&dir, "rays.csv", &csv)?;
    write(&dir, "system.txt", &sys.to_text())?;
    Ok(0)
}

fn cmd_benchmark(cfg: &RunConfig, preset: &str) -> Result<u8> {
    if let Some(w) = cfg.workers {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let dir = output_dir(cfg)?;
    let digest = cfg.digest();
    match preset {
        "vdp_sweep" => {
            let t = vdp_sweep(cfg)?;
            write(&dir, "vdp_sweep.csv", &t.to_csv(&digest, cfg.seed))?;
        }
        "ising_sweep" => {
            let (rows, summary) = ising_sweep(cfg)?;
            write(&dir, "ising_sweep.csv", &rows.to_csv(&digest, cfg.seed))?;
            write(&dir, "ising_types.csv", &summary.to_csv(&digest, cfg.seed))?;
        }
        other => bail!("unknown benchmark `{other}`; use vdp_sweep or ising_sweep"),
    }
    write(&dir, "config.toml", &config_file(cfg))?;
    Ok(0)
}

fn cmd_inspect(path: &Path, system_file: Option<&Path>) -> Result<u8> {
    let c = load_certificate(path)?;
    let sum_w: f64 = c.weights.iter().sum();
    let eta_sum: f64 = c.partials.iter().zip(&c.weights).map(|(p, w)| w * p.gamma).sum();
    let metzler = c.metzler_margin();
    let bad_rows: Vec<String> = c.partials.iter().filter(|p| !p.rows_valid()).map(|p| p.subset.label()).collect();
    println!("subsets        {}", c.weights.len());
    println!("failed         {}", c.failed.len());
    for (label, reason) in &c.failed {
        println!("  {label}: {reason}");
    }
    println!("lambda         {:.6e}{}", c.lambda, if c.non_certifying { " (no certified decay)" } else { "" });
    println!("eta            {:.6e}", c.eta);
    println!("sum of weights {sum_w:.12}");
    println!("Metzler margin {metzler:.3e}");
    println!("iterations     {}", c.history.len());
    println!("system digest  {}", c.system_digest);
    println!("config digest  {}", c.config_digest);
    println!("seed           {}", c.seed);
    let mut ok = bad_rows.is_empty() && !(metzler < -ROW_TOL);
    if !bad_rows.is_empty() {
        println!("rows violated  {}", bad_rows.join(" "));
    }
    if !c.partials.is_empty() {
        let gap = (eta_sum - c.eta).abs();
        println!("eta - sum w*gamma {gap:.3e}");
        ok &= gap <= 1e-9 * c.eta.abs().max(1.0);
    }
    if let Some(sf) = system_file {
        let text = fs::read_to_string(sf).with_context(|| format!("reading {}", sf.display()))?;
        let sys = NetworkSystem::from_text(&text)?;
        let matches = sys.digest() == c.system_digest;
        println!("system match   {}", if matches { "yes" } else { "no" });
        ok &= matches;
        if matches {
            let sim = distlyap::groundtruth::SimConfig::for_system(&sys, c.seed);
            let s = soundness(&sys, &c, 500, c.seed, &sim)?;
            println!("sound samples  {}/{}", s.converged, s.inside);
        }
    }
    Ok(if ok { 0 } else { EXIT_DEGRADED })
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Synthesize(a) => cmd_synthesize(&a.resolve(cli.workers, "vdp")?),
        Command::Evaluate {
            certificate,
            baseline,
            run,
        } => cmd_evaluate(&run.resolve(cli.workers, "vdp")?, certificate.as_deref(), baseline),
        Command::GroundTruth(a) => cmd_ground_truth(&a.resolve(cli.workers, "vdp")?),
        Command::Benchmark {
            preset,
            reps,
            alphas,
            ks,
            mus,
            equilibria,
            run,
        } => {
            if !matches!(preset.as_str(), "vdp_sweep" | "ising_sweep") {
                bail!("unknown benchmark `{preset}`; use vdp_sweep or ising_sweep");
            }
            let mut cfg = run.resolve(cli.workers, &preset)?;
            let sw = &mut cfg.sweep;
            sw.reps = reps.unwrap_or(sw.reps);
            sw.alphas = alphas.unwrap_or(sw.alphas.clone());
            sw.ks = ks.unwrap_or(sw.ks.clone());
            sw.mus = mus.unwrap_or(sw.mus.clone());
            sw.equilibria = equilibria.unwrap_or(sw.equilibria);
            cmd_benchmark(&cfg, &preset)
        }
        Command::InspectCertificate {
            certificate,
            system_file,
        } => cmd_inspect(&certificate, system_file.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
