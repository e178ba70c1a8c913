use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::{info, warn};

use super::{ising_config, pattern_bits, reason_code, RunConfig, SystemSpec};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricReport, RoaType};
use crate::numerics::gen_eig_max_real;
use crate::system::ising::phase_jacobian;
use crate::system::{ising_energy, sample_equilibria, IsingConfig};

/// A CSV table with a provenance comment line.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self, digest: &str, seed: u64) -> String {
        let mut s = format!("# digest={digest} seed={seed}\n{}\n", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

/// Mean and sample standard deviation.
fn mean_std(x: &[f64]) -> (Option<f64>, Option<f64>) {
    if x.is_empty() {
        return (None, None);
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let std = if x.len() > 1 {
        (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (Some(mean), Some(std))
}

/// Metric samples and failure codes of one table cell.
#[derive(Default)]
struct Cell {
    i_v: Vec<f64>,
    i_s: Vec<f64>,
    reasons: BTreeMap<&'static str, usize>,
}

impl Cell {
    fn record(&mut self, r: Result<MetricReport>) {
        match r {
            Ok(m) => {
                match m.i_v {
                    Some(v) => self.i_v.push(v),
                    None => *self.reasons.entry("undefined_I_v").or_default() += 1,
                }
                match m.i_s {
                    Some(v) => self.i_s.push(v),
                    None => *self.reasons.entry("undefined_I_s").or_default() += 1,
                }
            }
            Err(e) => {
                warn!("cell failed: {e}");
                *self.reasons.entry(reason_code(&e)).or_default() += 1;
            }
        }
    }

    fn reason(&self) -> String {
        self.reasons.iter().map(|(c, n)| format!("{c}:{n}")).collect::<Vec<_>>().join(";")
    }

    fn columns(&self) -> Vec<String> {
        let (vm, vs) = mean_std(&self.i_v);
        let (sm, ss) = mean_std(&self.i_s);
        vec![opt(vm), opt(vs), opt(sm), opt(ss)]
    }
}

fn run_cell(cfg: &RunConfig, baseline: bool) -> Result<MetricReport> {
    let sys = cfg.build_system()?;
    cfg.validate(&sys)?;
    let cert = if baseline { super::baseline(cfg, &sys)? } else { super::synthesize(cfg, &sys)? };
    Ok(evaluate(&sys, &cert, &cfg.eval_config(&sys))?.report)
}

/// Damping sweep: one row per `(ᾱ, k)` with means and standard deviations
/// over `reps` parameter draws, plus the quadratic baseline of each draw.
pub fn vdp_sweep(cfg: &RunConfig) -> Result<Table> {
    let SystemSpec::Vdp(spec) = &cfg.system else {
        return Err(Error::Config("vdp_sweep needs a van der Pol system".into()));
    };
    let sw = &cfg.sweep;
    let mut table = Table::new(
        "vdp_sweep",
        &[
            "alpha",
            "k",
            "reps",
            "I_v_mean",
            "I_v_std",
            "I_s_mean",
            "I_s_std",
            "baseline_I_v_mean",
            "baseline_I_v_std",
            "baseline_I_s_mean",
            "baseline_I_s_std",
            "reason",
        ],
    );
    for &alpha in &sw.alphas {
        let mut base = Cell::default();
        let mut cells: Vec<Cell> = sw.ks.iter().map(|_| Cell::default()).collect();
        for r in 0..sw.reps {
            let mut c = cfg.clone();
            c.seed = cfg.seed.wrapping_add(r as u64);
            let mut s = spec.clone();
            s.mean_alpha = alpha;
            s.parameter_seed = None;
            c.system = SystemSpec::Vdp(s);
            info!("vdp_sweep ᾱ = {alpha}, repetition {}: baseline", r + 1);
            base.record(run_cell(&c, true));
            for (cell, &k) in cells.iter_mut().zip(&sw.ks) {
                info!("vdp_sweep ᾱ = {alpha}, repetition {}: k = {k}", r + 1);
                c.synthesis.k = k;
                c.synthesis.subsets = None;
                cell.record(run_cell(&c, false));
            }
        }
        for (cell, &k) in cells.iter().zip(&sw.ks) {
            let mut row = vec![fmt(alpha), k.to_string(), sw.reps.to_string()];
            row.extend(cell.columns());
            row.extend(base.columns());
            let reason = [cell.reason(), base.reason().replace(':', "_baseline:")]
                .into_iter()
                .filter(|s| !s.is_empty())
                .collect::<Vec<_>>()
                .join(";");
            row.push(reason);
            table.rows.push(row);
        }
    }
    Ok(table)
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Spectral abscissa of the phase Jacobian at `pattern` for each `μ`.
pub fn lambda_max_curve(base: &IsingConfig, pattern: &[f64], mus: &[f64]) -> Result<Vec<f64>> {
    mus.iter()
        .map(|&mu| {
            let c = IsingConfig {
                mu,
                pattern: pattern.to_vec(),
                ..base.clone()
            };
            gen_eig_max_real(&phase_jacobian(&c))
        })
        .collect()
}

/// Regularization sweep over sampled equilibria. Returns the per-equilibrium
/// table and the per-`μ` summary with type fractions.
pub fn ising_sweep(cfg: &RunConfig) -> Result<(Table, Table)> {
    let SystemSpec::Ising(spec) = &cfg.system else {
        return Err(Error::Config("ising_sweep needs an Ising system".into()));
    };
    let sw = &cfg.sweep;
    if sw.mus.len() < 2 {
        return Err(Error::Config("ising_sweep needs at least two μ values".into()));
    }
    let base = ising_config(spec)?;
    let equilibria = sample_equilibria(&base, sw.equilibria, cfg.seed)?;
    let mut rows = Table::new(
        "ising_sweep",
        &["mu", "pattern", "energy", "lambda_max", "lambda_slope", "I_v", "I_s", "type", "eta", "reason"],
    );
    let mut summary = Table::new(
        "ising_types",
        &["mu", "equilibria", "frac_I", "frac_II", "frac_III", "frac_unstable", "I_v_mean", "I_s_mean"],
    );
    let curves: Vec<Vec<f64>> = equilibria
        .iter()
        .map(|e| lambda_max_curve(&base, &e.pattern, &sw.mus))
        .collect::<Result<_>>()?;
    for (m, &mu) in sw.mus.iter().enumerate() {
        let mut types: Vec<RoaType> = Vec::new();
        let (mut i_v, mut i_s) = (Vec::new(), Vec::new());
        for (e, curve) in equilibria.iter().zip(&curves) {
            let bits = pattern_bits(&e.pattern);
            let lambda = curve[m];
            let mut row = vec![
                fmt(mu),
                bits.clone(),
                fmt(ising_energy(&base, &e.pattern)),
                format!("{lambda:.9e}"),
                format!("{:.9e}", ls_slope(&sw.mus, curve)),
            ];
            if lambda >= 0.0 {
                types.push(RoaType::Unstable);
                row.extend(["".into(), "".into(), RoaType::Unstable.as_str().into(), "".into(), "unstable_equilibrium".into()]);
                rows.rows.push(row);
                continue;
            }
            let mut c = cfg.clone();
            let mut s = spec.clone();
            s.mu = mu;
            s.pattern = bits;
            c.system = SystemSpec::Ising(s);
            info!("ising_sweep μ = {mu}, pattern {}", row[1]);
            let result = c.build_system().and_then(|sys| {
                let cert = super::synthesize(&c, &sys)?;
                Ok((evaluate(&sys, &cert, &c.eval_config(&sys))?.report, cert.eta))
            });
            match result {
                Ok((r, eta)) => {
                    if let Some(t) = r.roa_type {
                        types.push(t);
                    }
                    i_v.extend(r.i_v);
                    i_s.extend(r.i_s);
                    row.extend([
                        opt(r.i_v),
                        opt(r.i_s),
                        r.roa_type.map(RoaType::as_str).unwrap_or("").into(),
                        format!("{eta:.6e}"),
                        String::new(),
                    ]);
                }
                Err(err) => {
                    warn!("μ = {mu}, pattern {}: {err}", row[1]);
                    row.extend(["".into(), "".into(), "".into(), "".into(), reason_code(&err).into()]);
                }
            }
            rows.rows.push(row);
        }
        let frac = |t: RoaType| {
            if types.is_empty() {
                String::new()
            } else {
                fmt(types.iter().filter(|x| **x == t).count() as f64 / types.len() as f64)
            }
        };
        summary.rows.push(vec![
            fmt(mu),
            equilibria.len().to_string(),
            frac(RoaType::I),
            frac(RoaType::II),
            frac(RoaType::III),
            frac(RoaType::Unstable),
            opt(mean_std(&i_v).0),
            opt(mean_std(&i_s).0),
        ]);
    }
    Ok((rows, summary))
}
