use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{integrate, norm, Chart, Label, SimConfig, SimFlag};
use crate::error::{Error, Result};
use crate::system::NetworkSystem;

const SCAN_STEPS: usize = 16;

/// Generator for task `index` of a sampling run; streams make results
/// independent of the worker count.
pub(crate) fn task_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Debug)]
pub struct Sample {
    /// Chart coordinates (phase deviations for Ising networks).
    pub chart: Vec<f64>,
    /// System coordinates.
    pub state: Vec<f64>,
    pub label: Label,
    pub flag: Option<SimFlag>,
}

/// `count` points from `U[−a, a]^n` in chart coordinates, each labeled by
/// simulation.
pub fn sample_box(sys: &NetworkSystem, cfg: &SimConfig, count: usize) -> Vec<Sample> {
    let chart = Chart::of(sys);
    let a = cfg.half_width;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(cfg.seed, i as u64);
            let y: Vec<f64> = (0..chart.dim()).map(|_| rng.random_range(-a..=a)).collect();
            let state = chart.lift(&y);
            let out = integrate(sys, &state, cfg);
            Sample {
                chart: y,
                state,
                label: out.label,
                flag: out.flag,
            }
        })
        .collect()
}

/// Unit vectors from normalized standard-normal draws.
pub fn random_directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let mut rng = task_rng(seed, i as u64);
            loop {
                let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let r = norm(&v);
                if r > 1e-12 {
                    return v.into_iter().map(|c| c / r).collect();
                }
            }
        })
        .collect()
}

pub enum RayMode<'a> {
    /// Inside means the trajectory converges.
    GroundTruth(&'a SimConfig),
    /// Inside is decided by a membership test on system coordinates.
    Estimate(&'a (dyn Fn(&[f64]) -> bool + Sync)),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayResult {
    /// First inside-to-outside crossing.
    pub d: f64,
    /// Outermost inside point of the coarse scan; differs from `d` on rays
    /// that re-enter the set.
    pub d_outer: f64,
    /// Inside all the way to `d_max`.
    pub saturated: bool,
}

/// Distance along `rho` (chart coordinates) to the boundary of the set.
pub fn ray_distance(sys: &NetworkSystem, rho: &[f64], d_max: f64, mode: RayMode<'_>) -> Result<RayResult> {
    let chart = Chart::of(sys);
    match mode {
        RayMode::GroundTruth(cfg) => ray_distance_with(&chart, rho, d_max, 1e-3, |x| {
            integrate(sys, x, cfg).label == Label::Converged
        }),
        RayMode::Estimate(inside) => ray_distance_with(&chart, rho, d_max, 1e-12, inside),
    }
}

/// Coarse outward scan in `SCAN_STEPS` steps, then bisection of the first
/// crossing to relative tolerance `rel_tol`.
pub fn ray_distance_with(
    chart: &Chart,
    rho: &[f64],
    d_max: f64,
    rel_tol: f64,
    inside: impl Fn(&[f64]) -> bool,
) -> Result<RayResult> {
    if rho.len() != chart.dim() {
        return Err(Error::DimensionMismatch {
            expected: chart.dim(),
            found: rho.len(),
        });
    }
    if (norm(rho) - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!("ray direction has norm {}", norm(rho))));
    }
    let at = |d: f64| -> bool {
        let y: Vec<f64> = rho.iter().map(|r| r * d).collect();
        inside(&chart.lift(&y))
    };
    let step = d_max / SCAN_STEPS as f64;
    let mut first_out = None;
    let mut d_outer = 0.0;
    for s in 1..=SCAN_STEPS {
        let d = step * s as f64;
        if at(d) {
            d_outer = d;
        } else if first_out.is_none() {
            first_out = Some(d);
        }
    }
    let Some(out) = first_out else {
        return Ok(RayResult {
            d: d_max,
            d_outer: d_max,
            saturated: true,
        });
    };
    let (mut lo, mut hi) = (out - step, out);
    while hi - lo > rel_tol * hi.max(f64::MIN_POSITIVE) {
        let mid = 0.5 * (lo + hi);
        if at(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let d = 0.5 * (lo + hi);
    Ok(RayResult {
        d,
        d_outer: d_outer.max(d),
        saturated: false,
    })
}

/// CSV with one row per point: coordinates, label, flag.
pub fn samples_to_csv(samples: &[Sample], digest: &str, seed: u64) -> String {
    let mut s = format!("# digest={digest} seed={seed}\n");
    let dim = samples.first().map_or(0, |p| p.state.len());
    let cols: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    let _ = writeln!(s, "{},label,flag", cols.join(","));
    for p in samples {
        let coords: Vec<String> = p.state.iter().map(|v| format!("{v:.12e}")).collect();
        let flag = match p.flag {
            Some(SimFlag::StepUnderflow) => "step_underflow",
            Some(SimFlag::SettledElsewhere) => "settled_elsewhere",
            None => "",
        };
        let _ = writeln!(s, "{},{},{}", coords.join(","), p.label.as_str(), flag);
    }
    s
}
