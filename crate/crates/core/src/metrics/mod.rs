//! Scores of a region estimate against simulation: volume accuracy, shape
//! dissimilarity of radial profiles, and the region-type heuristic.

mod classify;
mod report;
mod soundness;

pub use classify::{adjusted_skewness, classify_roa, ClassifyConfig, RoaType};
pub use report::{evaluate, radial_profile, EvalConfig, MetricReport, RadialProfile};
pub use soundness::{soundness, Soundness};

use crate::composite::{roa_membership, CompositeCertificate};
use crate::error::{Error, Result};
use crate::groundtruth::{Label, Sample};

/// Fraction of converging samples that the estimate contains.
pub fn volume_accuracy_with(samples: &[Sample], inside: impl Fn(&[f64]) -> bool) -> Result<f64> {
    let converged: Vec<&Sample> = samples.iter().filter(|s| s.label == Label::Converged).collect();
    if converged.is_empty() {
        return Err(Error::Undefined("no converged samples".into()));
    }
    let hit = converged.iter().filter(|s| inside(&s.state)).count();
    Ok(hit as f64 / converged.len() as f64)
}

pub fn volume_accuracy(samples: &[Sample], cert: &CompositeCertificate) -> Result<f64> {
    volume_accuracy_with(samples, |x| roa_membership(cert, x))
}

fn mean_normalized(u: &[f64], name: &str) -> Result<Vec<f64>> {
    if u.is_empty() {
        return Err(Error::Undefined(format!("{name} is empty")));
    }
    let mean = u.iter().sum::<f64>() / u.len() as f64;
    if !(mean.abs() > 0.0) || !mean.is_finite() {
        return Err(Error::Undefined(format!("{name} has mean {mean}")));
    }
    let mut v: Vec<f64> = u.iter().map(|x| x / mean).collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `∫₀¹ |F_u⁻¹(t) − F_v⁻¹(t)| dt` of two sorted samples.
pub fn quantile_distance(u: &[f64], v: &[f64]) -> f64 {
    let (n, m) = (u.len(), v.len());
    if n == m {
        return u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum::<f64>() / n as f64;
    }
    // merge the breakpoints i/n and j/m
    let (mut i, mut j) = (0, 0);
    let mut t = 0.0;
    let mut total = 0.0;
    while i < n && j < m {
        let tu = (i + 1) as f64 / n as f64;
        let tv = (j + 1) as f64 / m as f64;
        let next = tu.min(tv);
        total += (next - t) * (u[i] - v[j]).abs();
        t = next;
        // advance both on a shared breakpoint: (i+1)·m == (j+1)·n
        let cu = (i + 1) * m;
        let cv = (j + 1) * n;
        if cu <= cv {
            i += 1;
        }
        if cv <= cu {
            j += 1;
        }
    }
    total
}

/// 1-D Wasserstein distance between the mean-normalized empirical
/// distributions of `u` and `v`.
pub fn wasserstein_1d(u: &[f64], v: &[f64]) -> Result<f64> {
    let u = mean_normalized(u, "first sample")?;
    let v = mean_normalized(v, "second sample")?;
    Ok(quantile_distance(&u, &v))
}

/// `I_s` of a profile; the flag reports saturated ground-truth rays.
pub fn shape_dissimilarity(profile: &RadialProfile) -> Result<(f64, bool)> {
    let flagged = profile.saturated.iter().any(|s| *s);
    Ok((wasserstein_1d(&profile.d_gt, &profile.d_est)?, flagged))
}
