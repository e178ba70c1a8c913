use rayon::prelude::*;

use super::classify::{classify_roa, ClassifyConfig, RoaType};
use super::{shape_dissimilarity, volume_accuracy};
use crate::composite::{ray_limit, roa_membership, CompositeCertificate};
use crate::error::{Error, Result};
use crate::groundtruth::{random_directions, ray_distance, sample_box, Chart, RayMode, Sample, SimConfig};
use crate::system::NetworkSystem;

/// Paired boundary distances along shared directions.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    pub directions: Vec<Vec<f64>>,
    pub d_gt: Vec<f64>,
    pub d_est: Vec<f64>,
    /// Ground-truth ray inside all the way to the ray limit.
    pub saturated: Vec<bool>,
}

/// Simulated and estimated boundary distances along `count` random chart
/// directions.
pub fn radial_profile(
    sys: &NetworkSystem,
    cert: &CompositeCertificate,
    count: usize,
    seed: u64,
    sim: &SimConfig,
) -> Result<RadialProfile> {
    let dim = Chart::of(sys).dim();
    let directions = random_directions(dim, count, seed);
    let d_max = ray_limit(sys, sim);
    let inside = |x: &[f64]| roa_membership(cert, x);
    let rays: Vec<(f64, f64, bool)> = directions
        .par_iter()
        .map(|rho| {
            let gt = ray_distance(sys, rho, d_max, RayMode::GroundTruth(sim))?;
            let est = ray_distance(sys, rho, d_max, RayMode::Estimate(&inside))?;
            Ok((gt.d, est.d, gt.saturated))
        })
        .collect::<Result<_>>()?;
    Ok(RadialProfile {
        directions,
        d_gt: rays.iter().map(|r| r.0).collect(),
        d_est: rays.iter().map(|r| r.1).collect(),
        saturated: rays.iter().map(|r| r.2).collect(),
    })
}

#[derive(Clone, Debug)]
pub struct EvalConfig {
    pub system_id: String,
    pub k: usize,
    pub degree: u32,
    /// Box samples.
    pub n1: usize,
    /// Rays.
    pub n2: usize,
    pub sim: SimConfig,
    pub classify: ClassifyConfig,
    pub config_digest: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub system_id: String,
    pub k: usize,
    pub degree: u32,
    /// `None` when no box sample converged.
    pub i_v: Option<f64>,
    pub i_s: Option<f64>,
    /// Some ground-truth rays saturated.
    pub i_s_flagged: bool,
    pub roa_type: Option<RoaType>,
    pub n1: usize,
    pub n2: usize,
    pub seed: u64,
    pub eta: f64,
    pub lambda: f64,
    pub config_digest: String,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl MetricReport {
    pub const HEADER: &'static str = "system_id,k,D,I_v,I_s,type,N1,N2,seed,eta,lambda";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{:.6e},{:.6e}",
            self.system_id,
            self.k,
            self.degree,
            cell(self.i_v),
            cell(self.i_s),
            self.roa_type.map(RoaType::as_str).unwrap_or(""),
            self.n1,
            self.n2,
            self.seed,
            self.eta,
            self.lambda
        )
    }

    /// Provenance comment, header and one row.
    pub fn to_csv(&self) -> String {
        format!("# digest={} seed={}\n{}\n{}\n", self.config_digest, self.seed, Self::HEADER, self.csv_row())
    }
}

pub struct Evaluation {
    pub report: MetricReport,
    pub samples: Vec<Sample>,
    pub profile: RadialProfile,
}

/// Box sampling, ray profiling and scoring of one certificate.
pub fn evaluate(sys: &NetworkSystem, cert: &CompositeCertificate, cfg: &EvalConfig) -> Result<Evaluation> {
    let digest = sys.digest();
    if !cert.system_digest.is_empty() && cert.system_digest != digest {
        return Err(Error::DigestMismatch {
            expected: cert.system_digest.clone(),
            found: digest,
        });
    }
    let samples = sample_box(sys, &cfg.sim, cfg.n1);
    let i_v = match volume_accuracy(&samples, cert) {
        Ok(v) => Some(v),
        Err(Error::Undefined(_)) => None,
        Err(e) => return Err(e),
    };
    let profile = radial_profile(sys, cert, cfg.n2, cfg.sim.seed.wrapping_add(1), &cfg.sim)?;
    let (i_s, i_s_flagged) = match shape_dissimilarity(&profile) {
        Ok((v, f)) => (Some(v), f),
        Err(Error::Undefined(_)) => (None, false),
        Err(e) => return Err(e),
    };
    let roa_type = if sys.spectral_abscissa()? >= 0.0 {
        Some(RoaType::Unstable)
    } else {
        classify_roa(&profile.d_gt, &cfg.classify).ok()
    };
    let report = MetricReport {
        system_id: cfg.system_id.clone(),
        k: cfg.k,
        degree: cfg.degree,
        i_v,
        i_s,
        i_s_flagged,
        roa_type,
        n1: cfg.n1,
        n2: cfg.n2,
        seed: cfg.sim.seed,
        eta: cert.eta,
        lambda: cert.lambda,
        config_digest: cfg.config_digest.clone(),
    };
    Ok(Evaluation {
        report,
        samples,
        profile,
    })
}
