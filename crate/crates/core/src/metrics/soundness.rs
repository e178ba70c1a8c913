use rand::Rng;
use rayon::prelude::*;

use crate::composite::{ray_limit, roa_membership, CompositeCertificate};
use crate::error::Result;
use crate::groundtruth::{integrate, random_directions, ray_distance, task_rng, Chart, Label, RayMode, SimConfig};
use crate::system::NetworkSystem;

/// Simulated outcome of points drawn inside the estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Soundness {
    /// Points drawn with `V ≤ η`.
    pub inside: usize,
    /// Those whose trajectory converged.
    pub converged: usize,
}

impl Soundness {
    /// Converged fraction; 1 for an empty estimate.
    pub fn rate(&self) -> f64 {
        if self.inside == 0 {
            1.0
        } else {
            self.converged as f64 / self.inside as f64
        }
    }
}

/// Draws `count` points inside `{V ≤ η}`, each on a random chart ray at a
/// radius `d·u^{1/n}` below the ray's first boundary crossing `d`, and
/// simulates them.
pub fn soundness(sys: &NetworkSystem, cert: &CompositeCertificate, count: usize, seed: u64, sim: &SimConfig) -> Result<Soundness> {
    let chart = Chart::of(sys);
    let dim = chart.dim();
    let d_max = ray_limit(sys, sim);
    let inside = |x: &[f64]| roa_membership(cert, x);
    let dirs = random_directions(dim, count, seed);
    let outcomes: Vec<Option<bool>> = dirs
        .par_iter()
        .enumerate()
        .map(|(i, rho)| {
            let ray = ray_distance(sys, rho, d_max, RayMode::Estimate(&inside))?;
            let mut rng = task_rng(seed.wrapping_add(1), i as u64);
            let u: f64 = rng.random();
            let r = ray.d * u.powf(1.0 / dim as f64);
            let y: Vec<f64> = rho.iter().map(|c| c * r).collect();
            let x = chart.lift(&y);
            if !inside(&x) {
                return Ok(None);
            }
            Ok(Some(integrate(sys, &x, sim).label == Label::Converged))
        })
        .collect::<Result<_>>()?;
    Ok(Soundness {
        inside: outcomes.iter().flatten().count(),
        converged: outcomes.iter().flatten().filter(|c| **c).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Model;
    use crate::Poly;

    fn bistable() -> NetworkSystem {
        // ẋ = x³ − x: basin |x| < 1
        let x = Poly::var(1, 0);
        NetworkSystem::new(1, 1, vec![&x.powi(3) - &x], vec![vec![0.0]], vec![], vec![0.0], Model::Custom).unwrap()
    }

    #[test]
    fn sound_and_unsound_levels() {
        let sys = bistable();
        let sim = SimConfig::for_system(&sys, 1);
        let v = Poly::var(1, 0).powi(2);
        let good = soundness(&sys, &CompositeCertificate::from_function(v.clone(), 0.81), 200, 3, &sim).unwrap();
        assert_eq!(good.inside, 200);
        assert_eq!(good.rate(), 1.0);
        // |x| ≤ 2: about half of each ray lies outside the basin
        let bad = soundness(&sys, &CompositeCertificate::from_function(v, 4.0), 200, 3, &sim).unwrap();
        assert!(bad.rate() < 0.7);
    }
}
