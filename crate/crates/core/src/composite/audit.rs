use rayon::prelude::*;

use crate::groundtruth::{integrate, random_directions, ray_distance_with, Chart, Label, SimConfig};
use crate::poly::CompiledPoly;
use crate::system::NetworkSystem;
use crate::Poly;

/// Relative resolution of the level search.
const LEVEL_REL_TOL: f64 = 1e-3;
/// Smallest level tried, relative to the upper end.
const LEVEL_FLOOR: f64 = 1e-6;

/// Largest ray length used for boundary points, in chart coordinates.
pub fn ray_limit(sys: &NetworkSystem, sim: &SimConfig) -> f64 {
    if sys.is_ising() {
        std::f64::consts::PI
    } else {
        0.5 * sim.r_div
    }
}

/// Sampled boundary check of sub-level sets `{V ≤ c}`.
pub struct LevelAudit<'a> {
    sys: &'a NetworkSystem,
    chart: Chart,
    v: CompiledPoly<f64>,
    v_dot: Option<CompiledPoly<f64>>,
    directions: Vec<Vec<f64>>,
    sim: &'a SimConfig,
    d_max: f64,
}

impl<'a> LevelAudit<'a> {
    /// `samples` directions drawn from `seed`. With `require_decrease` a
    /// boundary point also needs `∇V·f ≤ 0`.
    pub fn new(sys: &'a NetworkSystem, v: &Poly, samples: usize, seed: u64, sim: &'a SimConfig, require_decrease: bool) -> Self {
        let chart = Chart::of(sys);
        let v_dot = require_decrease.then(|| CompiledPoly::new(&v.lie_derivative(sys.field()).expect("same dimension")));
        Self {
            sys,
            directions: random_directions(chart.dim(), samples, seed),
            chart,
            v: CompiledPoly::new(v),
            v_dot,
            sim,
            d_max: ray_limit(sys, sim),
        }
    }

    /// Boundary point of `{V ≤ c}` along `rho`.
    fn boundary(&self, rho: &[f64], c: f64) -> Vec<f64> {
        let r = ray_distance_with(&self.chart, rho, self.d_max, 1e-9, |x| self.v.eval(x) <= c)
            .expect("directions are unit vectors");
        let y: Vec<f64> = rho.iter().map(|v| v * r.d).collect();
        self.chart.lift(&y)
    }

    /// Every sampled boundary point of `{V ≤ c}` converges.
    pub fn is_sound(&self, c: f64) -> bool {
        self.directions.par_iter().all(|rho| {
            let x = self.boundary(rho, c);
            if let Some(vd) = &self.v_dot {
                if vd.eval(&x) > 0.0 {
                    return false;
                }
            }
            integrate(self.sys, &x, self.sim).label == Label::Converged
        })
    }

    /// `V` at the far end of the shortest ray: larger levels leave the sampled
    /// domain.
    pub fn domain_level(&self) -> f64 {
        self.directions
            .iter()
            .map(|rho| {
                let y: Vec<f64> = rho.iter().map(|v| v * self.d_max).collect();
                self.v.eval(&self.chart.lift(&y))
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest sound level in `(0, upper]`, by bisection on a log scale; zero
    /// when even `LEVEL_FLOOR · upper` fails.
    pub fn largest_sound_level(&self, upper: f64) -> f64 {
        if !(upper > 0.0) {
            return 0.0;
        }
        if self.is_sound(upper) {
            return upper;
        }
        let mut lo = LEVEL_FLOOR * upper;
        if !self.is_sound(lo) {
            return 0.0;
        }
        let mut hi = upper;
        while hi / lo > 1.0 + LEVEL_REL_TOL {
            let mid = (lo * hi).sqrt();
            if self.is_sound(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{Model, NetworkSystem};

    fn cubic() -> NetworkSystem {
        let x = Poly::var(1, 0);
        NetworkSystem::new(1, 1, vec![&x.powi(3) - &x], vec![vec![0.0]], vec![], vec![0.0], Model::Custom).unwrap()
    }

    fn sim() -> SimConfig {
        SimConfig {
            horizon: 200.0,
            atol: 1e-9,
            rtol: 1e-7,
            eps_conv: 1e-3,
            r_div: 6.0,
            half_width: 1.5,
            seed: 0,
        }
    }

    #[test]
    fn phase_line_level() {
        let sys = cubic();
        let s = sim();
        let v = Poly::var(1, 0).powi(2);
        let audit = LevelAudit::new(&sys, &v, 8, 1, &s, false);
        let c = audit.largest_sound_level(4.0);
        assert!(c < 1.0 && c > 0.99, "{c}");
        assert_eq!(audit.largest_sound_level(0.5), 0.5);
    }
}
