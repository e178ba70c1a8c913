//! Simulation oracle: adaptive integration, convergence labels, and the box
//! and radial sampling schemes used for scoring region estimates.

mod integrate;
mod sampling;

pub use integrate::{integrate, integrate_to};
pub use sampling::{
    random_directions, ray_distance, ray_distance_with, sample_box, samples_to_csv, RayMode, RayResult, Sample,
};
pub(crate) use sampling::task_rng;

use crate::system::ising::{lift_phases, IsingConfig};
use crate::system::{Model, NetworkSystem};

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    /// Integration horizon `T`.
    pub horizon: f64,
    pub atol: f64,
    pub rtol: f64,
    /// Converged once `‖x‖ ≤ eps_conv`.
    pub eps_conv: f64,
    /// Diverged once `‖x‖ ≥ r_div`.
    pub r_div: f64,
    /// Box half-width, in chart coordinates.
    pub half_width: f64,
    pub seed: u64,
}

impl SimConfig {
    /// Defaults for a system: `a = 1.5` for van der Pol networks and the full
    /// phase circle `a = π` for Ising networks.
    pub fn for_system(sys: &NetworkSystem, seed: u64) -> Self {
        let half_width = if sys.is_ising() { std::f64::consts::PI } else { 1.5 };
        Self {
            horizon: 200.0,
            atol: 1e-9,
            rtol: 1e-7,
            eps_conv: 1e-3,
            r_div: 10.0 * half_width.max(1.5),
            half_width,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Converged,
    Diverged,
    Undecided,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Converged => "converged",
            Label::Diverged => "diverged",
            Label::Undecided => "undecided",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimFlag {
    /// Step size fell below the floor before a decision.
    StepUnderflow,
    /// Came to rest away from the origin (another equilibrium).
    SettledElsewhere,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub label: Label,
    /// Final state in the system's (lifted) coordinates.
    pub state: Vec<f64>,
    pub time: f64,
    pub flag: Option<SimFlag>,
}

/// Coordinates in which samples are drawn and trajectories integrated.
///
/// Ising networks are integrated on the phase torus and lifted afterwards, so
/// trajectories never leave the constraint manifold.
#[derive(Clone, Debug)]
pub enum Chart {
    Identity(usize),
    Phase(IsingConfig),
}

impl Chart {
    pub fn of(sys: &NetworkSystem) -> Self {
        match sys.model() {
            Model::Ising(cfg) => Chart::Phase(cfg.clone()),
            _ => Chart::Identity(sys.dim()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Chart::Identity(n) => *n,
            Chart::Phase(cfg) => cfg.n(),
        }
    }

    /// Chart coordinates to system state.
    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        match self {
            Chart::Identity(_) => y.to_vec(),
            Chart::Phase(_) => lift_phases(y),
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
