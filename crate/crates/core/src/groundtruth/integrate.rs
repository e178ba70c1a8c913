use super::{norm, Chart, Label, Outcome, SimConfig, SimFlag};
use crate::system::ising::{chart_phases, phase_field};
use crate::system::NetworkSystem;

// Dormand–Prince 5(4) tableau; the field is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const H_MIN: f64 = 1e-12;
const REST_SPEED: f64 = 1e-9;

/// What the stepper should do after an accepted step.
enum Control {
    Continue,
    Stop(Label, Option<SimFlag>),
}

struct Stepper {
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
    y5: Vec<f64>,
}

impl Stepper {
    fn new(n: usize) -> Self {
        Self {
            k: vec![vec![0.0; n]; 7],
            tmp: vec![0.0; n],
            y5: vec![0.0; n],
        }
    }

    /// One trial step from `(t, y)` with `k[0] = f(y)` already set; returns the
    /// scaled error norm and leaves the fifth-order result in `y5` and
    /// `f(y5)` in `k[6]`.
    fn step(&mut self, f: &mut impl FnMut(&[f64], &mut [f64]), y: &[f64], h: f64, atol: f64, rtol: f64) -> f64 {
        let n = y.len();
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, a) in A[s][..s].iter().enumerate() {
                    acc += h * a * self.k[j][i];
                }
                self.tmp[i] = acc;
            }
            f(&self.tmp, &mut self.k[s]);
        }
        // stage 7 was evaluated at the fifth-order solution (FSAL)
        self.y5.copy_from_slice(&self.tmp);
        let mut err = 0.0f64;
        for i in 0..n {
            let mut e = 0.0;
            for s in 0..7 {
                e += h * (B5[s] - B4[s]) * self.k[s][i];
            }
            let scale = atol + rtol * y[i].abs().max(self.y5[i].abs());
            err = err.max((e / scale).abs());
        }
        err
    }
}

/// Adaptive integration of `ẏ = f(y)` from `t = 0` until `control` stops it or
/// `t_end` is reached.
fn run(
    y0: &[f64],
    t_end: f64,
    atol: f64,
    rtol: f64,
    mut f: impl FnMut(&[f64], &mut [f64]),
    mut control: impl FnMut(&[f64], &[f64]) -> Control,
) -> (Vec<f64>, f64, Option<(Label, Option<SimFlag>)>) {
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut st = Stepper::new(n);
    f(&y, &mut st.k[0]);
    if let Control::Stop(l, fl) = control(&y, &st.k[0]) {
        return (y, 0.0, Some((l, fl)));
    }
    let mut t = 0.0;
    let speed = norm(&st.k[0]);
    let mut h = if speed > 0.0 { (0.01 * norm(&y).max(1e-3) / speed).min(0.1) } else { 0.1 };
    while t < t_end {
        h = h.min(t_end - t);
        let err = st.step(&mut f, &y, h, atol, rtol);
        if !err.is_finite() || err > 1.0 {
            let shrink = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.2 };
            h *= shrink;
            if h < H_MIN {
                return (y, t, Some((Label::Undecided, Some(SimFlag::StepUnderflow))));
            }
            continue;
        }
        t += h;
        y.copy_from_slice(&st.y5);
        let last = st.k.len() - 1;
        st.k.swap(0, last);
        if let Control::Stop(l, fl) = control(&y, &st.k[0]) {
            return (y, t, Some((l, fl)));
        }
        let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= grow;
    }
    (y, t, None)
}

/// Classifies the trajectory from the state `x0` (system coordinates).
pub fn integrate(sys: &NetworkSystem, x0: &[f64], cfg: &SimConfig) -> Outcome {
    let chart = Chart::of(sys);
    let classify = |x: &[f64], speed: f64| -> Control {
        let r = norm(x);
        if r <= cfg.eps_conv {
            Control::Stop(Label::Converged, None)
        } else if r >= cfg.r_div || !r.is_finite() {
            Control::Stop(Label::Diverged, None)
        } else if speed <= REST_SPEED {
            Control::Stop(Label::Diverged, Some(SimFlag::SettledElsewhere))
        } else {
            Control::Continue
        }
    };
    let (state, time, stop) = match &chart {
        Chart::Identity(_) => {
            let (y, t, stop) = run(
                x0,
                cfg.horizon,
                cfg.atol,
                cfg.rtol,
                |y, out| sys.eval_field(y, out),
                |y, dy| classify(y, norm(dy)),
            );
            (y, t, stop)
        }
        Chart::Phase(ising) => {
            let phases = chart_phases(x0);
            let (y, t, stop) = run(
                &phases,
                cfg.horizon,
                cfg.atol,
                cfg.rtol,
                |y, out| phase_field(ising, y, out),
                |y, dy| classify(&chart.lift(y), norm(dy)),
            );
            (chart.lift(&y), t, stop)
        }
    };
    let (label, flag) = stop.unwrap_or((Label::Undecided, None));
    Outcome {
        label,
        state,
        time,
        flag,
    }
}

/// State at time `t_end` (system coordinates), without early stopping.
pub fn integrate_to(sys: &NetworkSystem, x0: &[f64], t_end: f64, cfg: &SimConfig) -> Vec<f64> {
    let chart = Chart::of(sys);
    match &chart {
        Chart::Identity(_) => {
            run(x0, t_end, cfg.atol, cfg.rtol, |y, out| sys.eval_field(y, out), |_, _| Control::Continue).0
        }
        Chart::Phase(ising) => {
            let phases = chart_phases(x0);
            let y = run(&phases, t_end, cfg.atol, cfg.rtol, |y, out| phase_field(ising, y, out), |_, _| Control::Continue).0;
            chart.lift(&y)
        }
    }
}

/// Fixed-step fifth-order integration, used to check the convergence order.
#[cfg(test)]
pub(crate) fn fixed_step(y0: &[f64], t_end: f64, steps: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> Vec<f64> {
    let h = t_end / steps as f64;
    let mut st = Stepper::new(y0.len());
    let mut y = y0.to_vec();
    for _ in 0..steps {
        f(&y, &mut st.k[0]);
        st.step(&mut f, &y, h, 1.0, 0.0);
        y.copy_from_slice(&st.y5);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::vdp_from_parameters;
    use crate::system::{Model, NetworkSystem};
    use crate::Poly;

    fn scalar(field: Poly) -> NetworkSystem {
        NetworkSystem::new(1, 1, vec![field], vec![vec![0.0]], vec![], vec![0.0], Model::Custom).unwrap()
    }

    fn cfg() -> SimConfig {
        SimConfig {
            horizon: 20.0,
            atol: 1e-10,
            rtol: 1e-10,
            eps_conv: 1e-3,
            r_div: 15.0,
            half_width: 1.5,
            seed: 0,
        }
    }

    #[test]
    fn linear_decay_matches_exponential() {
        let sys = scalar(Poly::var(1, 0).scale(-1.0));
        let x = integrate_to(&sys, &[1.0], 1.0, &cfg());
        assert!((x[0] - (-1.0f64).exp()).abs() < 1e-6, "{}", x[0]);
        assert_eq!(integrate(&sys, &[1.0], &cfg()).label, Label::Converged);
    }

    #[test]
    fn fifth_order_convergence() {
        let f = |y: &[f64], o: &mut [f64]| o[0] = -y[0];
        let exact = (-1.0f64).exp();
        let e1 = (fixed_step(&[1.0], 1.0, 10, f)[0] - exact).abs();
        let e2 = (fixed_step(&[1.0], 1.0, 20, f)[0] - exact).abs();
        assert!(e1 / e2 >= 4.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn adaptive_error_shrinks_with_tolerance() {
        let sys = scalar(Poly::var(1, 0).scale(-1.0));
        let exact = (-5.0f64).exp();
        let err = |tol: f64| {
            let c = SimConfig { atol: tol, rtol: tol, ..cfg() };
            (integrate_to(&sys, &[1.0], 5.0, &c)[0] - exact).abs()
        };
        assert!(err(1e-6) >= 4.0 * err(1e-8) || err(1e-8) < 1e-14);
    }

    #[test]
    fn van_der_pol_labels() {
        let sys = vdp_from_parameters(&[1.0], &[vec![0.0]]).unwrap();
        let c = SimConfig { horizon: 200.0, ..cfg() };
        assert_eq!(integrate(&sys, &[0.1, 0.0], &c).label, Label::Converged);
        assert_eq!(integrate(&sys, &[4.0, 0.0], &c).label, Label::Diverged);
    }

    #[test]
    fn cubic_phase_line() {
        // ẋ = −x + x³ converges exactly on |x| < 1
        let x = Poly::var(1, 0);
        let sys = scalar(&x.powi(3) - &x);
        let c = SimConfig { horizon: 200.0, ..cfg() };
        assert_eq!(integrate(&sys, &[0.99], &c).label, Label::Converged);
        assert_eq!(integrate(&sys, &[-0.99], &c).label, Label::Converged);
        assert_eq!(integrate(&sys, &[1.01], &c).label, Label::Diverged);
    }
}
