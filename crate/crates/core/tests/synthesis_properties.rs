use std::sync::OnceLock;

use distlyap::composite::{outer_loop, CompositeCertificate, OuterConfig};
use distlyap::groundtruth::{integrate, random_directions, ray_distance, Label, RayMode, SimConfig};
use distlyap::synthesis::ROW_TOL;
use distlyap::system::{build_vdp, NetworkSystem, VdpConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two coupled van der Pol oscillators with single-node partial functions.
fn fixture() -> &'static (NetworkSystem, CompositeCertificate) {
    static CELL: OnceLock<(NetworkSystem, CompositeCertificate)> = OnceLock::new();
    CELL.get_or_init(|| {
        let sys = build_vdp(&VdpConfig::with_means(2, 1.0, 0.2, 5)).unwrap();
        let mut cfg = OuterConfig::new(&sys, 1, 5);
        cfg.audit_samples = 100;
        cfg.probe_rays = 8;
        let cert = outer_loop(&sys, &cfg).unwrap();
        (sys, cert)
    })
}

#[test]
fn rows_and_metzler_condition_hold() {
    let (_, cert) = fixture();
    assert!(!cert.partials.is_empty());
    for p in &cert.partials {
        assert!(p.rows_valid(), "subset {}", p.subset.label());
    }
    assert!(cert.metzler_margin() >= -ROW_TOL);
}

#[test]
fn level_is_non_decreasing_across_alternations() {
    let (_, cert) = fixture();
    for p in &cert.partials {
        for w in p.history.windows(2) {
            assert!(w[1].0 >= w[0].0, "subset {}: {:?}", p.subset.label(), p.history);
        }
    }
}

/// Points of `{V_p ≤ γ_p − ν_p‖x‖²}` inside each subset subspace converge.
#[test]
fn partial_level_sets_are_sound() {
    let (sys, cert) = fixture();
    let sim = SimConfig::for_system(sys, 9);
    for p in &cert.partials {
        let vars = p.subset.vars();
        let inside = |x: &[f64]| p.v.eval(x) <= p.gamma - p.nu * x.iter().map(|v| v * v).sum::<f64>();
        let mut rng = ChaCha8Rng::seed_from_u64(p.index as u64);
        let mut drawn = 0;
        let mut bad = 0;
        for dir in random_directions(vars.len(), 1000, 100 + p.index as u64) {
            let mut rho = vec![0.0; sys.dim()];
            for (v, d) in vars.iter().zip(&dir) {
                rho[*v] = *d;
            }
            let d = ray_distance(sys, &rho, 50.0, RayMode::Estimate(&inside)).unwrap().d;
            let r = d * rng.random::<f64>().powf(1.0 / vars.len() as f64);
            let x: Vec<f64> = rho.iter().map(|c| c * r).collect();
            if !inside(&x) {
                continue;
            }
            drawn += 1;
            if integrate(sys, &x, &sim).label != Label::Converged {
                bad += 1;
            }
        }
        assert!(drawn > 900);
        assert_eq!(bad, 0, "subset {}", p.subset.label());
    }
}
