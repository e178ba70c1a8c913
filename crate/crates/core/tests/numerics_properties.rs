use distlyap::numerics::{gen_eig_max_real, min_eigenvalue, solve_lyapunov};
use distlyap::Matrix;
use proptest::prelude::*;

/// Random matrix shifted to spectral abscissa −margin.
fn hurwitz(n: usize, entries: &[f64], margin: f64) -> Matrix {
    let m = Matrix::from_fn(n, n, |r, c| entries[r * n + c]);
    let shift = gen_eig_max_real(&m).unwrap() + margin;
    Matrix::from_fn(n, n, |r, c| m[(r, c)] - if r == c { shift } else { 0.0 })
}

proptest! {
    #[test]
    fn lyapunov_solution_is_symmetric_and_positive(
        n in 1usize..7,
        entries in prop::collection::vec(-2.0f64..2.0, 36),
        margin in 0.1f64..2.0,
    ) {
        let j = hurwitz(n, &entries, margin);
        let q = solve_lyapunov(&j).unwrap();
        let scale = (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| q[(r, c)].abs()).fold(0.0, f64::max);
        for r in 0..n {
            for c in 0..n {
                prop_assert!((q[(r, c)] - q[(c, r)]).abs() <= 1e-12 * scale.max(1.0));
            }
        }
        prop_assert!(min_eigenvalue(&q).unwrap() > 0.0);
        // J Q + Q Jᵀ = −I
        for r in 0..n {
            for c in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += j[(r, k)] * q[(k, c)] + q[(r, k)] * j[(c, k)];
                }
                let target = if r == c { -1.0 } else { 0.0 };
                prop_assert!((s - target).abs() <= 1e-8 * scale.max(1.0));
            }
        }
    }
}
