//! Dense linear-algebra kernels: LU and Cholesky solves, symmetric and general
//! eigenvalues, the Lyapunov matrix equation and rank-revealing QR.

mod eig;
mod lu;
mod lyapunov;
mod matrix;
mod qr;

pub use eig::{eigenvalues, gen_eig_max_real, min_eigenvalue, sym_eig};
pub use lu::{cholesky, cholesky_solve, lower_inverse, solve_linear, Lu};
pub use lyapunov::solve_lyapunov;
pub use matrix::DenseMatrix;
pub use qr::pivoted_qr_rank;
