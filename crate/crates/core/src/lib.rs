//! Composite Lyapunov functions for networks of coupled polynomial oscillators,
//! built from sum-of-squares certificates on small node subsets.

pub mod composite;
pub mod error;
pub mod groundtruth;
pub mod metrics;
pub mod numerics;
pub mod pipeline;
pub mod poly;
pub mod sdp;
pub mod sos;
pub mod synthesis;
pub mod system;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Poly = poly::Polynomial<f64>;
pub type Matrix = numerics::DenseMatrix<f64>;
