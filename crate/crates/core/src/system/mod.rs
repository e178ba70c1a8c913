//! Networks of coupled polynomial systems with the equilibrium of interest at
//! the origin, plus the van der Pol and Ising oscillator families.

pub mod ising;
mod vdp;

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

pub use ising::{build_ising, ising_energy, sample_equilibria, Equilibrium, IsingConfig};
pub use vdp::{build_vdp, vdp_from_parameters, VdpConfig};

use crate::error::{parse_err, Error, Result};
use crate::numerics::gen_eig_max_real;
use crate::poly::text::parse_poly_lines;
use crate::poly::{write_poly, CompiledPoly, Monomial};
use crate::{Matrix, Poly};

/// Which family a network was built from; drives the stability chart.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Vdp { alpha: Vec<f64> },
    Ising(IsingConfig),
    Custom,
}

#[derive(Clone, Debug)]
pub struct NetworkSystem {
    n_nodes: usize,
    node_dim: usize,
    field: Vec<Poly>,
    compiled: Vec<CompiledPoly<f64>>,
    adjacency: Vec<Vec<f64>>,
    equalities: Vec<Poly>,
    equilibrium_original: Vec<f64>,
    model: Model,
}

impl NetworkSystem {
    pub fn new(
        n_nodes: usize,
        node_dim: usize,
        field: Vec<Poly>,
        adjacency: Vec<Vec<f64>>,
        equalities: Vec<Poly>,
        equilibrium_original: Vec<f64>,
        model: Model,
    ) -> Result<Self> {
        let n = n_nodes * node_dim;
        if field.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: field.len(),
            });
        }
        if let Some(p) = field.iter().chain(&equalities).find(|p| p.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.dim(),
            });
        }
        if adjacency.len() != n_nodes || adjacency.iter().any(|r| r.len() != n_nodes) {
            return Err(Error::DimensionMismatch {
                expected: n_nodes,
                found: adjacency.len(),
            });
        }
        if equilibrium_original.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: equilibrium_original.len(),
            });
        }
        let origin = Monomial::one(n);
        if field.iter().chain(&equalities).any(|p| p.coefficient(&origin) != 0.0) {
            return Err(Error::Config(
                "field and equality constraints must vanish at the origin".into(),
            ));
        }
        let compiled = field.iter().map(CompiledPoly::new).collect();
        Ok(Self {
            n_nodes,
            node_dim,
            field,
            compiled,
            adjacency,
            equalities,
            equilibrium_original,
            model,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn node_dim(&self) -> usize {
        self.node_dim
    }

    pub fn dim(&self) -> usize {
        self.n_nodes * self.node_dim
    }

    pub fn field(&self) -> &[Poly] {
        &self.field
    }

    pub fn adjacency(&self) -> &[Vec<f64>] {
        &self.adjacency
    }

    pub fn equalities(&self) -> &[Poly] {
        &self.equalities
    }

    pub fn equilibrium_original(&self) -> &[f64] {
        &self.equilibrium_original
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn is_ising(&self) -> bool {
        matches!(self.model, Model::Ising(_))
    }

    /// Writes `ẋ = f(x)` into `out`.
    #[inline]
    pub fn eval_field(&self, x: &[f64], out: &mut [f64]) {
        for (o, f) in out.iter_mut().zip(&self.compiled) {
            *o = f.eval(x);
        }
    }

    /// Symbolic Jacobian of the field evaluated at the origin.
    pub fn jacobian(&self) -> Matrix {
        let n = self.dim();
        let origin = vec![0.0; n];
        let mut j = Matrix::zeros(n, n);
        for (i, f) in self.field.iter().enumerate() {
            for v in f.variables() {
                j[(i, v)] = f.derivative(v).eval(&origin);
            }
        }
        j
    }

    /// Jacobian in the chart used for stability, together with the state
    /// variables the chart coordinates correspond to.
    ///
    /// The lifted Ising field is tangent to the constraint manifold, so its
    /// Jacobian has zero rows for the `x_{i,2}` coordinates; stability is read
    /// off the phase Jacobian on the `x_{i,1}` coordinates instead.
    pub fn stability_jacobian(&self) -> (Matrix, Vec<usize>) {
        match &self.model {
            Model::Ising(cfg) => (
                ising::phase_jacobian(cfg),
                (0..self.n_nodes).map(|i| i * self.node_dim).collect(),
            ),
            _ => (self.jacobian(), (0..self.dim()).collect()),
        }
    }

    /// Largest real part of the stability Jacobian's eigenvalues.
    pub fn spectral_abscissa(&self) -> Result<f64> {
        gen_eig_max_real(&self.stability_jacobian().0)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "network N={} m={}", self.n_nodes, self.node_dim).unwrap();
        match &self.model {
            Model::Vdp { alpha } => {
                writeln!(s, "model vdp").unwrap();
                writeln!(s, "alpha {}", join(alpha)).unwrap();
            }
            Model::Ising(cfg) => {
                writeln!(s, "model ising").unwrap();
                writeln!(s, "mu {:.16e}", cfg.mu).unwrap();
                let bits: Vec<&str> = cfg
                    .pattern
                    .iter()
                    .map(|&p| if p == 0.0 { "0" } else { "1" })
                    .collect();
                writeln!(s, "pattern {}", bits.join(" ")).unwrap();
            }
            Model::Custom => writeln!(s, "model custom").unwrap(),
        }
        writeln!(s, "adjacency").unwrap();
        for row in &self.adjacency {
            writeln!(s, "{}", join(row)).unwrap();
        }
        writeln!(s, "equilibrium {}", join(&self.equilibrium_original)).unwrap();
        for (i, f) in self.field.iter().enumerate() {
            writeln!(s, "field {}", i + 1).unwrap();
            s.push_str(&write_poly(f));
        }
        for (i, h) in self.equalities.iter().enumerate() {
            writeln!(s, "equality {}", i + 1).unwrap();
            s.push_str(&write_poly(h));
        }
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .peekable();
        let (no, header) = lines.next().ok_or_else(|| parse_err(1, "empty system file"))?;
        let (n_nodes, node_dim) = parse_header(header).ok_or_else(|| parse_err(no + 1, "expected `network N=<n> m=<m>`"))?;
        let n = n_nodes * node_dim;
        let mut kind = String::from("custom");
        let mut alpha = Vec::new();
        let mut mu = 0.0;
        let mut bits = Vec::new();
        let mut adjacency = Vec::new();
        let mut equilibrium = vec![0.0; n];
        let mut field = Vec::new();
        let mut equalities = Vec::new();
        while let Some((no, line)) = lines.next() {
            let line = line.trim();
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "model" => kind = rest.trim().to_string(),
                "alpha" => alpha = parse_floats(rest, no)?,
                "mu" => mu = parse_floats(rest, no)?.first().copied().unwrap_or(0.0),
                "pattern" => {
                    bits = rest.split_whitespace().map(|b| b == "1").collect();
                }
                "adjacency" => {
                    for _ in 0..n_nodes {
                        let (rno, row) = lines
                            .next()
                            .ok_or_else(|| parse_err(no + 1, "truncated adjacency"))?;
                        adjacency.push(parse_floats(row, rno)?);
                    }
                }
                "equilibrium" => equilibrium = parse_floats(rest, no)?,
                "field" => field.push(parse_poly_lines(&mut lines, 0)?),
                "equality" => equalities.push(parse_poly_lines(&mut lines, 0)?),
                "end" => break,
                _ => return Err(parse_err(no + 1, format!("unexpected `{key}`"))),
            }
        }
        let model = match kind.as_str() {
            "vdp" => Model::Vdp { alpha },
            "ising" => Model::Ising(IsingConfig {
                adjacency: adjacency.clone(),
                mu,
                pattern: ising::pattern_from_bits(&bits),
            }),
            "custom" => Model::Custom,
            other => return Err(Error::Config(format!("unknown model `{other}`"))),
        };
        if let Some(p) = field.iter().find(|p: &&Poly| p.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.dim(),
            });
        }
        Self::new(n_nodes, node_dim, field, adjacency, equalities, equilibrium, model)
    }

    /// SHA-256 of the canonical text form; binds certificates to a system.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ")
}

fn parse_floats(s: &str, line: usize) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| parse_err(line + 1, format!("bad number `{t}`"))))
        .collect()
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.trim().strip_prefix("network")?;
    let mut n = None;
    let mut m = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("N=") {
            n = v.parse().ok();
        } else if let Some(v) = tok.strip_prefix("m=") {
            m = v.parse().ok();
        }
    }
    Some((n?, m?))
}
