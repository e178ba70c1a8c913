use std::fmt;

use crate::error::{Error, Result};

/// A sorted set of node indices of a network with `n_nodes` nodes, each carrying
/// `node_dim` scalar states. Node `i` owns the variables `i·m .. (i+1)·m`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subset {
    nodes: Vec<usize>,
    n_nodes: usize,
    node_dim: usize,
}

impl Subset {
    /// Zero-based node indices; duplicates or out-of-range indices are rejected.
    pub fn new(mut nodes: Vec<usize>, n_nodes: usize, node_dim: usize) -> Result<Self> {
        if node_dim == 0 {
            return Err(Error::InvalidSubset("node dimension must be positive".into()));
        }
        nodes.sort_unstable();
        let len = nodes.len();
        nodes.dedup();
        if nodes.len() != len {
            return Err(Error::InvalidSubset("duplicate node index".into()));
        }
        if nodes.is_empty() || nodes.len() > n_nodes {
            return Err(Error::InvalidSubset(format!(
                "cardinality {} outside 1..={}",
                nodes.len(),
                n_nodes
            )));
        }
        if let Some(&bad) = nodes.iter().find(|&&i| i >= n_nodes) {
            return Err(Error::InvalidSubset(format!(
                "node {bad} out of range for {n_nodes} nodes"
            )));
        }
        Ok(Self {
            nodes,
            n_nodes,
            node_dim,
        })
    }

    pub fn all(n_nodes: usize, node_dim: usize) -> Self {
        Self {
            nodes: (0..n_nodes).collect(),
            n_nodes,
            node_dim,
        }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn cardinality(&self) -> usize {
        self.nodes.len()
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

    pub fn contains_node(&self, node: usize) -> bool {
        self.nodes.binary_search(&node).is_ok()
    }

    pub fn contains_var(&self, var: usize) -> bool {
        self.contains_node(var / self.node_dim)
    }

    /// Scalar variable indices owned by the subset, ascending.
    pub fn vars(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .flat_map(|&i| (i * self.node_dim)..((i + 1) * self.node_dim))
            .collect()
    }

    pub fn is_superset_of(&self, other: &Subset) -> bool {
        other.nodes.iter().all(|&n| self.contains_node(n))
    }

    pub fn intersects(&self, other: &Subset) -> bool {
        other.nodes.iter().any(|&n| self.contains_node(n))
    }

    /// `self` plus every node adjacent to one of its members (`adjacency[i][j] != 0`).
    pub fn with_neighbors(&self, adjacency: &[Vec<f64>]) -> Subset {
        let mut nodes = self.nodes.clone();
        for &i in &self.nodes {
            for (j, &kij) in adjacency[i].iter().enumerate() {
                if kij != 0.0 && !nodes.contains(&j) {
                    nodes.push(j);
                }
            }
        }
        nodes.sort_unstable();
        Subset {
            nodes,
            n_nodes: self.n_nodes,
            node_dim: self.node_dim,
        }
    }

    /// One-based label such as `{1,6}`.
    pub fn label(&self) -> String {
        let inner: Vec<String> = self.nodes.iter().map(|n| (n + 1).to_string()).collect();
        format!("{{{}}}", inner.join(","))
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subset{}", self.label())
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}
