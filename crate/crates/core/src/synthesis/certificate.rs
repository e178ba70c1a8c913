//! Text form of a partial certificate:
//!
//! ```text
//! partial index=1 nodes=1,2 N=5 m=2
//! gamma <γ_p>
//! nu <ν_p>
//! gamma_c <γ_c>
//! stalled 0
//! row_a <L values>
//! row_b <L values>
//! history <γ> <ν>
//! function
//! poly n=...
//! multiplier s
//! poly n=...
//! end
//! ```

use std::fmt::Write as _;

use super::PartialCertificate;
use crate::error::{parse_err, Result};
use crate::poly::text::parse_poly_lines;
use crate::poly::{write_poly, Subset};
use crate::Poly;

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ")
}

pub fn write_partial(c: &PartialCertificate) -> String {
    let mut s = String::new();
    let nodes: Vec<String> = c.subset.nodes().iter().map(|n| (n + 1).to_string()).collect();
    let _ = writeln!(
        s,
        "partial index={} nodes={} N={} m={}",
        c.index + 1,
        nodes.join(","),
        c.subset.n_nodes(),
        c.subset.node_dim()
    );
    let _ = writeln!(s, "gamma {:.16e}", c.gamma);
    let _ = writeln!(s, "nu {:.16e}", c.nu);
    let _ = writeln!(s, "gamma_c {:.16e}", c.gamma_c);
    let _ = writeln!(s, "stalled {}", u8::from(c.stalled));
    let _ = writeln!(s, "row_a {}", join(&c.row_a));
    let _ = writeln!(s, "row_b {}", join(&c.row_b));
    for (g, n) in &c.history {
        let _ = writeln!(s, "history {g:.16e} {n:.16e}");
    }
    s.push_str("function\n");
    s.push_str(&write_poly(&c.v));
    for (name, p) in &c.multipliers {
        let _ = writeln!(s, "multiplier {name}");
        s.push_str(&write_poly(p));
    }
    s.push_str("end\n");
    s
}

fn floats(rest: &str, no: usize) -> Result<Vec<f64>> {
    rest.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| parse_err(no + 1, format!("bad number `{t}`"))))
        .collect()
}

fn scalar(rest: &str, no: usize) -> Result<f64> {
    floats(rest, no)?.first().copied().ok_or_else(|| parse_err(no + 1, "missing value"))
}

/// Parses one record; `text` may hold further content after its `end` line.
pub fn read_partial(text: &str) -> Result<PartialCertificate> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .peekable();
    let (no, header) = lines.next().ok_or_else(|| parse_err(1, "empty certificate"))?;
    let mut index = None;
    let mut nodes = Vec::new();
    let mut n_nodes = None;
    let mut node_dim = None;
    for tok in header.trim().strip_prefix("partial").ok_or_else(|| parse_err(no + 1, "expected `partial`"))?.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| parse_err(no + 1, format!("bad field `{tok}`")))?;
        let bad = || parse_err(no + 1, format!("bad value in `{tok}`"));
        match k {
            "index" => index = Some(v.parse::<usize>().map_err(|_| bad())?),
            "nodes" => {
                nodes = v
                    .split(',')
                    .map(|n| n.parse::<usize>().map(|n| n - 1).map_err(|_| bad()))
                    .collect::<Result<_>>()?
            }
            "N" => n_nodes = Some(v.parse::<usize>().map_err(|_| bad())?),
            "m" => node_dim = Some(v.parse::<usize>().map_err(|_| bad())?),
            _ => return Err(parse_err(no + 1, format!("unknown field `{k}`"))),
        }
    }
    let (Some(index), Some(n_nodes), Some(node_dim)) = (index, n_nodes, node_dim) else {
        return Err(parse_err(no + 1, "header needs index, N and m"));
    };
    let subset = Subset::new(nodes, n_nodes, node_dim)?;
    let mut c = PartialCertificate {
        index: index.checked_sub(1).ok_or_else(|| parse_err(no + 1, "index is one-based"))?,
        subset,
        v: Poly::zero(n_nodes * node_dim),
        gamma: 0.0,
        nu: 0.0,
        row_a: Vec::new(),
        row_b: Vec::new(),
        gamma_c: 0.0,
        multipliers: Vec::new(),
        stalled: false,
        history: Vec::new(),
    };
    while let Some((no, line)) = lines.next() {
        let line = line.trim();
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        match key {
            "gamma" => c.gamma = scalar(rest, no)?,
            "nu" => c.nu = scalar(rest, no)?,
            "gamma_c" => c.gamma_c = scalar(rest, no)?,
            "stalled" => c.stalled = rest.trim() == "1",
            "row_a" => c.row_a = floats(rest, no)?,
            "row_b" => c.row_b = floats(rest, no)?,
            "history" => {
                let v = floats(rest, no)?;
                if v.len() != 2 {
                    return Err(parse_err(no + 1, "history needs two values"));
                }
                c.history.push((v[0], v[1]));
            }
            "function" => c.v = parse_poly_lines(&mut lines, 0)?,
            "multiplier" => {
                let p = parse_poly_lines(&mut lines, 0)?;
                c.multipliers.push((rest.trim().to_string(), p));
            }
            "end" => return Ok(c),
            _ => return Err(parse_err(no + 1, format!("unexpected `{key}`"))),
        }
    }
    Err(parse_err(0, "certificate without `end`"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let subset = Subset::new(vec![0, 2], 3, 2).unwrap();
        let v = &Poly::var(6, 0).powi(2) + &Poly::var(6, 4).powi(4).scale(0.1 + 0.2);
        let c = PartialCertificate {
            index: 1,
            subset,
            v: v.clone(),
            gamma: 0.7,
            nu: 1e-3,
            row_a: vec![0.25, -1.0 / 3.0, 0.0],
            row_b: vec![0.0, 0.1, 0.0],
            gamma_c: 1.25,
            multipliers: vec![("s".into(), Poly::constant(6, 2.0))],
            stalled: true,
            history: vec![(0.5, 0.1), (0.7, 1e-3)],
        };
        let back = read_partial(&write_partial(&c)).unwrap();
        assert_eq!(back.index, 1);
        assert_eq!(back.subset, c.subset);
        assert_eq!(back.v, v);
        assert_eq!(back.row_a, c.row_a);
        assert_eq!(back.row_b, c.row_b);
        assert_eq!(back.history, c.history);
        assert_eq!(back.multipliers, c.multipliers);
        assert!(back.stalled);
        assert_eq!(write_partial(&back), write_partial(&c));
    }

    #[test]
    fn truncated_record_is_rejected() {
        assert!(read_partial("partial index=1 nodes=1 N=1 m=1\ngamma 1\n").is_err());
        assert!(read_partial("partial index=1 nodes=1 N=1 m=1\nbogus 1\nend\n").is_err());
    }
}
