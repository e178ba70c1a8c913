//! Text form of a composite certificate:
//!
//! ```text
//! composite L=2
//! system_digest <hex>
//! config_digest <hex>
//! seed 7
//! lambda <λ>
//! eta <η>
//! non_certifying 0
//! degraded_weights 0
//! weights <L values>
//! a <row>            (L lines)
//! b <row>            (L lines)
//! failed <label> <reason>
//! iteration <λ> <η> <audit scale> <failed subsets>
//! function
//! poly n=...
//! partial ...        (one record per surviving subset)
//! end
//! ```

use std::fmt::Write as _;

use super::{CompositeCertificate, IterationRecord};
use crate::error::{parse_err, Result};
use crate::poly::text::parse_poly_lines;
use crate::poly::write_poly;
use crate::synthesis::{read_partial, write_partial};
use crate::{Matrix, Poly};

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ")
}

pub fn write_composite(c: &CompositeCertificate) -> String {
    let mut s = String::new();
    let l = c.weights.len();
    let _ = writeln!(s, "composite L={l}");
    let _ = writeln!(s, "system_digest {}", c.system_digest);
    let _ = writeln!(s, "config_digest {}", c.config_digest);
    let _ = writeln!(s, "seed {}", c.seed);
    let _ = writeln!(s, "lambda {:.16e}", c.lambda);
    let _ = writeln!(s, "eta {:.16e}", c.eta);
    let _ = writeln!(s, "non_certifying {}", u8::from(c.non_certifying));
    let _ = writeln!(s, "degraded_weights {}", u8::from(c.degraded_weights));
    let _ = writeln!(s, "weights {}", join(&c.weights));
    for r in 0..c.a.rows() {
        let _ = writeln!(s, "a {}", join(c.a.row(r)));
    }
    for r in 0..c.b.rows() {
        let _ = writeln!(s, "b {}", join(c.b.row(r)));
    }
    for (label, reason) in &c.failed {
        let _ = writeln!(s, "failed {label} {reason}");
    }
    for h in &c.history {
        let _ = writeln!(s, "iteration {:.16e} {:.16e} {:.16e} {}", h.lambda, h.eta, h.audit_scale, h.failed_subsets);
    }
    s.push_str("function\n");
    s.push_str(&write_poly(&c.v));
    for p in &c.partials {
        s.push_str(&write_partial(p));
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

fn matrix(rows: &[Vec<f64>], l: usize, name: &str) -> Result<Matrix> {
    if rows.len() != l || rows.iter().any(|r| r.len() != l) {
        return Err(parse_err(0, format!("matrix `{name}` is not {l}×{l}")));
    }
    Ok(Matrix::from_fn(l, l, |r, c| rows[r][c]))
}

pub fn read_composite(text: &str) -> Result<CompositeCertificate> {
    let all: Vec<&str> = text.lines().collect();
    let mut lines = all
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .peekable();
    let (no, header) = lines.next().ok_or_else(|| parse_err(1, "empty certificate"))?;
    let l: usize = header
        .trim()
        .strip_prefix("composite L=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| parse_err(no + 1, "expected `composite L=<count>`"))?;
    let mut c = CompositeCertificate::from_function(Poly::zero(0), 0.0);
    c.non_certifying = false;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    while let Some((no, line)) = lines.next() {
        let line = line.trim();
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        match key {
            "system_digest" => c.system_digest = rest.trim().to_string(),
            "config_digest" => c.config_digest = rest.trim().to_string(),
            "seed" => c.seed = rest.trim().parse().map_err(|_| parse_err(no + 1, "bad seed"))?,
            "lambda" => c.lambda = scalar(rest, no)?,
            "eta" => c.eta = scalar(rest, no)?,
            "non_certifying" => c.non_certifying = rest.trim() == "1",
            "degraded_weights" => c.degraded_weights = rest.trim() == "1",
            "weights" => c.weights = floats(rest, no)?,
            "a" => a.push(floats(rest, no)?),
            "b" => b.push(floats(rest, no)?),
            "failed" => {
                let (label, reason) = rest.split_once(' ').unwrap_or((rest, ""));
                c.failed.push((label.to_string(), reason.to_string()));
            }
            "iteration" => {
                let v = floats(rest, no)?;
                if v.len() != 4 {
                    return Err(parse_err(no + 1, "iteration needs four values"));
                }
                c.history.push(IterationRecord {
                    lambda: v[0],
                    eta: v[1],
                    audit_scale: v[2],
                    failed_subsets: v[3] as usize,
                });
            }
            "function" => c.v = parse_poly_lines(&mut lines, 0)?,
            "partial" => {
                let end = (no..all.len())
                    .find(|&i| all[i].trim() == "end")
                    .ok_or_else(|| parse_err(no + 1, "partial record without `end`"))?;
                c.partials.push(read_partial(&all[no..=end].join("\n"))?);
                while lines.next_if(|(i, _)| *i <= end).is_some() {}
            }
            "end" => {
                if c.weights.len() != l {
                    return Err(parse_err(no + 1, format!("{} weights for L={l}", c.weights.len())));
                }
                c.a = matrix(&a, l, "a")?;
                c.b = matrix(&b, l, "b")?;
                return Ok(c);
            }
            _ => return Err(parse_err(no + 1, format!("unexpected `{key}`"))),
        }
    }
    Err(parse_err(0, "certificate without `end`"))
}
