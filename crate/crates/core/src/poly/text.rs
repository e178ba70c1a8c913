//! Line-oriented polynomial text format.
//!
//! ```text
//! poly n=2
//! 1.0000000000000000e0 2 0
//! -3.5000000000000000e0 0 1
//! ```
//! Coefficients carry 17 significant digits so `f64` values round-trip exactly.

use std::fmt::Write as _;

use super::{Monomial, Polynomial};
use crate::error::{parse_err, Result};
use crate::Scalar;

pub fn write_poly<T: Scalar>(p: &Polynomial<T>) -> String {
    let mut s = String::new();
    writeln!(s, "poly n={}", p.dim()).unwrap();
    for (m, c) in p.terms() {
        write!(s, "{:.16e}", c.as_f64()).unwrap();
        for e in m.exponents() {
            write!(s, " {e}").unwrap();
        }
        s.push('\n');
    }
    s
}

/// Parses one polynomial block. Blank lines and `#` comments are skipped;
/// parsing stops at the first line that is neither a term nor the header.
pub fn parse_poly<T: Scalar>(text: &str) -> Result<Polynomial<T>> {
    let mut lines = text.lines().enumerate().peekable();
    parse_poly_lines(&mut lines, 0)
}

pub(crate) fn parse_poly_lines<'a, T, I>(
    lines: &mut std::iter::Peekable<I>,
    line_offset: usize,
) -> Result<Polynomial<T>>
where
    T: Scalar,
    I: Iterator<Item = (usize, &'a str)>,
{
    let (hdr_no, header) = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() || l.trim_start().starts_with('#') => continue,
            Some((no, l)) => break (no, l.trim()),
            None => return Err(parse_err(line_offset, "missing `poly n=<dim>` header")),
        }
    };
    let dim: usize = header
        .strip_prefix("poly n=")
        .ok_or_else(|| parse_err(hdr_no + 1 + line_offset, "expected `poly n=<dim>`"))?
        .trim()
        .parse()
        .map_err(|_| parse_err(hdr_no + 1 + line_offset, "bad dimension"))?;
    let mut p = Polynomial::zero(dim);
    while let Some(&(no, l)) = lines.peek() {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            lines.next();
            continue;
        }
        let mut fields = l.split_whitespace();
        let first = fields.next().unwrap_or("");
        let Ok(c) = first.parse::<f64>() else {
            break;
        };
        let exps: std::result::Result<Vec<u8>, _> = fields.map(str::parse::<u8>).collect();
        let exps = exps.map_err(|_| parse_err(no + 1 + line_offset, "bad exponent"))?;
        if exps.len() != dim {
            return Err(parse_err(
                no + 1 + line_offset,
                format!("expected {dim} exponents, found {}", exps.len()),
            ));
        }
        p.add_term(Monomial::from_exponents(exps), T::of(c));
        lines.next();
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Poly;
    use proptest::prelude::*;

    #[test]
    fn header_and_terms() {
        let p = &Poly::var(2, 0).scale(1.5) + &Poly::var(2, 1).powi(2).scale(-0.1);
        let s = write_poly(&p);
        assert!(s.starts_with("poly n=2\n"));
        assert_eq!(s.lines().count(), 3);
        assert_eq!(parse_poly::<f64>(&s).unwrap(), p);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_poly::<f64>("poly n=2\n1.0 1\n").is_err());
        assert!(parse_poly::<f64>("n=2\n").is_err());
        assert!(parse_poly::<f64>("").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(coefs in prop::collection::vec((-1e6f64..1e6, 0u8..4, 0u8..4, 0u8..4), 0..12)) {
            let mut p = Poly::zero(3);
            for (c, a, b, d) in coefs {
                p.add_term(Monomial::from_exponents(vec![a, b, d]), c / 7.0);
            }
            let q: Poly = parse_poly(&write_poly(&p)).unwrap();
            prop_assert_eq!(q, p);
        }
    }
}
