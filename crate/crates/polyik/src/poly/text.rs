//! Round-trippable text form for polynomials and polynomial systems.
//!
//! A polynomial is a sum of terms like `-3/2*c1^2*s3 + 1`: explicit rational
//! coefficients, `*` between factors, `^` for powers. A system file holds a
//! `vars N` header followed by one polynomial per line; `#` starts a comment.

use super::{Coeff, Monomial, Polynomial};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("malformed polynomial near `{0}`")]
    Malformed(String),
    #[error("missing or malformed `vars N` header")]
    MissingHeader,
    #[error("line {0}: {1}")]
    AtLine(usize, Box<ParseError>),
}

/// Formats a polynomial using `names` (defaults when `None`), highest term first.
pub fn format_polynomial(p: &Polynomial, names: Option<&[String]>) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let default_names;
    let names = match names {
        Some(n) => n,
        None => {
            default_names = super::default_var_names(p.nvars());
            &default_names
        }
    };
    let mut out = String::new();
    for (i, (m, c)) in p.terms().collect::<Vec<_>>().into_iter().rev().enumerate() {
        let neg = c.is_negative();
        let abs = c.abs();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mut factors: Vec<String> = Vec::new();
        if !abs.is_one() || m.is_one() {
            factors.push(format_coeff(&abs));
        }
        for (vi, &e) in m.exps().iter().enumerate() {
            match e {
                0 => {}
                1 => factors.push(names[vi].clone()),
                _ => factors.push(format!("{}^{}", names[vi], e)),
            }
        }
        out.push_str(&factors.join("*"));
    }
    out
}

fn format_coeff(c: &Coeff) -> String {
    if c.denom().is_one() {
        format!("{}", c.numer())
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Parses a polynomial over the given variable names.
pub fn parse_polynomial(input: &str, names: &[String]) -> Result<Polynomial, ParseError> {
    let nvars = names.len();
    let find = |tok: &str| -> Result<usize, ParseError> {
        names
            .iter()
            .position(|n| n == tok)
            .ok_or_else(|| ParseError::UnknownVariable(tok.to_string()))
    };

    let mut poly = Polynomial::zero(nvars);
    let cleaned: String = input.chars().filter(|c| !c.is_whitespace()).collect();
    if cleaned.is_empty() {
        return Err(ParseError::Malformed(input.to_string()));
    }
    // Split into signed terms at top-level + and -.
    let bytes = cleaned.as_bytes();
    let mut term_start = 0usize;
    let mut spans: Vec<(bool, &str)> = Vec::new(); // (negative, body)
    let mut neg = false;
    let mut i = 0usize;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        if (ch == '+' || ch == '-') && i > term_start {
            // A sign directly after '^', '*', or '/' would be part of a number,
            // but the format never emits those; treat every +/- as a separator.
            spans.push((neg, &cleaned[term_start..i]));
            neg = ch == '-';
            term_start = i + 1;
        } else if (ch == '+' || ch == '-') && i == term_start {
            neg = ch == '-';
            term_start = i + 1;
        }
        i += 1;
    }
    if term_start < cleaned.len() {
        spans.push((neg, &cleaned[term_start..]));
    }
    if spans.is_empty() {
        return Err(ParseError::Malformed(input.to_string()));
    }

    for (negative, body) in spans {
        let mut coeff = Coeff::one();
        let mut exps = vec![0u32; nvars];
        for factor in body.split('*') {
            if factor.is_empty() {
                return Err(ParseError::Malformed(body.to_string()));
            }
            let first = factor.chars().next().unwrap();
            if first.is_ascii_digit() {
                let (num_str, den_str) = match factor.split_once('/') {
                    Some((n, d)) => (n, d),
                    None => (factor, "1"),
                };
                let n = BigInt::from_str(num_str)
                    .map_err(|_| ParseError::Malformed(factor.to_string()))?;
                let d = BigInt::from_str(den_str)
                    .map_err(|_| ParseError::Malformed(factor.to_string()))?;
                if d.is_zero() {
                    return Err(ParseError::Malformed(factor.to_string()));
                }
                coeff *= Coeff::new(n, d);
            } else {
                let (name, pow) = match factor.split_once('^') {
                    Some((v, e)) => {
                        let e: u32 =
                            e.parse().map_err(|_| ParseError::Malformed(factor.to_string()))?;
                        (v, e)
                    }
                    None => (factor, 1),
                };
                let idx = find(name)?;
                exps[idx] += pow;
            }
        }
        if negative {
            coeff = -coeff;
        }
        let mono = Monomial::from_exps(exps);
        let existing = poly.coeff(&mono).cloned().unwrap_or_else(Coeff::zero);
        let sum = existing + coeff;
        let mut rebuilt: Vec<(Monomial, Coeff)> = poly
            .terms()
            .filter(|(m, _)| *m != &mono)
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        if !sum.is_zero() {
            rebuilt.push((mono, sum));
        }
        poly = Polynomial::from_terms(nvars, rebuilt);
    }
    Ok(poly)
}

/// Reads a polynomial system: `vars N` header then one polynomial per line.
pub fn parse_system(input: &str) -> Result<(usize, Vec<Polynomial>), ParseError> {
    let mut nvars: Option<usize> = None;
    let mut polys = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for (lineno, raw) in input.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        match nvars {
            None => {
                let rest = line
                    .strip_prefix("vars")
                    .ok_or(ParseError::MissingHeader)?
                    .trim();
                let n: usize = rest.parse().map_err(|_| ParseError::MissingHeader)?;
                nvars = Some(n);
                names = super::default_var_names(n);
            }
            Some(_) => {
                let p = parse_polynomial(line, &names)
                    .map_err(|e| ParseError::AtLine(lineno + 1, Box::new(e)))?;
                polys.push(p);
            }
        }
    }
    match nvars {
        Some(n) => Ok((n, polys)),
        None => Err(ParseError::MissingHeader),
    }
}

/// Writes a system in the format read by [`parse_system`].
pub fn write_system(nvars: usize, polys: &[Polynomial], comment: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(c) = comment {
        for line in c.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    out.push_str(&format!("vars {nvars}\n"));
    for p in polys {
        out.push_str(&format_polynomial(p, None));
        out.push('\n');
    }
    out
}
