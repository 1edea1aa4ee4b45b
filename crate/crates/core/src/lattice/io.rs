//! Text formats for point sets and weight functions.
//!
//! * JSON: an array of integer arrays, `[[0,1],[1,1]]`.
//! * Plain text: one point per line, coordinates separated by whitespace.
//!   Blank lines and lines starting with `#` are skipped, so the
//!   zero-dimensional point is only expressible in JSON (`[[]]`).
//! * Weights: CSV rows `point,weight` where `point` is the space-separated
//!   coordinate list.
//!
//! Every parser rejects ragged rows.

use num_rational::BigRational;

use super::point::{Point, PointSet};
use super::weights::WeightFn;
use crate::error::{Error, Result};

fn rows_to_set(rows: Vec<(usize, Vec<i64>)>) -> Result<PointSet> {
    let dim = match rows.first() {
        Some((_, r)) => r.len(),
        None => return Ok(PointSet::empty(0)),
    };
    for (line, r) in &rows {
        if r.len() != dim {
            return Err(Error::Parse {
                line: *line,
                message: format!("ragged row: expected {dim} coordinates, found {}", r.len()),
            });
        }
    }
    PointSet::new(dim, rows.into_iter().map(|(_, r)| Point::new(r)))
}

pub fn parse_point_set_json(text: &str) -> Result<PointSet> {
    let rows: Vec<Vec<i64>> = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    rows_to_set(
        rows.into_iter()
            .enumerate()
            .map(|(i, r)| (i + 1, r))
            .collect(),
    )
}

pub fn parse_point_set_text(text: &str) -> Result<PointSet> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let coords = parse_coords(line).map_err(|message| Error::Parse {
            line: i + 1,
            message,
        })?;
        rows.push((i + 1, coords));
    }
    rows_to_set(rows)
}

/// Picks the JSON parser when the text starts with `[`, else plain text.
pub fn parse_point_set(text: &str) -> Result<PointSet> {
    if text.trim_start().starts_with('[') {
        parse_point_set_json(text)
    } else {
        parse_point_set_text(text)
    }
}

fn parse_coords(field: &str) -> std::result::Result<Vec<i64>, String> {
    field
        .split_whitespace()
        .map(|tok| {
            tok.parse::<i64>()
                .map_err(|e| format!("bad coordinate {tok:?}: {e}"))
        })
        .collect()
}

pub fn point_set_to_json(set: &PointSet) -> String {
    let rows: Vec<&[i64]> = set.iter().map(|p| p.coords()).collect();
    serde_json::to_string(&rows).expect("integer rows serialize")
}

pub fn point_set_to_text(set: &PointSet) -> String {
    let mut out = String::new();
    for p in set {
        let coords: Vec<String> = p.coords().iter().map(|c| c.to_string()).collect();
        out.push_str(&coords.join(" "));
        out.push('\n');
    }
    out
}

fn format_point(p: &Point) -> String {
    p.coords()
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Weight CSV with a `point,weight` header; weights printed with 17
/// significant digits.
pub fn weights_to_csv(f: &WeightFn<f64>) -> String {
    let mut out = String::from("point,weight\n");
    for (p, w) in f.iter() {
        out.push_str(&format!(
            "{},{}\n",
            format_point(p),
            crate::report::fmt_f64(*w)
        ));
    }
    out
}

/// Parses `point,weight` rows. Weights may be decimals (`0.25`, `1e-3`) or
/// exact fractions (`1/3`); decimals are read exactly as written.
pub fn parse_weights_csv(text: &str) -> Result<WeightFn<BigRational>> {
    let mut rows: Vec<(Point, BigRational)> = Vec::new();
    let mut dim = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("point")) {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        let (coords, weight) = line
            .split_once(',')
            .ok_or_else(|| parse_err("expected `point,weight`".into()))?;
        let coords = parse_coords(coords).map_err(parse_err)?;
        match dim {
            None => dim = Some(coords.len()),
            Some(d) if d != coords.len() => {
                return Err(parse_err(format!(
                    "ragged row: expected {d} coordinates, found {}",
                    coords.len()
                )))
            }
            _ => {}
        }
        let w = parse_rational(weight.trim()).map_err(parse_err)?;
        rows.push((Point::new(coords), w));
    }
    WeightFn::from_entries(dim.unwrap_or(0), rows)
}

/// Parses `a/b`, an integer, or a decimal with optional exponent, exactly.
pub fn parse_rational(s: &str) -> std::result::Result<BigRational, String> {
    use num_bigint::BigInt;
    use num_traits::Pow;

    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n
            .trim()
            .parse()
            .map_err(|e| format!("bad numerator {n:?}: {e}"))?;
        let d: BigInt = d
            .trim()
            .parse()
            .map_err(|e| format!("bad denominator {d:?}: {e}"))?;
        if d == BigInt::from(0) {
            return Err("zero denominator".into());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (
            &s[..pos],
            s[pos + 1..]
                .parse::<i32>()
                .map_err(|e| format!("bad exponent in {s:?}: {e}"))?,
        ),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let negative = int_part.starts_with('-');
    let digits = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("not a number: {s:?}"));
    }
    let mut value = BigRational::from_integer(digits.parse::<BigInt>().unwrap());
    let scale = exp - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= Pow::pow(&ten, scale as u32);
    } else {
        value /= Pow::pow(&ten, (-scale) as u32);
    }
    if negative {
        value = -value;
    }
    Ok(value)
}
