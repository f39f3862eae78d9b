//! Shared helpers for the line-oriented text formats.

use crate::data::SparseVector;
use crate::error::{Error, Result};

/// Shortest decimal string that parses back to the same `f64`.
///
/// Very small and very large magnitudes switch to exponent notation so
/// lines stay short; both notations round-trip exactly.
pub fn fmt_real(v: f64) -> String {
    let a = v.abs();
    if v != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub(crate) fn parse_real(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("cannot parse `{tok}` as a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite value `{tok}`")));
    }
    Ok(v)
}

pub(crate) fn parse_label(tok: &str, line: usize) -> Result<i8> {
    match tok {
        "+1" | "1" | "1.0" | "+1.0" => Ok(1),
        "-1" | "-1.0" => Ok(-1),
        _ => Err(Error::Label {
            line,
            label: tok.to_string(),
        }),
    }
}

pub(crate) fn fmt_label(y: i8) -> &'static str {
    if y > 0 {
        "+1"
    } else {
        "-1"
    }
}

/// Parses `idx:val` tokens into a sparse vector, enforcing 1-based strictly
/// increasing indices. Explicit zeros are dropped.
pub(crate) fn parse_entries<'a>(
    tokens: impl Iterator<Item = &'a str>,
    line: usize,
) -> Result<SparseVector> {
    let mut indices = Vec::new();
    let mut values = Vec::new();
    let mut last: u32 = 0;
    for tok in tokens {
        let (i, v) = tok
            .split_once(':')
            .ok_or_else(|| Error::parse(line, format!("expected `idx:val`, got `{tok}`")))?;
        let idx: u32 = i
            .parse()
            .map_err(|_| Error::parse(line, format!("bad feature index `{i}`")))?;
        if idx == 0 {
            return Err(Error::format(line, "feature indices are 1-based"));
        }
        if idx == last {
            return Err(Error::format(line, format!("duplicate feature index {idx}")));
        }
        if idx < last {
            return Err(Error::format(
                line,
                format!("feature index {idx} follows {last}; indices must increase"),
            ));
        }
        last = idx;
        let val = parse_real(v, line)?;
        if val != 0.0 {
            indices.push(idx);
            values.push(val);
        }
    }
    Ok(SparseVector::from_sorted_unchecked(indices, values))
}

pub(crate) fn push_entries(out: &mut String, x: &SparseVector) {
    for (i, v) in x.iter() {
        out.push(' ');
        out.push_str(&i.to_string());
        out.push(':');
        out.push_str(&fmt_real(v));
    }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}
