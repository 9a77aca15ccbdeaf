// SPDX-License-Identifier: Apache-2.0

//! Text helpers shared by the pulse-file, bath-file and CSV writers.

use crate::error::{Error, Result};

/// Formats `x` like C's `%.17g`: 17 significant digits, trailing zeros
/// dropped, scientific notation outside `[1e-4, 1e17)`. Parsing the result
/// with `str::parse::<f64>` returns the identical bit pattern.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_owned();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".to_owned() } else { "-inf".to_owned() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".to_owned() } else { "0".to_owned() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();

    if !(-4..17).contains(&exp) {
        let mut m = format!("{}.{}", &digits[..1], &digits[1..]);
        trim_fraction(&mut m);
        let esign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{m}e{esign}{:02}", exp.abs());
    }

    let mut out = String::with_capacity(24);
    out.push_str(sign);
    if exp < 0 {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        out.push_str(&digits[..int_len]);
        out.push('.');
        out.push_str(&digits[int_len..]);
    }
    trim_fraction(&mut out);
    out
}

fn trim_fraction(s: &mut String) {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
}

/// One `key = value` entry with its 1-based source line.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits line-oriented `key = value` text. `#` starts a comment; blank
/// lines are skipped.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected `key = value`, found `{content}`"),
        })?;
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::Parse { line, message: format!("malformed key `{key}`") });
        }
        entries.push(Entry { line, key: key.to_owned(), value: value.trim().to_owned() });
    }
    Ok(entries)
}

pub fn parse_f64(entry: &Entry) -> Result<f64> {
    let v: f64 = entry.value.parse().map_err(|_| Error::Parse {
        line: entry.line,
        message: format!("`{}` is not a decimal number for key `{}`", entry.value, entry.key),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line: entry.line,
            message: format!("non-finite value for key `{}`", entry.key),
        });
    }
    Ok(v)
}
