// SPDX-License-Identifier: Apache-2.0

//! Weighted Pauli strings such as `0.7 X1 + 0.3 Z1 - 0.2 X1 Y2`.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// `coeff · P_{s1} P_{s2} …` with sites counted from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coeff: f64,
    pub ops: Vec<(usize, char)>,
}

fn single(op: char) -> [[C64; 2]; 2] {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match op {
        'X' => [[z, one], [one, z]],
        'Y' => [[z, -i], [i, z]],
        'Z' => [[one, z], [z, -one]],
        _ => [[one, z], [z, one]],
    }
}

/// Dense `2×2` Pauli matrix, or identity for `'I'`.
pub fn pauli_matrix(op: char) -> DMatrix<C64> {
    let m = single(op);
    DMatrix::from_fn(2, 2, |i, j| m[i][j])
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

impl PauliTerm {
    /// Matrix on `n_spins` sites; site 1 is the most significant factor.
    pub fn matrix(&self, n_spins: usize) -> DMatrix<C64> {
        let mut ops = vec!['I'; n_spins];
        for &(site, op) in &self.ops {
            ops[site - 1] = op;
        }
        let mut m = DMatrix::from_element(1, 1, C64::new(self.coeff, 0.0));
        for op in ops {
            m = kron(&m, &pauli_matrix(op));
        }
        m
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Splits at top-level `+`/`-`, leaving exponent signs attached.
fn split_terms(text: &str) -> Result<Vec<(f64, String)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut sign = 1.0;
    let mut body = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let exponent = i > 1 && matches!(chars[i - 1], 'e' | 'E') && chars[i - 2].is_ascii_digit();
        if (c == '+' || c == '-') && !exponent {
            if body.trim().is_empty() {
                body.clear();
            } else {
                out.push((sign, std::mem::take(&mut body)));
                sign = 1.0;
            }
            if c == '-' {
                sign = -sign;
            }
            continue;
        }
        body.push(c);
    }
    if body.trim().is_empty() {
        return Err(Error::Pauli(format!("`{text}`: dangling sign")));
    }
    out.push((sign, body));
    Ok(out)
}

/// Parses a sum of weighted Pauli products over `n_spins` sites.
pub fn parse_pauli_sum(text: &str, n_spins: usize) -> Result<Vec<PauliTerm>> {
    let text = text.trim();
    if text.is_empty() || text == "0" {
        return Ok(Vec::new());
    }
    let mut terms = Vec::new();
    for (sign, body) in split_terms(text)? {
        let mut coeff = sign;
        let mut ops = Vec::new();
        for (n, token) in body.split(|c: char| c.is_whitespace() || c == '*').filter(|t| !t.is_empty()).enumerate() {
            if n == 0 {
                if let Some(x) = parse_number(token) {
                    coeff *= x;
                    continue;
                }
            }
            parse_ops(token, n_spins, &mut ops, text)?;
        }
        terms.push(PauliTerm { coeff, ops });
    }
    Ok(terms)
}

/// Accepts `X1`, `Z2`, `I` and concatenations such as `X1Y2`.
fn parse_ops(token: &str, n_spins: usize, ops: &mut Vec<(usize, char)>, text: &str) -> Result<()> {
    let bad = |why: &str| Error::Pauli(format!("`{text}`: {why}"));
    let chars: Vec<char> = token.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let op = chars[i].to_ascii_uppercase();
        if !matches!(op, 'X' | 'Y' | 'Z' | 'I') {
            return Err(bad(&format!("unexpected `{}`", chars[i])));
        }
        i += 1;
        let start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        if start == i {
            if op == 'I' {
                continue;
            }
            return Err(bad(&format!("operator {op} needs a site index")));
        }
        let site: usize = chars[start..i].iter().collect::<String>().parse().map_err(|_| bad("bad site index"))?;
        if site == 0 || site > n_spins {
            return Err(bad(&format!("site {site} outside 1..={n_spins}")));
        }
        if ops.iter().any(|(s, _)| *s == site) {
            return Err(bad(&format!("site {site} repeated within one product")));
        }
        if op != 'I' {
            ops.push((site, op));
        }
    }
    Ok(())
}

/// `Σ terms` as a `2^n × 2^n` matrix.
pub fn sum_matrix(terms: &[PauliTerm], n_spins: usize) -> DMatrix<C64> {
    let dim = 1 << n_spins;
    terms.iter().fold(DMatrix::zeros(dim, dim), |acc, t| acc + t.matrix(n_spins))
}

/// Canonical text form, parsed back by [`parse_pauli_sum`].
pub fn format_pauli_sum(terms: &[PauliTerm]) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (n, t) in terms.iter().enumerate() {
        let mag = crate::format::fmt_g17(t.coeff.abs());
        if n == 0 {
            if t.coeff < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(if t.coeff < 0.0 { " - " } else { " + " });
        }
        out.push_str(&mag);
        for (site, op) in &t.ops {
            out.push_str(&format!(" {op}{site}"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_weighted_sums() {
        let t = parse_pauli_sum("0.7 X1 + 0.3 Z1", 1).unwrap();
        assert_eq!(t, vec![PauliTerm { coeff: 0.7, ops: vec![(1, 'X')] }, PauliTerm { coeff: 0.3, ops: vec![(1, 'Z')] }]);
        let t = parse_pauli_sum("-X1 X2 - 2.5e-1 Y2 + Z1*Z2", 2).unwrap();
        assert_eq!(t[0], PauliTerm { coeff: -1.0, ops: vec![(1, 'X'), (2, 'X')] });
        assert_eq!(t[1], PauliTerm { coeff: -0.25, ops: vec![(2, 'Y')] });
        assert_eq!(t[2].ops, vec![(1, 'Z'), (2, 'Z')]);
        assert_eq!(parse_pauli_sum("X1Y2", 2).unwrap()[0].ops, vec![(1, 'X'), (2, 'Y')]);
        assert!(parse_pauli_sum("0", 1).unwrap().is_empty());
    }

    #[test]
    fn rejects_malformed_strings() {
        for bad in ["0.5 Q1", "X3", "X0", "X", "X1 X1", "0.5 X1 +", "X1 0.5"] {
            assert!(matches!(parse_pauli_sum(bad, 2), Err(Error::Pauli(_))), "{bad}");
        }
        // A bare number is a multiple of the identity.
        assert_eq!(parse_pauli_sum("0.5 X1 + 0.3", 1).unwrap()[1], PauliTerm { coeff: 0.3, ops: vec![] });
    }

    #[test]
    fn matrices_follow_site_order() {
        let zx = PauliTerm { coeff: 1.0, ops: vec![(1, 'Z'), (2, 'X')] }.matrix(2);
        let expected = kron(&pauli_matrix('Z'), &pauli_matrix('X'));
        assert_eq!(zx, expected);
        assert_eq!(zx[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(zx[(2, 3)], C64::new(-1.0, 0.0));
    }

    #[test]
    fn text_form_round_trips() {
        let t = parse_pauli_sum("0.7 X1 - 0.3 Z1 Y2", 2).unwrap();
        assert_eq!(parse_pauli_sum(&format_pauli_sum(&t), 2).unwrap(), t);
    }
}
