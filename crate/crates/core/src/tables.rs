// SPDX-License-Identifier: Apache-2.0

//! Built-in registry of the published frequency-modulated pulses.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::pulse::PulseSpec;

struct Entry {
    name: &'static str,
    order: u8,
    chi: f64,
    v0: f64,
    coeffs: &'static [(usize, f64)],
}

const TABLE: &[Entry] = &[
    Entry {
        name: "FM-1-PI",
        order: 1,
        chi: PI,
        v0: 3.75146609,
        coeffs: &[(1, 0.00011442), (2, -1.09347112), (3, 0.00012443), (4, -0.59452572)],
    },
    Entry {
        name: "FM-1-PI2",
        order: 1,
        chi: FRAC_PI_2,
        v0: 4.92892484,
        coeffs: &[(1, 0.00009874), (2, -0.94331659), (3, 0.00002530), (4, -0.12087663)],
    },
    Entry {
        name: "FM-2-PI",
        order: 2,
        chi: PI,
        v0: 12.83432979,
        coeffs: &[
            (1, 0.11475139),
            (2, 0.17248587),
            (3, 0.48262521),
            (4, -1.14494851),
            (5, -0.20879091),
            (6, 0.25378013),
            (7, 0.20306835),
            (8, -0.16748022),
            (9, -0.32052254),
            (10, 0.32586203),
        ],
    },
    Entry {
        name: "FM-2-PI2",
        order: 2,
        chi: FRAC_PI_2,
        v0: 12.25619390,
        coeffs: &[
            (1, 1.73071840),
            (2, 0.73529959),
            (3, 0.23242523),
            (4, -0.24829310),
            (5, -0.07102204),
            (6, -0.13192380),
            (7, 1.07948226),
            (8, 0.12220006),
            (9, 0.04608986),
            (10, -0.15365617),
        ],
    },
    Entry {
        name: "FM-2-MIN-PI",
        order: 2,
        chi: PI,
        v0: 10.70711454,
        coeffs: &[
            (1, 0.00002087),
            (2, 1.38768938),
            (3, -0.00019922),
            (4, -0.70668998),
            (5, -0.00001588),
            (6, 0.13773085),
            (7, 0.00008770),
            (8, 0.68894331),
            (9, -0.00011408),
            (10, -0.69744086),
            (14, 0.46501991),
        ],
    },
    Entry {
        name: "FM-2-MIN-PI2",
        order: 2,
        chi: FRAC_PI_2,
        v0: 8.43541412,
        coeffs: &[
            (1, -1.82041507),
            (2, -0.35249197),
            (3, 0.03054874),
            (4, 0.52093576),
            (5, -0.55504440),
            (6, -0.38815568),
            (7, 0.45167361),
            (8, -0.19445080),
            (9, -0.16194806),
            (10, -0.28223330),
            (14, 0.04585897),
        ],
    },
];

fn build(e: &Entry) -> PulseSpec {
    PulseSpec::with_coeffs(e.chi, e.v0, e.coeffs).expect("table entries are valid").labeled(e.name)
}

/// Names of the built-in pulses, in table order.
pub fn names() -> impl Iterator<Item = &'static str> {
    TABLE.iter().map(|e| e.name)
}

/// Looks up a built-in pulse by name, ignoring ASCII case.
pub fn builtin(name: &str) -> Option<PulseSpec> {
    TABLE.iter().find(|e| e.name.eq_ignore_ascii_case(name)).map(build)
}

/// Decoupling order the named pulse was designed for.
pub fn design_order(name: &str) -> Option<u8> {
    TABLE.iter().find(|e| e.name.eq_ignore_ascii_case(name)).map(|e| e.order)
}

/// All six pulses with their design order.
pub fn all() -> Vec<(PulseSpec, u8)> {
    TABLE.iter().map(|e| (build(e), e.order)).collect()
}

/// Published pulses of the given order and target angle, used as solver seeds.
pub fn seeds_for(order: u8, chi: f64) -> Vec<PulseSpec> {
    TABLE
        .iter()
        .filter(|e| e.order == order && (e.chi - chi).abs() < 1e-12)
        .map(build)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_is_case_insensitive() {
        let a = builtin("fm-2-min-pi").unwrap();
        let b = builtin("FM-2-MIN-PI").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.coeff(14), 0.46501991);
        assert_eq!(a.coeff(11), 0.0);
        assert!(builtin("fm-3-pi").is_none());
    }

    #[test]
    fn six_pulses_with_expected_sizes() {
        let all = all();
        assert_eq!(all.len(), 6);
        let sizes: Vec<_> = all.iter().map(|(p, _)| p.coeffs().count()).collect();
        assert_eq!(sizes, [4, 4, 10, 10, 11, 11]);
        assert_eq!(seeds_for(2, PI).len(), 2);
        assert_eq!(seeds_for(1, FRAC_PI_2)[0].label, "FM-1-PI2");
    }
}
