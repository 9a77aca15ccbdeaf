// SPDX-License-Identifier: Apache-2.0

//! Frequency-modulated pulse representation.
//!
//! A pulse has constant amplitude `v0` and a time-dependent phase
//!
//! ```text
//! Φ(t) = Σ_n b_{2n-1} sin(2πnt) + b_{2n} [cos(2πnt) - 1]
//! ```
//!
//! so that the rotating-frame control is `v(t) = v0 (cos Φ, sin Φ, 0)`.
//! Time is measured in units of the pulse duration and amplitudes in units
//! of its inverse, so every pulse lives on `t ∈ [0, 1]`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::format::{fmt_g17, parse_entries, parse_f64};

/// Target angle, amplitude and sparse Fourier phase coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSpec {
    chi: f64,
    v0: f64,
    coeffs: BTreeMap<usize, f64>,
    pub label: String,
}

/// Rotating-frame control at one instant. `vz` is identically zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSample {
    pub t: f64,
    pub phi: f64,
    pub vx: f64,
    pub vy: f64,
}

/// Lab-frame radio-frequency field coefficients of `σx` and `σy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabSample {
    pub t: f64,
    pub hx: f64,
    pub hy: f64,
}

/// The `k`-th basis function of the phase series, `k >= 1`.
#[inline]
pub(crate) fn harmonic(k: usize, t: f64) -> f64 {
    let w = TAU * ((k + 1) / 2) as f64;
    if k % 2 == 1 {
        (w * t).sin()
    } else {
        (w * t).cos() - 1.0
    }
}

fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain(format!("time {t} outside [0, 1]")))
    }
}

impl PulseSpec {
    pub fn new(chi: f64, v0: f64) -> Result<Self> {
        if !(chi.is_finite() && chi > 0.0 && chi < TAU) {
            return Err(Error::Domain(format!("chi = {chi} outside (0, 2π)")));
        }
        if !(v0.is_finite() && v0 > 0.0) {
            return Err(Error::Domain(format!("v0 = {v0} must be positive")));
        }
        Ok(Self { chi, v0, coeffs: BTreeMap::new(), label: String::new() })
    }

    /// Builds a pulse from `(index, value)` pairs.
    pub fn with_coeffs(chi: f64, v0: f64, coeffs: &[(usize, f64)]) -> Result<Self> {
        let mut p = Self::new(chi, v0)?;
        for &(k, b) in coeffs {
            p.set_coeff(k, b)?;
        }
        Ok(p)
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn set_v0(&mut self, v0: f64) -> Result<()> {
        if !(v0.is_finite() && v0 > 0.0) {
            return Err(Error::Domain(format!("v0 = {v0} must be positive")));
        }
        self.v0 = v0;
        Ok(())
    }

    /// Coefficient `b_k`; absent indices are zero.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(&k).copied().unwrap_or(0.0)
    }

    pub fn set_coeff(&mut self, k: usize, b: f64) -> Result<()> {
        if k == 0 {
            return Err(Error::Domain("coefficient indices start at 1".into()));
        }
        if !b.is_finite() {
            return Err(Error::Domain(format!("b{k} = {b} is not finite")));
        }
        self.coeffs.insert(k, b);
        Ok(())
    }

    /// Stored coefficients in index order, including explicit zeros.
    pub fn coeffs(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coeffs.iter().map(|(&k, &b)| (k, b))
    }

    pub fn max_index(&self) -> usize {
        self.coeffs.keys().next_back().copied().unwrap_or(0)
    }

    /// Highest angular frequency present in the phase, `2π·n_max`.
    pub fn max_harmonic_frequency(&self) -> f64 {
        TAU * ((self.max_index() + 1) / 2) as f64
    }

    /// Φ(t) without the domain check; valid for any real `t`.
    pub fn phase(&self, t: f64) -> f64 {
        self.coeffs.iter().map(|(&k, &b)| b * harmonic(k, t)).sum()
    }

    /// dΦ/dt.
    pub fn phase_rate(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&k, &b)| {
                let w = TAU * ((k + 1) / 2) as f64;
                if k % 2 == 1 {
                    b * w * (w * t).cos()
                } else {
                    -b * w * (w * t).sin()
                }
            })
            .sum()
    }

    /// d²Φ/dt².
    pub fn phase_accel(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&k, &b)| {
                let w = TAU * ((k + 1) / 2) as f64;
                if k % 2 == 1 {
                    -b * w * w * (w * t).sin()
                } else {
                    -b * w * w * (w * t).cos()
                }
            })
            .sum()
    }

    pub fn eval_phase(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.phase(t))
    }

    pub fn eval_control(&self, t: f64) -> Result<ControlSample> {
        let phi = self.eval_phase(t)?;
        let (s, c) = phi.sin_cos();
        Ok(ControlSample { t, phi, vx: self.v0 * c, vy: self.v0 * s })
    }

    /// Samples `hx = v0 cos(ω_L t - Φ)`, `hy = -v0 sin(ω_L t - Φ)` on a
    /// uniform grid of `grid` points including both endpoints.
    pub fn lab_frame_waveform(&self, omega_l: f64, grid: usize) -> Result<Vec<LabSample>> {
        if grid < 2 {
            return Err(Error::Domain(format!("lab-frame grid needs at least 2 samples, got {grid}")));
        }
        if !(omega_l.is_finite() && omega_l >= 0.0) {
            return Err(Error::Domain(format!("Larmor frequency {omega_l} must be non-negative")));
        }
        let last = (grid - 1) as f64;
        Ok((0..grid)
            .map(|k| {
                let t = k as f64 / last;
                let arg = omega_l * t - self.phase(t);
                LabSample { t, hx: self.v0 * arg.cos(), hy: -self.v0 * arg.sin() }
            })
            .collect())
    }

    /// Copy with amplitude and every coefficient rounded to `decimals`
    /// decimal places.
    pub fn rounded(&self, decimals: i32) -> Result<Self> {
        let scale = 10f64.powi(decimals);
        let round = |x: f64| (x * scale).round() / scale;
        let mut p = Self::new(self.chi, round(self.v0))?;
        for (k, b) in self.coeffs() {
            p.set_coeff(k, round(b))?;
        }
        p.label = format!("{}-rounded{}", self.label, decimals);
        Ok(p)
    }

    /// Pulse-file text; numbers carry 17 significant digits.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        if !self.label.is_empty() {
            let _ = writeln!(out, "label = {}", self.label);
        }
        let _ = writeln!(out, "chi = {}", fmt_g17(self.chi));
        let _ = writeln!(out, "v0 = {}", fmt_g17(self.v0));
        for (k, b) in self.coeffs() {
            let _ = writeln!(out, "b{k} = {}", fmt_g17(b));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut chi = None;
        let mut v0 = None;
        let mut label = None;
        let mut coeffs: BTreeMap<usize, f64> = BTreeMap::new();
        for e in parse_entries(text)? {
            let dup = || Error::Parse { line: e.line, message: format!("duplicate key `{}`", e.key) };
            match e.key.as_str() {
                "chi" => {
                    if chi.replace(parse_f64(&e)?).is_some() {
                        return Err(dup());
                    }
                }
                "v0" => {
                    if v0.replace(parse_f64(&e)?).is_some() {
                        return Err(dup());
                    }
                }
                "label" => {
                    if label.replace(e.value.clone()).is_some() {
                        return Err(dup());
                    }
                }
                key => {
                    let k = key
                        .strip_prefix('b')
                        .and_then(|n| n.parse::<usize>().ok())
                        .filter(|&k| k >= 1 && !key[1..].starts_with('0'))
                        .ok_or_else(|| Error::Parse { line: e.line, message: format!("unknown key `{key}`") })?;
                    if coeffs.insert(k, parse_f64(&e)?).is_some() {
                        return Err(Error::Parse { line: e.line, message: format!("duplicate coefficient b{k}") });
                    }
                }
            }
        }
        let chi = chi.ok_or_else(|| Error::MissingKey("chi".into()))?;
        let v0 = v0.ok_or_else(|| Error::MissingKey("v0".into()))?;
        let mut p = Self::new(chi, v0)?;
        p.coeffs = coeffs;
        p.label = label.unwrap_or_default();
        Ok(p)
    }

    /// Constant-phase pulse with `b ≡ 0`.
    pub fn flat(chi: f64, v0: f64) -> Result<Self> {
        Ok(Self::new(chi, v0)?.labeled("flat"))
    }

    /// Flat pulse whose amplitude produces rotation angle `chi`.
    pub fn flat_for_angle(chi: f64) -> Result<Self> {
        Self::flat(chi, chi / 2.0)
    }
}

/// Convenience constants for the two supported target angles.
pub const PI_ANGLE: f64 = PI;
pub const HALF_PI_ANGLE: f64 = PI / 2.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::builtin;
    use proptest::prelude::*;

    #[test]
    fn phase_vanishes_at_both_ends() {
        let p = builtin("fm-2-min-pi").unwrap();
        assert_eq!(p.eval_phase(0.0).unwrap(), 0.0);
        assert!(p.eval_phase(1.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn phase_at_midpoint_of_first_order_pi_pulse() {
        // Only the n = 1 cosine term survives at t = 1/2: Φ = -2 b2.
        let p = builtin("FM-1-PI").unwrap();
        let phi = p.eval_phase(0.5).unwrap();
        assert!((phi - 2.18694224).abs() < 1e-12, "{phi}");
    }

    #[test]
    fn time_outside_unit_interval_is_rejected() {
        let p = PulseSpec::flat(PI, 1.0).unwrap();
        assert!(matches!(p.eval_phase(-1e-9), Err(Error::Domain(_))));
        assert!(matches!(p.eval_control(1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn control_examples() {
        let flat = PulseSpec::flat(PI, 2.5).unwrap();
        let c = flat.eval_control(0.37).unwrap();
        assert_eq!((c.vx, c.vy), (2.5, 0.0));

        let p = builtin("fm-1-pi").unwrap();
        let c0 = p.eval_control(0.0).unwrap();
        assert_eq!((c0.vx, c0.vy), (3.75146609, 0.0));
        let c = p.eval_control(0.5).unwrap();
        let phi = 2.18694224f64;
        assert!((c.vx - 3.75146609 * phi.cos()).abs() < 1e-11);
        assert!((c.vy - 3.75146609 * phi.sin()).abs() < 1e-11);
    }

    #[test]
    fn lab_frame_examples() {
        let flat = PulseSpec::flat(PI, 1.25).unwrap();
        let w = flat.lab_frame_waveform(0.0, 3).unwrap();
        assert_eq!(w.len(), 3);
        assert!(w.iter().all(|s| s.hx == 1.25 && s.hy == 0.0));
        assert_eq!(w[1].t, 0.5);

        // At ω_L = 0 the field is V0 (cos Φ, sin Φ): identical to the
        // rotating-frame control.
        let p = builtin("fm-2-pi").unwrap();
        for s in p.lab_frame_waveform(0.0, 17).unwrap() {
            let c = p.eval_control(s.t).unwrap();
            assert!((s.hy - c.vy).abs() < 1e-12);
            assert!((s.hx - c.vx).abs() < 1e-12);
        }

        let w = builtin("fm-1-pi").unwrap().lab_frame_waveform(100.0, 1001).unwrap();
        assert_eq!(w.len(), 1001);
        assert_eq!((w[0].t, w[0].hx, w[0].hy), (0.0, 3.75146609, 0.0));
        assert_eq!(w[1000].t, 1.0);

        assert!(matches!(flat.lab_frame_waveform(1.0, 1), Err(Error::Domain(_))));
        assert!(matches!(flat.lab_frame_waveform(-1.0, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn serialization_examples() {
        let text = builtin("fm-1-pi").unwrap().serialize();
        assert!(text.contains("v0 = 3.75146609"), "{text}");

        assert_eq!(PulseSpec::parse("").unwrap_err(), Error::MissingKey("chi".into()));
        assert_eq!(PulseSpec::parse("chi = 1").unwrap_err(), Error::MissingKey("v0".into()));

        let p = builtin("fm-2-min-pi2").unwrap();
        let back = PulseSpec::parse(&p.serialize()).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.coeff(14), 0.04585897);
        assert_eq!(back.coeff(12), 0.0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dup = "chi = 1\nv0 = 2\nb3 = 0.1\nb3 = 0.2\n";
        assert_eq!(
            PulseSpec::parse(dup).unwrap_err(),
            Error::Parse { line: 4, message: "duplicate coefficient b3".into() }
        );
        assert!(matches!(PulseSpec::parse("chi = 1\nv0 = 2\nc4 = 1\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(PulseSpec::parse("chi = 1\nv0 = 2\nb0 = 1\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(PulseSpec::parse("chi = x\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(PulseSpec::parse("chi = 1\nchi = 2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(PulseSpec::parse("chi = 1\nv0 = -2\n"), Err(Error::Domain(_))));
        assert!(matches!(PulseSpec::parse("chi = 7\nv0 = 2\n"), Err(Error::Domain(_))));
    }

    #[test]
    fn label_and_comments_survive() {
        let p = PulseSpec::parse("# my pulse\nlabel = test pulse\nchi = 1.5\nv0 = 2 # amp\nb2 = -0.5\n").unwrap();
        assert_eq!(p.label, "test pulse");
        assert_eq!(p.coeff(2), -0.5);
        assert_eq!(p.coeff(1), 0.0);
    }

    #[test]
    fn rounding_keeps_two_decimals() {
        let p = builtin("fm-1-pi").unwrap().rounded(2).unwrap();
        assert_eq!(p.v0(), 3.75);
        assert_eq!(p.coeff(1), 0.0);
        assert_eq!(p.coeff(2), -1.09);
        assert_eq!(p.coeff(4), -0.59);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = builtin("fm-2-pi2").unwrap();
        let h = 1e-5;
        for &t in &[0.0, 0.13, 0.5, 0.91] {
            let fd = (p.phase(t + h) - p.phase(t - h)) / (2.0 * h);
            assert!((fd - p.phase_rate(t)).abs() < 1e-5);
            let fd2 = (p.phase_rate(t + h) - p.phase_rate(t - h)) / (2.0 * h);
            assert!((fd2 - p.phase_accel(t)).abs() < 1e-3);
        }
    }

    fn coeff_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, 1..12)
    }

    fn from_vec(b: &[f64]) -> PulseSpec {
        let pairs: Vec<_> = b.iter().enumerate().map(|(i, &v)| (i + 1, v)).collect();
        PulseSpec::with_coeffs(PI, 4.0, &pairs).unwrap()
    }

    proptest! {
        #[test]
        fn phase_periodic_and_amplitude_constant(b in coeff_vec(), t in 0.0f64..=1.0) {
            let p = from_vec(&b);
            prop_assert_eq!(p.eval_phase(0.0).unwrap(), 0.0);
            prop_assert!(p.eval_phase(1.0).unwrap().abs() < 1e-12);
            let c = p.eval_control(t).unwrap();
            prop_assert!((c.vx.hypot(c.vy) - 4.0).abs() < 1e-14);
        }

        #[test]
        fn phase_is_linear_in_coefficients(
            b in coeff_vec(), c in coeff_vec(), alpha in -2.0f64..2.0, beta in -2.0f64..2.0, t in 0.0f64..=1.0
        ) {
            let n = b.len().max(c.len());
            let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
            let mix: Vec<f64> = (0..n).map(|i| alpha * get(&b, i) + beta * get(&c, i)).collect();
            let lhs = from_vec(&mix).phase(t);
            let rhs = alpha * from_vec(&b).phase(t) + beta * from_vec(&c).phase(t);
            prop_assert!((lhs - rhs).abs() < 1e-11);
        }

        #[test]
        fn serialization_round_trips(b in coeff_vec(), v0 in 0.01f64..30.0, chi in 0.01f64..6.2) {
            let pairs: Vec<_> = b.iter().enumerate().map(|(i, &v)| (2 * i + 1, v)).collect();
            let p = PulseSpec::with_coeffs(chi, v0, &pairs).unwrap().labeled("prop");
            prop_assert_eq!(PulseSpec::parse(&p.serialize()).unwrap(), p);
        }
    }
}
