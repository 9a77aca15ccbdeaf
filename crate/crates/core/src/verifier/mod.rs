// SPDX-License-Identifier: Apache-2.0

//! Brute-force check of decoupling order on explicit spin baths.
//!
//! The qubit (first tensor factor) couples to a small spin bath through
//! `σz ⊗ A(t)` with `A(t) = A0 + A1·t` and `H_b(t) = H_b0 + H_b1·t`. For a
//! pulse of physical duration `τ` the full propagator `U`, the bath-only
//! propagator `U_b` and the bare pulse propagator `P` are integrated with
//! the same fourth-order commutator-free Magnus scheme, and the correction
//! `U_c = P† U_b† U` is compared with the identity.

pub mod pauli;

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::{fmt_g17, parse_entries, parse_f64};
use crate::pulse::PulseSpec;
use pauli::{format_pauli_sum, kron, parse_pauli_sum, pauli_matrix, sum_matrix, PauliTerm, C64};

/// Smallest accepted step count for [`evolve_full`].
pub const MIN_STEPS: usize = 256;

/// Points with `d` below this multiple of the integrator error estimate are
/// left out of the slope fit.
pub const FLOOR_FACTOR: f64 = 100.0;

/// Rounding noise in `d` from accumulating `M` unitary products; grows
/// linearly in `M`.
fn roundoff_floor(steps: usize) -> f64 {
    1e-15 * steps as f64
}

/// Spin bath of `n_spins` sites. Term weights are dimensionless: `hb0` is
/// scaled by `ω_b`, `hb1` by `ω_b/τ_ref`, `a0` by `λ` and `a1` by `λ/τ_ref`.
#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    pub n_spins: usize,
    pub lambda: f64,
    pub omega_b: f64,
    pub tau_ref: f64,
    pub hb0: Vec<PauliTerm>,
    pub hb1: Vec<PauliTerm>,
    pub a0: Vec<PauliTerm>,
    pub a1: Vec<PauliTerm>,
}

fn term(coeff: f64, op: char) -> PauliTerm {
    PauliTerm { coeff, ops: vec![(1, op)] }
}

impl BathSpec {
    /// One bath spin, noncommuting at every level:
    /// `H_b0 = ω_b Z`, `H_b1 = 0.4 ω_b/τ_ref X`, `A0 = λ(0.7 X + 0.3 Z)`,
    /// `A1 = 0.5 λ/τ_ref Y`, with `λ = ω_b = τ_ref = 1`.
    pub fn default_noncommuting() -> Self {
        BathSpec {
            n_spins: 1,
            lambda: 1.0,
            omega_b: 1.0,
            tau_ref: 1.0,
            hb0: vec![term(1.0, 'Z')],
            hb1: vec![term(0.4, 'X')],
            a0: vec![term(0.7, 'X'), term(0.3, 'Z')],
            a1: vec![term(0.5, 'Y')],
        }
    }

    /// Same bath with the linear time dependence removed.
    pub fn static_part(&self) -> Self {
        BathSpec { hb1: Vec::new(), a1: Vec::new(), ..self.clone() }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.n_spins) {
            return Err(Error::Config(format!("n_spins = {} outside 1..=3", self.n_spins)));
        }
        for (name, v) in [("lambda", self.lambda), ("omega_b", self.omega_b)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} = {v} must be non-negative")));
            }
        }
        if !(self.tau_ref.is_finite() && self.tau_ref > 0.0) {
            return Err(Error::Config(format!("tau_ref = {} must be positive", self.tau_ref)));
        }
        for terms in [&self.hb0, &self.hb1, &self.a0, &self.a1] {
            for t in terms {
                if let Some((s, _)) = t.ops.iter().find(|(s, _)| *s == 0 || *s > self.n_spins) {
                    return Err(Error::Pauli(format!("site {s} outside 1..={}", self.n_spins)));
                }
            }
        }
        Ok(())
    }

    /// Parses the bath file format (`key = value`).
    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_entries(text)?;
        let mut seen = std::collections::BTreeSet::new();
        for e in &entries {
            if !matches!(e.key.as_str(), "n_spins" | "lambda" | "omega_b" | "tau_ref" | "hb0" | "hb1" | "a0" | "a1") {
                return Err(Error::Parse { line: e.line, message: format!("unknown key `{}`", e.key) });
            }
            if !seen.insert(e.key.clone()) {
                return Err(Error::Parse { line: e.line, message: format!("duplicate key `{}`", e.key) });
            }
        }
        let find = |k: &str| entries.iter().find(|e| e.key == k);
        let n = find("n_spins").ok_or_else(|| Error::MissingKey("n_spins".into()))?;
        let n_spins: usize = n.value.parse().map_err(|_| Error::Parse {
            line: n.line,
            message: format!("`{}` is not a spin count", n.value),
        })?;
        let lambda = parse_f64(find("lambda").ok_or_else(|| Error::MissingKey("lambda".into()))?)?;
        let omega_b = parse_f64(find("omega_b").ok_or_else(|| Error::MissingKey("omega_b".into()))?)?;
        let tau_ref = find("tau_ref").map(parse_f64).transpose()?.unwrap_or(1.0);
        let terms = |k: &str| -> Result<Vec<PauliTerm>> {
            match find(k) {
                None => Ok(Vec::new()),
                Some(e) => parse_pauli_sum(&e.value, n_spins.clamp(1, 3))
                    .map_err(|err| Error::Parse { line: e.line, message: err.to_string() }),
            }
        };
        let spec = BathSpec {
            n_spins,
            lambda,
            omega_b,
            tau_ref,
            hb0: terms("hb0")?,
            hb1: terms("hb1")?,
            a0: terms("a0")?,
            a1: terms("a1")?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n_spins = {}", self.n_spins);
        let _ = writeln!(out, "lambda = {}", fmt_g17(self.lambda));
        let _ = writeln!(out, "omega_b = {}", fmt_g17(self.omega_b));
        let _ = writeln!(out, "tau_ref = {}", fmt_g17(self.tau_ref));
        for (k, t) in [("hb0", &self.hb0), ("hb1", &self.hb1), ("a0", &self.a0), ("a1", &self.a1)] {
            let _ = writeln!(out, "{k} = {}", format_pauli_sum(t));
        }
        out
    }
}

/// Bath-space operators with all scales applied.
#[derive(Debug, Clone, PartialEq)]
pub struct BathMatrices {
    pub n_spins: usize,
    pub hb0: DMatrix<C64>,
    pub hb1: DMatrix<C64>,
    pub a0: DMatrix<C64>,
    pub a1: DMatrix<C64>,
}

impl BathMatrices {
    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }
}

/// Largest element of `|M - M†|`.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// `‖U†U - I‖_F`.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    (u.adjoint() * u - DMatrix::identity(u.nrows(), u.ncols())).norm()
}

pub fn build_bath(spec: &BathSpec) -> Result<BathMatrices> {
    spec.validate()?;
    let n = spec.n_spins;
    let scaled = |terms: &[PauliTerm], s: f64| sum_matrix(terms, n) * C64::new(s, 0.0);
    let m = BathMatrices {
        n_spins: n,
        hb0: scaled(&spec.hb0, spec.omega_b),
        hb1: scaled(&spec.hb1, spec.omega_b / spec.tau_ref),
        a0: scaled(&spec.a0, spec.lambda),
        a1: scaled(&spec.a1, spec.lambda / spec.tau_ref),
    };
    for (name, op) in [("hb0", &m.hb0), ("hb1", &m.hb1), ("a0", &m.a0), ("a1", &m.a1)] {
        let defect = hermiticity_defect(op);
        if defect > 1e-14 {
            return Err(Error::Pauli(format!("{name} is not Hermitian (defect {defect:e})")));
        }
    }
    Ok(m)
}

/// Propagators at the end of one pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSet {
    pub u_full: DMatrix<C64>,
    /// `1 ⊗ U_b`.
    pub u_bath: DMatrix<C64>,
    /// `P ⊗ 1`.
    pub p_final: DMatrix<C64>,
    pub u_corr: DMatrix<C64>,
    pub tau: f64,
    pub steps: usize,
}

/// `exp(-i h G)` for Hermitian `G`.
fn expm_hermitian(g: &DMatrix<C64>, h: f64) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(g.clone());
    let q = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -h * l)));
    q * phases * q.adjoint()
}

/// `exp(-i h (nx σx + ny σy))` in closed form.
fn expm_spin(nx: f64, ny: f64, h: f64) -> DMatrix<C64> {
    let r = (nx * nx + ny * ny).sqrt();
    let (s, c) = (h * r).sin_cos();
    let (ux, uy) = if r > 0.0 { (nx / r, ny / r) } else { (0.0, 0.0) };
    // cos - i sin (ux σx + uy σy)
    DMatrix::from_row_slice(
        2,
        2,
        &[C64::new(c, 0.0), C64::new(-s * uy, -s * ux), C64::new(s * uy, -s * ux), C64::new(c, 0.0)],
    )
}

// Fourth-order commutator-free Magnus: two exponentials per step.
const C1: f64 = 0.5 - 0.288_675_134_594_812_9;
const C2: f64 = 0.5 + 0.288_675_134_594_812_9;
const W1: f64 = 0.25 - 0.288_675_134_594_812_9;
const W2: f64 = 0.25 + 0.288_675_134_594_812_9;

struct Propagators {
    u: DMatrix<C64>,
    ub: DMatrix<C64>,
    p: DMatrix<C64>,
}

fn propagate(pulse: &PulseSpec, bath: &BathMatrices, tau: f64, steps: usize) -> Propagators {
    let db = bath.dim();
    let id2 = DMatrix::<C64>::identity(2, 2);
    let idb = DMatrix::<C64>::identity(db, db);
    let sz = pauli_matrix('Z');
    let k = kron(&id2, &bath.hb0) + kron(&sz, &bath.a0);
    let l = kron(&id2, &bath.hb1) + kron(&sz, &bath.a1);
    let sx = kron(&pauli_matrix('X'), &idb);
    let sy = kron(&pauli_matrix('Y'), &idb);

    let h = tau / steps as f64;
    let v0 = pulse.v0() / tau;
    let control = |t: f64| {
        let (s, c) = pulse.phase((t / tau).clamp(0.0, 1.0)).sin_cos();
        (v0 * c, v0 * s)
    };

    let dim = 2 * db;
    let mut u = DMatrix::<C64>::identity(dim, dim);
    let mut ub = idb.clone();
    let mut p = id2.clone();
    for n in 0..steps {
        let t0 = n as f64 * h;
        let (t1, t2) = (t0 + C1 * h, t0 + C2 * h);
        let (v1, v2) = (control(t1), control(t2));
        // Right factor weights (W2, W1), left factor (W1, W2).
        for (a, b) in [(W2, W1), (W1, W2)] {
            let tw = a * t1 + b * t2;
            let (cx, cy) = (a * v1.0 + b * v2.0, a * v1.1 + b * v2.1);
            let g = &k * C64::new(a + b, 0.0) + &l * C64::new(tw, 0.0) + &sx * C64::new(cx, 0.0) + &sy * C64::new(cy, 0.0);
            u = expm_hermitian(&g, h) * u;
            let gb = &bath.hb0 * C64::new(a + b, 0.0) + &bath.hb1 * C64::new(tw, 0.0);
            ub = expm_hermitian(&gb, h) * ub;
            p = expm_spin(cx, cy, h) * p;
        }
    }
    Propagators { u, ub, p }
}

fn assemble(pr: Propagators, tau: f64, steps: usize) -> Result<PropagatorSet> {
    let db = pr.ub.nrows();
    let u_bath = kron(&DMatrix::identity(2, 2), &pr.ub);
    let p_final = kron(&pr.p, &DMatrix::identity(db, db));
    for (name, m) in [("U", &pr.u), ("U_b", &u_bath), ("P", &p_final)] {
        let defect = unitarity_defect(m);
        if defect > 1e-10 {
            return Err(Error::Domain(format!("{name} lost unitarity: defect {defect:e}")));
        }
    }
    let u_corr = p_final.adjoint() * u_bath.adjoint() * &pr.u;
    Ok(PropagatorSet { u_full: pr.u, u_bath, p_final, u_corr, tau, steps })
}

fn check_inputs(bath: &BathSpec, tau: f64, steps: usize) -> Result<BathMatrices> {
    if steps < MIN_STEPS {
        return Err(Error::InvalidSteps { steps, reason: format!("at least {MIN_STEPS} steps required") });
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::Domain(format!("pulse duration {tau} must be positive")));
    }
    build_bath(bath)
}

/// Evolves qubit and bath for one pulse of duration `tau` with `steps`
/// steps, and checks that doubling `steps` changes `d(U_c)` by at most 1%.
pub fn evolve_full(pulse: &PulseSpec, bath: &BathSpec, tau: f64, steps: usize) -> Result<PropagatorSet> {
    let mats = check_inputs(bath, tau, steps)?;
    let set = assemble(propagate(pulse, &mats, tau, steps), tau, steps)?;
    let fine = assemble(propagate(pulse, &mats, tau, 2 * steps), tau, 2 * steps)?;
    let (d, d2) = (correction_error(&set), correction_error(&fine));
    let change = (d - d2).abs();
    if change > 0.01 * d && change > roundoff_floor(2 * steps) {
        return Err(Error::StepsTooSmall { steps, relative_change: change / d.max(f64::MIN_POSITIVE) });
    }
    Ok(set)
}

/// `d(U_c) = sqrt(1 - |tr U_c|/D)`.
pub fn correction_error(pset: &PropagatorSet) -> f64 {
    distance_to_identity(&pset.u_corr)
}

/// Phase-invariant distance `sqrt(1 - |tr U|/D)` of a unitary from the
/// identity, evaluated as `‖U - e^{iα} 1‖_F / sqrt(2D)` with
/// `α = arg tr U` so that small distances keep full precision.
pub fn distance_to_identity(u: &DMatrix<C64>) -> f64 {
    let dim = u.nrows();
    let tr = u.trace();
    let phase = if tr.norm() > 0.0 { tr / tr.norm() } else { C64::new(1.0, 0.0) };
    let mut sum = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let target = if i == j { phase } else { C64::new(0.0, 0.0) };
            sum += (u[(i, j)] - target).norm_sqr();
        }
    }
    sum.sqrt() / (SQRT_2 * (dim as f64).sqrt())
}

/// `d(U_c)` against pulse duration with a log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub taus: Vec<f64>,
    pub lambda_taus: Vec<f64>,
    pub errors: Vec<f64>,
    /// Estimated integration error in each entry of `errors`.
    pub integrator_errors: Vec<f64>,
    pub excluded: Vec<bool>,
    pub slope: f64,
    pub slope_window: (f64, f64),
}

impl VerificationReport {
    pub const CSV_HEADER: &'static str = "tau,lambda_tau,d,excluded_from_fit";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for i in 0..self.taus.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_g17(self.taus[i]),
                fmt_g17(self.lambda_taus[i]),
                fmt_g17(self.errors[i]),
                self.excluded[i]
            );
        }
        let _ = writeln!(
            out,
            "slope={},window=[{},{}]",
            fmt_g17(self.slope),
            fmt_g17(self.slope_window.0),
            fmt_g17(self.slope_window.1)
        );
        out
    }
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Sweeps `tau_list` with `steps` integration steps per pulse and fits the
/// scaling exponent of `d(U_c)` above the numerical floor.
pub fn scaling_exponent(pulse: &PulseSpec, bath: &BathSpec, tau_list: &[f64], steps: usize) -> Result<VerificationReport> {
    let mats = check_inputs(bath, tau_list.first().copied().unwrap_or(f64::NAN), steps)?;
    if tau_list.len() < 4 {
        return Err(Error::Config(format!("{} durations given, need at least 4", tau_list.len())));
    }
    if tau_list.windows(2).any(|w| !(w[1] > w[0])) || !(tau_list[0] > 0.0) {
        return Err(Error::Config("durations must be positive and strictly increasing".into()));
    }
    let (first, last) = (tau_list[0], tau_list[tau_list.len() - 1]);
    if (last / first).log10() < 1.5 - 1e-9 {
        return Err(Error::Config(format!("durations span {:.2} decades, need 1.5", (last / first).log10())));
    }
    let scale = bath.lambda.max(bath.omega_b);
    if scale * last > 0.1 * (1.0 + 1e-9) {
        return Err(Error::Config(format!("max(λ, ω_b)·τ = {} exceeds 0.1", scale * last)));
    }

    let points: Vec<(f64, f64)> = tau_list
        .par_iter()
        .map(|&tau| -> Result<(f64, f64)> {
            let d = correction_error(&assemble(propagate(pulse, &mats, tau, steps), tau, steps)?);
            let d2 = correction_error(&assemble(propagate(pulse, &mats, tau, 2 * steps), tau, 2 * steps)?);
            // Fourth-order Richardson estimate of the error in `d`.
            Ok((d, (d - d2).abs() * 16.0 / 15.0 + roundoff_floor(steps)))
        })
        .collect::<Result<_>>()?;

    let errors: Vec<f64> = points.iter().map(|p| p.0).collect();
    let integrator_errors: Vec<f64> = points.iter().map(|p| p.1).collect();
    let excluded: Vec<bool> = points.iter().map(|(d, e)| !(*d > FLOOR_FACTOR * e)).collect();
    let kept: Vec<usize> = (0..tau_list.len()).filter(|&i| !excluded[i]).collect();
    if kept.len() < 4 {
        return Err(Error::TooFewPoints { remaining: kept.len() });
    }
    let lx: Vec<f64> = kept.iter().map(|&i| tau_list[i].ln()).collect();
    let ly: Vec<f64> = kept.iter().map(|&i| errors[i].ln()).collect();
    Ok(VerificationReport {
        taus: tau_list.to_vec(),
        lambda_taus: tau_list.iter().map(|t| bath.lambda * t).collect(),
        errors,
        integrator_errors,
        excluded,
        slope: fit_slope(&lx, &ly),
        slope_window: (tau_list[kept[0]], tau_list[*kept.last().expect("non-empty")]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::propagate_su2;
    use crate::tables::builtin;
    use std::f64::consts::PI;

    fn commutator_norm(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a * b - b * a).norm()
    }

    #[test]
    fn one_spin_bath_is_noncommuting() {
        let spec = BathSpec {
            hb1: Vec::new(),
            a0: vec![term(1.0, 'X')],
            a1: Vec::new(),
            ..BathSpec::default_noncommuting()
        };
        let m = build_bath(&spec).unwrap();
        assert_eq!(m.hb0.shape(), (2, 2));
        assert!(commutator_norm(&m.hb0, &m.a0) > 1.0);
        assert_eq!(m.hb1, DMatrix::zeros(2, 2));
        assert_eq!(m.a1, DMatrix::zeros(2, 2));
    }

    #[test]
    fn two_spin_bath_is_hermitian() {
        let text = "n_spins = 2\nlambda = 0.5\nomega_b = 1\nhb0 = Z1 Z2\na0 = X1 + X2\na1 = Y1\n";
        let spec = BathSpec::parse(text).unwrap();
        let m = build_bath(&spec).unwrap();
        for op in [&m.hb0, &m.hb1, &m.a0, &m.a1] {
            assert_eq!(op.shape(), (4, 4));
            assert!(hermiticity_defect(op) == 0.0);
        }
        assert!((m.a0[(0, 1)].re - 0.5).abs() < 1e-15 && (m.a0[(0, 2)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bath_file_round_trip_and_errors() {
        let spec = BathSpec::default_noncommuting();
        assert_eq!(BathSpec::parse(&spec.serialize()).unwrap(), spec);
        assert_eq!(BathSpec::parse("lambda = 1\nomega_b = 1\n"), Err(Error::MissingKey("n_spins".into())));
        assert!(matches!(BathSpec::parse("n_spins = 4\nlambda = 1\nomega_b = 1\n"), Err(Error::Config(_))));
        assert!(matches!(BathSpec::parse("n_spins = 1\nlambda = 1\nomega_b = 1\na0 = X2\n"), Err(Error::Parse { line: 4, .. })));
        assert!(matches!(BathSpec::parse("n_spins = 1\nlambda = 1\nomega_b = 1\nfoo = 1\n"), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn distance_examples() {
        let id = DMatrix::<C64>::identity(4, 4);
        assert_eq!(distance_to_identity(&id), 0.0);
        let phased = &id * C64::from_polar(1.0, 0.731);
        assert!(distance_to_identity(&phased) < 1e-15);
        let sz = kron(&pauli_matrix('Z'), &DMatrix::identity(2, 2));
        for eps in [1e-3, 1e-2] {
            let u = expm_hermitian(&sz, eps);
            let d = distance_to_identity(&u);
            // 1 - cos ε = 2 sin²(ε/2) ≈ ε²/2.
            let exact = SQRT_2 * (0.5 * eps).sin();
            assert!((d - exact).abs() < 1e-14 * exact, "{d} {exact}");
            assert!((d / eps - 1.0 / SQRT_2).abs() < eps * eps / 20.0);
        }
    }

    #[test]
    fn cf4_converges_at_fourth_order() {
        let p = builtin("FM-1-PI").unwrap();
        let bath = BathSpec::default_noncommuting();
        let m = build_bath(&bath).unwrap();
        let reference = propagate(&p, &m, 0.5, 2048).u;
        let err = |n| (propagate(&p, &m, 0.5, n).u - &reference).norm();
        let ratio = err(64) / err(128);
        assert!((ratio - 16.0).abs() < 2.0, "ratio {ratio}");
    }

    #[test]
    fn spin_propagator_matches_kinematics() {
        let p = builtin("FM-2-PI2").unwrap();
        let m = build_bath(&BathSpec::default_noncommuting()).unwrap();
        let cf4 = propagate(&p, &m, 0.01, 4096).p;
        let q = *propagate_su2(&p, 8192).unwrap().su2.last().unwrap();
        let rk = q.matrix();
        for i in 0..2 {
            for j in 0..2 {
                let z = cf4[(i, j)];
                assert!((z.re - rk[i][j].0).abs() < 1e-9 && (z.im - rk[i][j].1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn decoupled_limit_gives_identity_correction() {
        let bath = BathSpec::default_noncommuting().with_lambda(0.0);
        let set = evolve_full(&builtin("FM-2-PI").unwrap(), &bath, 0.05, 512).unwrap();
        assert!(correction_error(&set) < 1e-12, "{}", correction_error(&set));
        let rebuilt = &set.u_bath * &set.p_final * &set.u_corr;
        assert!((rebuilt - &set.u_full).norm() < 1e-12);
    }

    #[test]
    fn flat_pulse_matches_leading_magnus_term() {
        let bath = BathSpec::default_noncommuting();
        let lt = 1e-3;
        let set = evolve_full(&PulseSpec::flat_for_angle(PI).unwrap(), &bath, lt, 512).unwrap();
        // d ≈ τ |∫ n_z| ‖A0‖_F / 2 with |∫ n_z| = 2/π.
        let a0_frob = (2.0 * (0.49 + 0.09f64)).sqrt();
        let leading = lt * (2.0 / PI) * a0_frob / 2.0;
        let d = correction_error(&set);
        assert!((d / leading - 1.0).abs() < 0.01, "{d} vs {leading}");
    }

    #[test]
    fn shaped_pulse_beats_flat_pulse() {
        let bath = BathSpec::default_noncommuting();
        let flat = evolve_full(&PulseSpec::flat_for_angle(PI).unwrap(), &bath, 0.01, 1024).unwrap();
        let fm2 = evolve_full(&builtin("FM-2-PI").unwrap(), &bath, 0.01, 1024).unwrap();
        assert!(correction_error(&fm2) < 1e-2 * correction_error(&flat));
    }

    #[test]
    fn sweep_rejects_bad_ranges() {
        let p = PulseSpec::flat_for_angle(PI).unwrap();
        let bath = BathSpec::default_noncommuting();
        let short = log_spaced(1e-3, 1e-2, 8);
        assert!(matches!(scaling_exponent(&p, &bath, &short, 256), Err(Error::Config(_))));
        let long = log_spaced(1e-2, 1.0, 8);
        assert!(matches!(scaling_exponent(&p, &bath, &long, 256), Err(Error::Config(_))));
        assert!(matches!(scaling_exponent(&p, &bath, &log_spaced(1e-3, 1e-1, 8), 100), Err(Error::InvalidSteps { .. })));
    }

    #[test]
    fn csv_layout() {
        let r = VerificationReport {
            taus: vec![0.001, 0.01],
            lambda_taus: vec![0.001, 0.01],
            errors: vec![1e-4, 1e-3],
            integrator_errors: vec![0.0, 0.0],
            excluded: vec![false, true],
            slope: 1.0,
            slope_window: (0.001, 0.001),
        };
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "tau,lambda_tau,d,excluded_from_fit");
        assert_eq!(lines[2], "0.01,0.01,0.001,true");
        assert_eq!(lines[3], "slope=1,window=[0.001,0.001]");
    }
}
