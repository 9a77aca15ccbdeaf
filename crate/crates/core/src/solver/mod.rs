// SPDX-License-Identifier: Apache-2.0

//! Root finding for pulse parameters that zero the decoupling residuals.
//!
//! The unknowns are `[V0, b_k for k in active_indices]`. First order solves
//! the five equations `[η11, η12, η13, bc_psi, bc_theta]`, second order adds
//! `η21..η26`. Several starting points are run independently and the
//! converged result with the lowest amplitude wins.

mod dogleg;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::conditions::{self, simpson, ConditionResiduals};
use crate::error::{Error, Result};
use crate::kinematics::{self, RotationTrajectory};
use crate::pulse::{harmonic, PulseSpec};
use crate::tables;

pub use dogleg::IterationRecord;

/// Starting points for the multi-start search.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedPlan {
    /// Full parameter vectors `[V0, b_active...]`.
    pub explicit: Vec<Vec<f64>>,
    /// Number of pseudo-random starts drawn after the explicit ones.
    pub random: usize,
    pub rng_seed: u64,
    pub coeff_range: (f64, f64),
    pub v0_range: (f64, f64),
}

impl Default for SeedPlan {
    fn default() -> Self {
        SeedPlan { explicit: Vec::new(), random: 0, rng_seed: 0x5eed, coeff_range: (-2.0, 2.0), v0_range: (1.0, 8.0) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub order: u8,
    pub chi: f64,
    pub active_indices: Vec<usize>,
    /// Coefficients held at fixed values during the solve.
    pub fixed: Vec<(usize, f64)>,
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seeds: SeedPlan,
}

impl SolveConfig {
    /// Square system for `order` with default indices, grid 4096, tolerance
    /// 1e-10 and no seeds.
    pub fn new(order: u8, chi: f64) -> Self {
        let n = if order >= 2 { 10 } else { 4 };
        SolveConfig {
            order,
            chi,
            active_indices: (1..=n).collect(),
            fixed: Vec::new(),
            grid: 4096,
            tol: 1e-10,
            max_iter: 100,
            seeds: SeedPlan::default(),
        }
    }

    /// Adds every published pulse of matching order and angle as a start.
    pub fn with_table_seeds(mut self) -> Self {
        for p in tables::seeds_for(self.order, self.chi) {
            let v = self.params_of(&p);
            self.seeds.explicit.push(v);
        }
        self
    }

    pub fn with_random_seeds(mut self, count: usize, rng_seed: u64) -> Self {
        self.seeds.random = count;
        self.seeds.rng_seed = rng_seed;
        self
    }

    pub fn unknowns(&self) -> usize {
        self.active_indices.len() + 1
    }

    pub fn equations(&self) -> usize {
        if self.order >= 2 {
            11
        } else {
            5
        }
    }

    /// Parameter vector `[V0, b_active...]` of `pulse`.
    pub fn params_of(&self, pulse: &PulseSpec) -> Vec<f64> {
        std::iter::once(pulse.v0()).chain(self.active_indices.iter().map(|&k| pulse.coeff(k))).collect()
    }

    /// Pulse encoded by `params`.
    pub fn pulse_of(&self, params: &[f64]) -> Result<PulseSpec> {
        if params.len() != self.unknowns() {
            return Err(Error::Config(format!("expected {} parameters, got {}", self.unknowns(), params.len())));
        }
        if !(params[0] > 0.0) {
            return Err(Error::InvalidParameter(format!("V0 = {} must be positive", params[0])));
        }
        let mut p = PulseSpec::new(self.chi, params[0]).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        for &(k, b) in &self.fixed {
            p.set_coeff(k, b)?;
        }
        for (&k, &b) in self.active_indices.iter().zip(&params[1..]) {
            p.set_coeff(k, b).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order != 1 && self.order != 2 {
            return Err(Error::Config(format!("order must be 1 or 2, got {}", self.order)));
        }
        PulseSpec::new(self.chi, 1.0).map_err(|e| Error::Config(e.to_string()))?;
        let mut seen = std::collections::BTreeSet::new();
        for &k in self.active_indices.iter().chain(self.fixed.iter().map(|(k, _)| k)) {
            if k == 0 || !seen.insert(k) {
                return Err(Error::Config(format!("coefficient index {k} is zero or repeated")));
            }
        }
        if self.unknowns() != self.equations() {
            return Err(Error::Config(format!(
                "order {} needs {} unknowns, configuration has {}",
                self.order,
                self.equations(),
                self.unknowns()
            )));
        }
        if self.grid < 16 || self.grid % 2 != 0 {
            return Err(Error::Config(format!("grid {} must be even and at least 16", self.grid)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if self.seeds.explicit.is_empty() && self.seeds.random == 0 {
            return Err(Error::Config("no starting points".into()));
        }
        if let Some(bad) = self.seeds.explicit.iter().find(|s| s.len() != self.unknowns()) {
            return Err(Error::Config(format!("seed has {} entries, expected {}", bad.len(), self.unknowns())));
        }
        let (lo, hi) = self.seeds.v0_range;
        if self.seeds.random > 0 && !(lo > 0.0 && hi >= lo) {
            return Err(Error::Config(format!("V0 seed range [{lo}, {hi}] must be positive")));
        }
        Ok(())
    }

    /// Explicit seeds followed by the reproducible random draws.
    pub fn starting_points(&self) -> Vec<Vec<f64>> {
        let mut out = self.seeds.explicit.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seeds.rng_seed);
        let (clo, chi) = self.seeds.coeff_range;
        let (vlo, vhi) = self.seeds.v0_range;
        for _ in 0..self.seeds.random {
            let mut v = Vec::with_capacity(self.unknowns());
            v.push(vlo + (vhi - vlo) * rng.random::<f64>());
            for _ in &self.active_indices {
                v.push(clo + (chi - clo) * rng.random::<f64>());
            }
            out.push(v);
        }
        out
    }
}

/// Outcome of a solve. `residuals` are evaluated on the solve grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub pulse: PulseSpec,
    pub residuals: ConditionResiduals,
    pub iterations: usize,
    pub converged: bool,
    pub seed_index: usize,
    /// Iteration log of the returned start.
    pub trace: Vec<IterationRecord>,
    /// Distinct converged roots, ordered by amplitude.
    pub roots: Vec<PulseSpec>,
    /// Probes of the outer amplitude search, empty for plain solves.
    pub search: Vec<SearchProbe>,
}

/// One evaluation of the outer amplitude search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchProbe {
    pub value: f64,
    /// `None` where the inner solve did not converge.
    pub v0: Option<f64>,
}

/// Residual evaluator with the phase basis precomputed on the half-step grid.
struct ResidualModel<'a> {
    config: &'a SolveConfig,
    fixed_phase: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

impl<'a> ResidualModel<'a> {
    fn new(config: &'a SolveConfig) -> Self {
        let m = 2 * config.grid;
        let times: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64).collect();
        let fixed_phase = times.iter().map(|&t| config.fixed.iter().map(|&(k, b)| b * harmonic(k, t)).sum()).collect();
        let basis = config.active_indices.iter().map(|&k| times.iter().map(|&t| harmonic(k, t)).collect()).collect();
        ResidualModel { config, fixed_phase, basis }
    }

    fn trajectory(&self, params: &[f64]) -> Result<RotationTrajectory> {
        let pulse = self.config.pulse_of(params)?;
        let steps = self.config.grid;
        if (steps as f64) < 32.0 * pulse.v0() {
            return Err(Error::InvalidParameter(format!("V0 = {} too large for grid {steps}", pulse.v0())));
        }
        let mut phases = self.fixed_phase.clone();
        for (b, col) in params[1..].iter().zip(&self.basis) {
            for (p, c) in phases.iter_mut().zip(col) {
                *p += b * c;
            }
        }
        kinematics::propagate_with_phases(&pulse, steps, &phases)
    }

    fn residuals(&self, params: &[f64]) -> Result<Vec<f64>> {
        let traj = self.trajectory(params)?;
        if self.config.order >= 2 {
            return Ok(conditions::evaluate(&traj)?.vector(2));
        }
        let [nx, ny, nz] = conditions::column_z(&traj);
        let h = traj.step();
        let (bc_psi, bc_theta) = conditions::boundary_residuals(&traj, self.config.chi);
        Ok(vec![-simpson(&nx, h), simpson(&ny, h), simpson(&nz, h), bc_psi, bc_theta])
    }
}

/// Ordered residual vector at `params` for the system described by `config`.
pub fn assemble_residuals(params: &[f64], config: &SolveConfig) -> Result<Vec<f64>> {
    if params.len() != config.unknowns() {
        return Err(Error::Config(format!("expected {} parameters, got {}", config.unknowns(), params.len())));
    }
    ResidualModel::new(config).residuals(params)
}

struct SeedOutcome {
    index: usize,
    params: Vec<f64>,
    max_residual: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<IterationRecord>,
}

fn run_seed(model: &ResidualModel, config: &SolveConfig, index: usize, start: &[f64]) -> Option<SeedOutcome> {
    let opts = dogleg::Options { tol: config.tol, max_iter: config.max_iter, fd_step: 1e-6 };
    let f = |x: &[f64]| model.residuals(x);
    let out = dogleg::solve(&f, start, &opts).ok()?;
    let mut converged = out.converged;
    if converged {
        // Re-check on a refined grid to reject quadrature artifacts.
        let fine = config.pulse_of(&out.x).ok().and_then(|p| kinematics::propagate_su2(&p, 2 * config.grid).ok());
        converged = match fine.map(|t| conditions::evaluate(&t)) {
            Some(Ok(r)) => r.max_abs(config.order) <= 10.0 * config.tol,
            _ => false,
        };
    }
    let max_residual = out.f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Some(SeedOutcome { index, params: out.x, max_residual, iterations: out.iterations, converged, trace: out.trace })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Multi-start root finding. Returns the converged start with the lowest
/// `V0`, or the start with the smallest residual when none converged.
pub fn solve_pulse(config: &SolveConfig) -> Result<SolveResult> {
    config.validate()?;
    let model = ResidualModel::new(config);
    let starts = config.starting_points();
    let outcomes: Vec<SeedOutcome> =
        starts.par_iter().enumerate().filter_map(|(i, s)| run_seed(&model, config, i, s)).collect();

    let mut converged: Vec<&SeedOutcome> = outcomes.iter().filter(|o| o.converged).collect();
    converged.sort_by(|a, b| a.params[0].total_cmp(&b.params[0]).then(a.index.cmp(&b.index)));
    let best = match converged.first() {
        Some(b) => *b,
        None => outcomes
            .iter()
            .min_by(|a, b| a.max_residual.total_cmp(&b.max_residual).then(a.index.cmp(&b.index)))
            .ok_or_else(|| Error::InvalidParameter("no starting point could be evaluated".into()))?,
    };

    let mut distinct: Vec<&SeedOutcome> = Vec::new();
    for o in &converged {
        if distinct.iter().all(|d| distance(&d.params, &o.params) > 1e-3) {
            distinct.push(o);
        }
    }
    let label = |o: &SeedOutcome| format!("FM-{}-{}-seed{}", config.order, angle_tag(config.chi), o.index);
    let roots = distinct.iter().map(|o| config.pulse_of(&o.params).map(|p| p.labeled(label(o)))).collect::<Result<_>>()?;

    let pulse = config.pulse_of(&best.params)?.labeled(label(best));
    let traj = model.trajectory(&best.params)?;
    Ok(SolveResult {
        residuals: conditions::evaluate(&traj)?,
        pulse,
        iterations: best.iterations,
        converged: best.converged,
        seed_index: best.index,
        trace: best.trace.clone(),
        roots,
        search: Vec::new(),
    })
}

fn angle_tag(chi: f64) -> String {
    if (chi - std::f64::consts::PI).abs() < 1e-12 {
        "PI".into()
    } else if (chi - std::f64::consts::FRAC_PI_2).abs() < 1e-12 {
        "PI2".into()
    } else {
        format!("{chi:.4}")
    }
}

/// Range of the extra coefficient scanned by [`minimize_amplitude`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeSearch {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    /// Bracket expansion stops once the half-width exceeds this.
    pub max_half_width: f64,
    pub scan_points: usize,
    /// Golden-section stopping width.
    pub xtol: f64,
}

impl AmplitudeSearch {
    /// Scan `[-2, 2]`, expanding up to `[-8, 8]`.
    pub fn new(index: usize) -> Self {
        AmplitudeSearch { index, lo: -2.0, hi: 2.0, max_half_width: 8.0, scan_points: 9, xtol: 1e-3 }
    }

    /// Zero-width search holding the coefficient at `value`.
    pub fn fixed_at(index: usize, value: f64) -> Self {
        AmplitudeSearch { lo: value, hi: value, ..Self::new(index) }
    }
}

struct Search<'a> {
    config: &'a SolveConfig,
    index: usize,
    probes: Vec<(f64, Option<SolveResult>)>,
}

impl Search<'_> {
    fn inner_config(&self, value: f64, warm: Option<Vec<f64>>) -> SolveConfig {
        let mut cfg = self.config.clone();
        cfg.fixed.push((self.index, value));
        if let Some(w) = warm {
            cfg.seeds.explicit.insert(0, w);
        }
        cfg
    }

    /// Parameters of the converged probe closest in value.
    fn warm_start(&self, value: f64) -> Option<Vec<f64>> {
        self.probes
            .iter()
            .filter_map(|(x, r)| r.as_ref().map(|r| (x, r)))
            .min_by(|a, b| (a.0 - value).abs().total_cmp(&(b.0 - value).abs()))
            .map(|(_, r)| self.config.params_of(&r.pulse))
    }

    fn probe(&mut self, value: f64) -> Result<f64> {
        if let Some((_, r)) = self.probes.iter().find(|(x, _)| *x == value) {
            return Ok(r.as_ref().map_or(f64::INFINITY, |r| r.pulse.v0()));
        }
        let cfg = self.inner_config(value, self.warm_start(value));
        let res = solve_pulse(&cfg)?;
        let v0 = if res.converged { res.pulse.v0() } else { f64::INFINITY };
        self.probes.push((value, res.converged.then_some(res)));
        Ok(v0)
    }

    fn best(&self) -> Option<(f64, f64)> {
        self.probes
            .iter()
            .filter_map(|(x, r)| r.as_ref().map(|r| (*x, r.pulse.v0())))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Lowest-amplitude second-order solution over the value of one extra
/// coefficient: a coarse scan with continuation, bracket expansion, then
/// golden-section refinement.
pub fn minimize_amplitude(config: &SolveConfig, search: &AmplitudeSearch) -> Result<SolveResult> {
    config.validate()?;
    let k = search.index;
    if k == 0 || config.active_indices.contains(&k) || config.fixed.iter().any(|(j, _)| *j == k) {
        return Err(Error::Config(format!("extra coefficient b{k} is already part of the system")));
    }
    if !(search.lo <= search.hi) || !search.lo.is_finite() || !search.hi.is_finite() {
        return Err(Error::Config(format!("search range [{}, {}] is empty", search.lo, search.hi)));
    }
    if search.lo == search.hi {
        let mut cfg = config.clone();
        cfg.fixed.push((k, search.lo));
        let mut res = solve_pulse(&cfg)?;
        res.search = vec![SearchProbe { value: search.lo, v0: res.converged.then(|| res.pulse.v0()) }];
        return Ok(res);
    }

    let mut s = Search { config, index: k, probes: Vec::new() };
    let center = 0.5 * (search.lo + search.hi);
    let mut half = 0.5 * (search.hi - search.lo);
    let n = search.scan_points.max(3);
    let spacing = 2.0 * half / (n - 1) as f64;

    // Sweep outward from the center so each probe can warm-start from its
    // neighbour.
    let mut up = center;
    let mut down = center - spacing;
    loop {
        while up <= center + half + 1e-12 {
            s.probe(up)?;
            up += spacing;
        }
        while down >= center - half - 1e-12 {
            s.probe(down)?;
            down -= spacing;
        }
        let at_edge = match s.best() {
            None => true,
            Some((x, _)) => (x - center).abs() > half - 0.5 * spacing,
        };
        if !at_edge || 2.0 * half > search.max_half_width + 1e-12 {
            break;
        }
        half *= 2.0;
    }
    let (xbest, _) = s.best().ok_or(Error::Bracket { lo: center - half, hi: center + half })?;

    // Golden section on the neighbouring scan interval.
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = (xbest - spacing).max(center - half);
    let mut b = (xbest + spacing).min(center + half);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = s.probe(c)?;
    let mut fd = s.probe(d)?;
    while b - a > search.xtol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = s.probe(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = s.probe(d)?;
        }
    }

    let mut trace: Vec<SearchProbe> =
        s.probes.iter().map(|(x, r)| SearchProbe { value: *x, v0: r.as_ref().map(|r| r.pulse.v0()) }).collect();
    trace.sort_by(|a, b| a.value.total_cmp(&b.value));
    let (xbest, _) = s.best().expect("a converged probe exists");
    let mut best = s
        .probes
        .into_iter()
        .find(|(x, _)| *x == xbest)
        .and_then(|(_, r)| r)
        .expect("best probe is converged");
    best.pulse.label = format!("FM-2-MIN-{}", angle_tag(config.chi));
    best.search = trace;
    Ok(best)
}
