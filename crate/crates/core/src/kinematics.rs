// SPDX-License-Identifier: Apache-2.0

//! Spin rotation generated by a pulse.
//!
//! The pulse propagator `P(t) = q0·1 - i(q1σx + q2σy + q3σz)` solves
//! `i∂tP = (v·σ)P`. It is integrated as a unit quaternion with classic RK4
//! and converted to the global axis-angle form `P = exp(-i σ·â ψ/2)` with
//! `ψ` unwrapped continuously. The spherical-coordinate equations of motion
//! for `(ψ, θ, φ)` are provided as an independent second chart.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::format::fmt_g17;
use crate::pulse::PulseSpec;

/// `|sin(ψ/2)|` below which the axis is undefined and continued from the
/// previous sample. Corresponds to `|ψ - 2πm| < 1e-9`.
const DEGENERATE_SIN_HALF: f64 = 5e-10;

/// Spherical right-hand sides are refused below this denominator.
const CHART_SINGULAR: f64 = 1e-12;

/// Sub-steps used to start the spherical chart away from `t = 0`.
const STARTUP_SUBSTEPS: usize = 32;

/// Quaternion components of an SU(2) element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2State {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl Su2State {
    pub const IDENTITY: Su2State = Su2State { q0: 1.0, q1: 0.0, q2: 0.0, q3: 0.0 };

    pub fn from_axis_angle(psi: f64, axis: [f64; 3]) -> Self {
        let (s, c) = (0.5 * psi).sin_cos();
        Su2State { q0: c, q1: s * axis[0], q2: s * axis[1], q3: s * axis[2] }
    }

    pub fn norm(&self) -> f64 {
        (self.q0 * self.q0 + self.q1 * self.q1 + self.q2 * self.q2 + self.q3 * self.q3).sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Su2State { q0: self.q0 / n, q1: self.q1 / n, q2: self.q2 / n, q3: self.q3 / n }
    }

    fn vector_norm(&self) -> f64 {
        (self.q1 * self.q1 + self.q2 * self.q2 + self.q3 * self.q3).sqrt()
    }

    /// Distance to `other` modulo the global sign `q ~ -q`.
    pub fn distance_up_to_sign(&self, other: &Su2State) -> f64 {
        let d = |s: f64| {
            ((self.q0 - s * other.q0).powi(2)
                + (self.q1 - s * other.q1).powi(2)
                + (self.q2 - s * other.q2).powi(2)
                + (self.q3 - s * other.q3).powi(2))
            .sqrt()
        };
        d(1.0).min(d(-1.0))
    }

    /// `dq/dt` for control `(vx, vy, 0)`: `dq0 = -v·q`, `dq = q0 v + v × q`.
    #[inline]
    fn rate(&self, vx: f64, vy: f64) -> [f64; 4] {
        [
            -(vx * self.q1 + vy * self.q2),
            self.q0 * vx + vy * self.q3,
            self.q0 * vy - vx * self.q3,
            vx * self.q2 - vy * self.q1,
        ]
    }

    #[inline]
    fn add_scaled(&self, k: &[f64; 4], s: f64) -> Self {
        Su2State { q0: self.q0 + s * k[0], q1: self.q1 + s * k[1], q2: self.q2 + s * k[2], q3: self.q3 + s * k[3] }
    }

    /// 2×2 complex matrix `[[a, b], [c, d]]` as `(re, im)` pairs.
    pub fn matrix(&self) -> [[(f64, f64); 2]; 2] {
        // q0 - i(q1 σx + q2 σy + q3 σz)
        [
            [(self.q0, -self.q3), (-self.q2, -self.q1)],
            [(self.q2, -self.q1), (self.q0, self.q3)],
        ]
    }
}

/// Global rotation angle and axis at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    pub psi: f64,
    pub axis: [f64; 3],
    pub theta: f64,
    pub varphi: f64,
}

impl AxisAngle {
    /// State at `t = 0`: no rotation, axis along the initial control direction.
    pub fn initial(phi0: f64) -> Self {
        AxisAngle { psi: 0.0, axis: [phi0.cos(), phi0.sin(), 0.0], theta: FRAC_PI_2, varphi: phi0 }
    }

    /// Builds the state from spherical angles.
    pub fn from_spherical(psi: f64, theta: f64, varphi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = varphi.sin_cos();
        AxisAngle { psi, axis: [st * cp, st * sp, ct], theta, varphi }
    }

    fn with_axis(psi: f64, axis: [f64; 3], prev: &AxisAngle) -> Self {
        let theta = axis[2].clamp(-1.0, 1.0).acos();
        let varphi = if theta.sin() > 1e-12 {
            nearest_branch(axis[1].atan2(axis[0]), prev.varphi, TAU)
        } else {
            prev.varphi
        };
        AxisAngle { psi, axis, theta, varphi }
    }

    pub fn su2(&self) -> Su2State {
        Su2State::from_axis_angle(self.psi, self.axis)
    }
}

/// `base + k·period` closest to `target`.
fn nearest_branch(base: f64, target: f64, period: f64) -> f64 {
    base + ((target - base) / period).round() * period
}

/// Converts a unit quaternion to axis-angle form, continuing `ψ` and the
/// axis sign from `previous`. Where the axis is undefined (`ψ ∈ 2πZ`) the
/// previous axis is kept.
pub fn axis_angle_from_su2(q: &Su2State, previous: &AxisAngle) -> AxisAngle {
    let s = q.vector_norm();
    if s < DEGENERATE_SIN_HALF {
        // ψ = 2πm with (-1)^m = sign(q0).
        let base = if q.q0 >= 0.0 { 0.0 } else { TAU };
        let psi = nearest_branch(base, previous.psi, 2.0 * TAU);
        return AxisAngle::with_axis(psi, previous.axis, previous);
    }
    let raw = 2.0 * s.atan2(q.q0);
    let unit = [q.q1 / s, q.q2 / s, q.q3 / s];
    let dot = unit[0] * previous.axis[0] + unit[1] * previous.axis[1] + unit[2] * previous.axis[2];
    let (psi, axis) = if dot >= 0.0 {
        (nearest_branch(raw, previous.psi, 2.0 * TAU), unit)
    } else {
        (nearest_branch(-raw, previous.psi, 2.0 * TAU), [-unit[0], -unit[1], -unit[2]])
    };
    AxisAngle::with_axis(psi, axis, previous)
}

/// Sampled rotation on the uniform grid `t_k = k/N`.
#[derive(Debug, Clone)]
pub struct RotationTrajectory {
    pub grid: Vec<f64>,
    pub states: Vec<AxisAngle>,
    pub su2: Vec<Su2State>,
    pub pulse: PulseSpec,
}

impl RotationTrajectory {
    pub fn steps(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn step(&self) -> f64 {
        1.0 / self.steps() as f64
    }

    pub fn last(&self) -> &AxisAngle {
        self.states.last().expect("trajectory has samples")
    }

    /// CSV with header `t,phi,vx,vy,psi,theta,varphi,ax,ay,az`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,phi,vx,vy,psi,theta,varphi,ax,ay,az\n");
        for (t, s) in self.grid.iter().zip(&self.states) {
            let phi = self.pulse.phase(*t);
            let (sn, cs) = phi.sin_cos();
            let row = [
                *t,
                phi,
                self.pulse.v0() * cs,
                self.pulse.v0() * sn,
                s.psi,
                s.theta,
                s.varphi,
                s.axis[0],
                s.axis[1],
                s.axis[2],
            ];
            let cells: Vec<String> = row.iter().map(|x| fmt_g17(*x + 0.0)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Smallest accepted grid for a pulse of amplitude `v0`.
pub fn min_steps(v0: f64) -> usize {
    let n = (32.0 * v0).ceil().max(16.0) as usize;
    n + n % 2
}

fn check_steps(pulse: &PulseSpec, steps: usize, need_even: bool) -> Result<()> {
    if steps < 16 {
        return Err(Error::InvalidSteps { steps, reason: "at least 16 steps required".into() });
    }
    if need_even && steps % 2 != 0 {
        return Err(Error::InvalidSteps { steps, reason: "step count must be even".into() });
    }
    if (steps as f64) < 32.0 * pulse.v0() {
        return Err(Error::InvalidSteps {
            steps,
            reason: format!("need at least 32·v0 = {:.1} steps for unambiguous unwrapping", 32.0 * pulse.v0()),
        });
    }
    Ok(())
}

/// Phase sampled on the half-step grid `t = j/(2N)`, `j = 0..=2N`.
pub(crate) fn half_step_phases(pulse: &PulseSpec, steps: usize) -> Vec<f64> {
    let denom = (2 * steps) as f64;
    (0..=2 * steps).map(|j| pulse.phase(j as f64 / denom)).collect()
}

/// Integrates the pulse propagator with RK4, renormalizing every step.
pub fn propagate_su2(pulse: &PulseSpec, steps: usize) -> Result<RotationTrajectory> {
    check_steps(pulse, steps, true)?;
    let phases = half_step_phases(pulse, steps);
    propagate_with_phases(pulse, steps, &phases)
}

/// RK4 propagation given `Φ` on the half-step grid.
pub(crate) fn propagate_with_phases(pulse: &PulseSpec, steps: usize, phases: &[f64]) -> Result<RotationTrajectory> {
    debug_assert_eq!(phases.len(), 2 * steps + 1);
    let v0 = pulse.v0();
    let h = 1.0 / steps as f64;
    let controls: Vec<(f64, f64)> = phases
        .iter()
        .map(|p| {
            let (s, c) = p.sin_cos();
            (v0 * c, v0 * s)
        })
        .collect();

    let mut grid = Vec::with_capacity(steps + 1);
    let mut su2 = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut q = Su2State::IDENTITY;
    let mut prev = AxisAngle::initial(phases[0]);
    let mut prev_degenerate = true;
    grid.push(0.0);
    su2.push(q);
    states.push(prev);

    for k in 0..steps {
        let (ax, ay) = controls[2 * k];
        let (mx, my) = controls[2 * k + 1];
        let (bx, by) = controls[2 * k + 2];
        let k1 = q.rate(ax, ay);
        let k2 = q.add_scaled(&k1, 0.5 * h).rate(mx, my);
        let k3 = q.add_scaled(&k2, 0.5 * h).rate(mx, my);
        let k4 = q.add_scaled(&k3, h).rate(bx, by);
        let incr = [
            k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0],
            k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1],
            k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2],
            k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3],
        ];
        q = q.add_scaled(&incr, h / 6.0).normalized();

        let index = k + 1;
        let next = axis_angle_from_su2(&q, &prev);
        let degenerate = q.vector_norm() < DEGENERATE_SIN_HALF;
        if prev_degenerate && !degenerate && index > 1 {
            // The axis was carried through ψ ∈ 2πZ; its sign must still be
            // decidable from continuity.
            let dot: f64 = (0..3).map(|i| next.axis[i] * prev.axis[i]).sum();
            if dot.abs() < 0.5 {
                return Err(Error::AmbiguousUnwrap { index });
            }
        }
        prev_degenerate = degenerate;
        grid.push(index as f64 * h);
        su2.push(q);
        states.push(next);
        prev = next;
    }
    if let Some(last) = grid.last_mut() {
        *last = 1.0;
    }
    Ok(RotationTrajectory { grid, states, su2, pulse: pulse.clone() })
}

/// Right-hand sides `(dψ/dt, dθ/dt, dφ/dt)` of the spherical-chart equations.
pub fn rhs_spherical(psi: f64, theta: f64, varphi: f64, phase: f64, v0: f64) -> Result<(f64, f64, f64)> {
    let (sh, ch) = (0.5 * psi).sin_cos();
    let (st, ct) = theta.sin_cos();
    if sh.abs() < CHART_SINGULAR || st.abs() < CHART_SINGULAR {
        return Err(Error::Singularity { t: f64::NAN });
    }
    let (sd, cd) = (phase - varphi).sin_cos();
    let dpsi = 2.0 * v0 * st * (phase.sin() * varphi.sin() + phase.cos() * varphi.cos());
    let dvarphi = v0 * (ch * sd - sh * ct * cd) / (sh * st);
    let dtheta = v0 * (ch * ct * cd + sh * sd) / sh;
    Ok((dpsi, dtheta, dvarphi))
}

#[derive(Clone, Copy)]
struct Chart {
    psi: f64,
    theta: f64,
    varphi: f64,
}

fn chart_rate(y: Chart, t: f64, pulse: &PulseSpec) -> Result<Chart> {
    let (psi, theta, varphi) =
        rhs_spherical(y.psi, y.theta, y.varphi, pulse.phase(t), pulse.v0()).map_err(|_| Error::Singularity { t })?;
    Ok(Chart { psi, theta, varphi })
}

fn chart_rk4(y: Chart, t: f64, h: f64, pulse: &PulseSpec) -> Result<Chart> {
    let step = |y: Chart, k: Chart, s: f64| Chart {
        psi: y.psi + s * k.psi,
        theta: y.theta + s * k.theta,
        varphi: y.varphi + s * k.varphi,
    };
    let k1 = chart_rate(y, t, pulse)?;
    let k2 = chart_rate(step(y, k1, 0.5 * h), t + 0.5 * h, pulse)?;
    let k3 = chart_rate(step(y, k2, 0.5 * h), t + 0.5 * h, pulse)?;
    let k4 = chart_rate(step(y, k3, h), t + h, pulse)?;
    Ok(Chart {
        psi: y.psi + h / 6.0 * (k1.psi + 2.0 * k2.psi + 2.0 * k3.psi + k4.psi),
        theta: y.theta + h / 6.0 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta),
        varphi: y.varphi + h / 6.0 * (k1.varphi + 2.0 * k2.varphi + 2.0 * k3.varphi + k4.varphi),
    })
}

/// Integrates the spherical-chart equations with RK4.
///
/// The equations are 0/0 at `t = 0`, so integration starts from the
/// second-order Taylor expansion of the limits at `t → 0`
/// (`ψ' = 2v0`, `φ' = Φ'/2`, `φ'' = Φ''/3`, `θ' = 0`, `θ'' = v0Φ'/3`),
/// evaluated at `h/32`, and reaches the first grid point with RK4 sub-steps.
pub fn integrate_spherical(pulse: &PulseSpec, steps: usize) -> Result<RotationTrajectory> {
    check_steps(pulse, steps, false)?;
    let v0 = pulse.v0();
    let h = 1.0 / steps as f64;
    let phi0 = pulse.phase(0.0);
    let d1 = pulse.phase_rate(0.0);
    let d2 = pulse.phase_accel(0.0);

    let sub = h / STARTUP_SUBSTEPS as f64;
    let mut y = Chart {
        psi: 2.0 * v0 * sub,
        theta: FRAC_PI_2 + v0 * d1 * sub * sub / 6.0,
        varphi: phi0 + 0.5 * d1 * sub + d2 * sub * sub / 6.0,
    };
    for j in 1..STARTUP_SUBSTEPS {
        y = chart_rk4(y, j as f64 * sub, sub, pulse)?;
    }

    let mut grid = vec![0.0];
    let initial = AxisAngle::initial(phi0);
    let mut states = vec![initial];
    let mut su2 = vec![Su2State::IDENTITY];
    let mut push = |t: f64, y: &Chart| {
        let s = AxisAngle::from_spherical(y.psi, y.theta, y.varphi);
        grid.push(t);
        su2.push(s.su2());
        states.push(s);
    };
    push(h, &y);
    for k in 1..steps {
        y = chart_rk4(y, k as f64 * h, h, pulse)?;
        push(if k + 1 == steps { 1.0 } else { (k + 1) as f64 * h }, &y);
    }
    Ok(RotationTrajectory { grid, states, su2, pulse: pulse.clone() })
}

/// Wrapped difference of two angles in `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}
