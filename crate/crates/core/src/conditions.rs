// SPDX-License-Identifier: Apache-2.0

//! Scalar decoupling conditions for a qubit dephasing through `σz`.
//!
//! All conditions are built from the `z` column of the rotation matrix
//! `D_â(-ψ)`, whose elements `n_ij(t)` give the toggling-frame image of
//! `σ_j`. First order needs `∫ n_iz = 0`; second order additionally needs
//! the `t`-weighted moments and the antisymmetrized double integrals.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::format::fmt_g17;
use crate::kinematics::RotationTrajectory;

/// Rotation matrix `D_â(-ψ)` with elements `n[i][j]`, `i, j ∈ {x, y, z}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrixSample {
    pub t: f64,
    pub n: [[f64; 3]; 3],
}

impl RotationMatrixSample {
    /// Largest element of `|D Dᵀ - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| self.n[i][k] * self.n[j][k]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    pub fn determinant(&self) -> f64 {
        let n = &self.n;
        n[0][0] * (n[1][1] * n[2][2] - n[1][2] * n[2][1]) - n[0][1] * (n[1][0] * n[2][2] - n[1][2] * n[2][0])
            + n[0][2] * (n[1][0] * n[2][1] - n[1][1] * n[2][0])
    }
}

pub fn rotation_matrix(psi: f64, axis: [f64; 3]) -> Result<[[f64; 3]; 3]> {
    let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("rotation axis has norm {norm}")));
    }
    Ok(rotation_matrix_unchecked(psi, axis))
}

fn rotation_matrix_unchecked(psi: f64, a: [f64; 3]) -> [[f64; 3]; 3] {
    let (s, c) = psi.sin_cos();
    let r = 1.0 - c;
    let [ax, ay, az] = a;
    [
        [c + r * ax * ax, az * s + r * ax * ay, -ay * s + r * ax * az],
        [-az * s + r * ax * ay, c + r * ay * ay, ax * s + r * ay * az],
        [ay * s + r * ax * az, -ax * s + r * ay * az, c + r * az * az],
    ]
}

/// Rotation matrix at every trajectory sample.
pub fn rotation_matrices(traj: &RotationTrajectory) -> Vec<RotationMatrixSample> {
    traj.grid
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| RotationMatrixSample { t, n: rotation_matrix_unchecked(s.psi, s.axis) })
        .collect()
}

/// Samples of `(n_xz, n_yz, n_zz)`.
pub fn column_z(traj: &RotationTrajectory) -> [Vec<f64>; 3] {
    let n = traj.states.len();
    let mut cols = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for s in &traj.states {
        let (sn, cs) = s.psi.sin_cos();
        let r = 1.0 - cs;
        let [ax, ay, az] = s.axis;
        cols[0].push(-ay * sn + r * ax * az);
        cols[1].push(ax * sn + r * ay * az);
        cols[2].push(cs + r * az * az);
    }
    cols
}

/// All decoupling residuals of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionResiduals {
    pub eta11: f64,
    pub eta12: f64,
    pub eta13: f64,
    pub eta21: f64,
    pub eta22: f64,
    pub eta23: f64,
    pub eta24: f64,
    pub eta25: f64,
    pub eta26: f64,
    pub bc_psi: f64,
    pub bc_theta: f64,
}

impl ConditionResiduals {
    /// Residuals in root-finder order: `[η11, η12, η13, bc_psi, bc_theta]`,
    /// followed by `η21..η26` for order 2.
    pub fn vector(&self, order: u8) -> Vec<f64> {
        let mut v = vec![self.eta11, self.eta12, self.eta13, self.bc_psi, self.bc_theta];
        if order >= 2 {
            v.extend([self.eta21, self.eta22, self.eta23, self.eta24, self.eta25, self.eta26]);
        }
        v
    }

    /// Max-norm over the residuals that apply at `order`.
    pub fn max_abs(&self, order: u8) -> f64 {
        self.vector(order).iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn all(&self) -> [f64; 11] {
        [
            self.eta11,
            self.eta12,
            self.eta13,
            self.eta21,
            self.eta22,
            self.eta23,
            self.eta24,
            self.eta25,
            self.eta26,
            self.bc_psi,
            self.bc_theta,
        ]
    }

    pub const CSV_HEADER: &'static str =
        "label,eta11,eta12,eta13,eta21,eta22,eta23,eta24,eta25,eta26,bc_psi,bc_theta,max_abs";

    pub fn csv_row(&self, label: &str, order: u8) -> String {
        let mut row = label.replace(',', ";");
        for x in self.all() {
            row.push(',');
            row.push_str(&fmt_g17(x));
        }
        row.push(',');
        row.push_str(&fmt_g17(self.max_abs(order)));
        row
    }

    /// Human-readable block.
    pub fn report(&self, label: &str, order: u8, grid: usize) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "pulse {label}  (order {order}, grid N = {grid}, Simpson quadrature)");
        let names = ["eta11", "eta12", "eta13", "eta21", "eta22", "eta23", "eta24", "eta25", "eta26"];
        let values = self.all();
        let shown = if order >= 2 { 9 } else { 3 };
        for (name, v) in names.iter().zip(values).take(shown) {
            let _ = writeln!(out, "  {name:<9}= {v:+.6e}");
        }
        let _ = writeln!(out, "  bc_psi   = {:+.6e}", self.bc_psi);
        let _ = writeln!(out, "  bc_theta = {:+.6e}", self.bc_theta);
        let _ = writeln!(out, "  max_abs  = {:.6e}", self.max_abs(order));
        out
    }
}

/// Composite Simpson rule on a uniform grid with an even number of intervals.
pub fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    assert!(n >= 2 && n % 2 == 0, "Simpson needs an even number of intervals");
    let mut odd = 0.0;
    let mut even = 0.0;
    for k in 1..n {
        if k % 2 == 1 {
            odd += f[k];
        } else {
            even += f[k];
        }
    }
    h / 3.0 * (f[0] + f[n] + 4.0 * odd + 2.0 * even)
}

/// Running integral `F(t_k) = ∫_0^{t_k} f`, fourth-order accurate at every
/// sample (local cubic interpolation on each interval).
pub fn cumulative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len() - 1;
    assert!(n >= 3, "cumulative quadrature needs at least 3 intervals");
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for k in 0..n {
        let piece = if k == 0 {
            9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]
        } else if k == n - 1 {
            f[n - 3] - 5.0 * f[n - 2] + 19.0 * f[n - 1] + 9.0 * f[n]
        } else {
            -f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2]
        };
        acc += h / 24.0 * piece;
        out.push(acc);
    }
    out
}

fn check_grid(traj: &RotationTrajectory) -> Result<()> {
    let n = traj.steps();
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidSteps { steps: n, reason: "quadrature needs an even number of intervals".into() });
    }
    Ok(())
}

/// `(η11, η12, η13)`.
pub fn first_order_residuals(traj: &RotationTrajectory) -> Result<(f64, f64, f64)> {
    check_grid(traj)?;
    let [nx, ny, nz] = column_z(traj);
    let h = traj.step();
    // η11 integrates `a_y sin ψ - (1 - cos ψ) a_x a_z = -n_xz`.
    let neg: Vec<f64> = nx.iter().map(|x| -x).collect();
    Ok((simpson(&neg, h), simpson(&ny, h), simpson(&nz, h)))
}

/// `(η21, …, η26)`.
pub fn second_order_residuals(traj: &RotationTrajectory) -> Result<[f64; 6]> {
    check_grid(traj)?;
    let cols = column_z(traj);
    Ok(second_order_from_columns(&traj.grid, &cols, traj.step()))
}

fn second_order_from_columns(grid: &[f64], cols: &[Vec<f64>; 3], h: f64) -> [f64; 6] {
    let [nx, ny, nz] = cols;
    let moment = |f: &[f64], sign: f64| -> f64 {
        let g: Vec<f64> = f.iter().zip(grid).map(|(v, t)| sign * v * t).collect();
        simpson(&g, h)
    };
    let [fx, fy, fz] = [cumulative(nx, h), cumulative(ny, h), cumulative(nz, h)];
    let outer = |a: &[f64], fb: &[f64], b: &[f64], fa: &[f64]| -> f64 {
        let g: Vec<f64> = (0..a.len()).map(|k| a[k] * fb[k] - b[k] * fa[k]).collect();
        simpson(&g, h)
    };
    [
        moment(nx, -1.0),
        moment(ny, 1.0),
        moment(nz, 1.0),
        outer(ny, &fz, nz, &fy),
        outer(nz, &fx, nx, &fz),
        outer(nx, &fy, ny, &fx),
    ]
}

/// `(ψ(1) - χ, θ(1) - π/2)` with `θ(1) = arccos a_z(1)`.
pub fn boundary_residuals(traj: &RotationTrajectory, chi: f64) -> (f64, f64) {
    let last = traj.last();
    (last.psi - chi, last.axis[2].clamp(-1.0, 1.0).acos() - FRAC_PI_2)
}

/// Every residual of a trajectory against the pulse's own target angle.
pub fn evaluate(traj: &RotationTrajectory) -> Result<ConditionResiduals> {
    check_grid(traj)?;
    let cols = column_z(traj);
    let h = traj.step();
    let neg: Vec<f64> = cols[0].iter().map(|x| -x).collect();
    let [eta21, eta22, eta23, eta24, eta25, eta26] = second_order_from_columns(&traj.grid, &cols, h);
    let (bc_psi, bc_theta) = boundary_residuals(traj, traj.pulse.chi());
    Ok(ConditionResiduals {
        eta11: simpson(&neg, h),
        eta12: simpson(&cols[1], h),
        eta13: simpson(&cols[2], h),
        eta21,
        eta22,
        eta23,
        eta24,
        eta25,
        eta26,
        bc_psi,
        bc_theta,
    })
}

/// Reference evaluation of `∫_0^1 dt1 ∫_0^{t1} dt2 [f(t1) g(t2) - g(t1) f(t2)]`
/// by nested Simpson rules over the kernel itself, `O(N²)`.
///
/// The outer rule uses every second sample, so `N` must be a multiple of 4.
pub fn double_integral_direct(f: &[f64], g: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    assert!(n % 4 == 0, "direct double integral needs N divisible by 4");
    let kernel = |i: usize, j: usize| f[i] * g[j] - g[i] * f[j];
    let inner: Vec<f64> = (0..=n / 2)
        .map(|m| {
            let i = 2 * m;
            if i == 0 {
                return 0.0;
            }
            let row: Vec<f64> = (0..=i).map(|j| kernel(i, j)).collect();
            simpson(&row, h)
        })
        .collect();
    simpson(&inner, 2.0 * h)
}
