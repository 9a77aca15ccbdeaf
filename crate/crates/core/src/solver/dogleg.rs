// SPDX-License-Identifier: Apache-2.0

//! Trust-region dogleg root finder for small square systems.
//!
//! Each accepted step recomputes a central-difference Jacobian; the trial
//! step blends the Gauss-Newton and steepest-descent directions inside the
//! trust radius. Points where the residual cannot be evaluated are treated
//! as rejected steps.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Options {
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
}

/// One line of the iteration log: `iter,max_residual,V0,step_norm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub max_residual: f64,
    pub v0: f64,
    pub step_norm: f64,
}

impl IterationRecord {
    pub fn csv_line(&self) -> String {
        format!("{},{:.6e},{:.10},{:.6e}", self.iter, self.max_residual, self.v0, self.step_norm)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
}

/// Iterations over which the residual norm must shrink by `STALL_FACTOR`.
const STALL_WINDOW: usize = 15;
const STALL_FACTOR: f64 = 0.9;
const MAX_REJECTIONS: usize = 40;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn norm2(v: &DVector<f64>) -> f64 {
    v.dot(v)
}

fn jacobian<F>(f: &F, x: &[f64], fx: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let m = fx.len();
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut probe = x.to_vec();
    for j in 0..n {
        let h = step * x[j].abs().max(1.0);
        probe[j] = x[j] + h;
        let plus = f(&probe);
        probe[j] = x[j] - h;
        let minus = f(&probe);
        probe[j] = x[j];
        let column: Vec<f64> = match (plus, minus) {
            (Ok(p), Ok(q)) => p.iter().zip(&q).map(|(a, b)| (a - b) / (2.0 * h)).collect(),
            (Ok(p), Err(_)) => p.iter().zip(fx).map(|(a, b)| (a - b) / h).collect(),
            (Err(_), Ok(q)) => fx.iter().zip(&q).map(|(a, b)| (a - b) / h).collect(),
            (Err(e), Err(_)) => return Err(e),
        };
        for i in 0..m {
            jac[(i, j)] = column[i];
        }
    }
    Ok(jac)
}

/// Dogleg step for the scaled problem `‖diag·p‖ <= radius`.
fn scaled_step(jac: &DMatrix<f64>, f: &DVector<f64>, diag: &DVector<f64>, radius: f64) -> DVector<f64> {
    let mut js = jac.clone();
    for (j, d) in diag.iter().enumerate() {
        js.column_mut(j).unscale_mut(*d);
    }
    dogleg_step(&js, f, radius).component_div(diag)
}

fn dogleg_step(jac: &DMatrix<f64>, f: &DVector<f64>, radius: f64) -> DVector<f64> {
    let grad = jac.transpose() * f;
    let newton = jac.clone().svd(true, true).solve(&(-f), 1e-14).ok().filter(|p| p.iter().all(|x| x.is_finite()));
    if let Some(pn) = &newton {
        if pn.norm() <= radius {
            return pn.clone();
        }
    }
    let gnorm = grad.norm();
    if gnorm == 0.0 {
        return DVector::zeros(f.len());
    }
    let jg = jac * &grad;
    let alpha = norm2(&grad) / norm2(&jg).max(f64::MIN_POSITIVE);
    let sd = -alpha * &grad;
    let sd_norm = sd.norm();
    let pn = match newton {
        Some(pn) if sd_norm < radius => pn,
        _ => return -(radius / gnorm) * grad,
    };
    // Point on the segment sd → pn at distance `radius`.
    let d = &pn - &sd;
    let a = norm2(&d);
    let b = 2.0 * sd.dot(&d);
    let c = sd_norm * sd_norm - radius * radius;
    let tau = (-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a);
    sd + tau * d
}

/// Solves `f(x) = 0` starting at `x0` until `max|f| <= tol`.
pub(crate) fn solve<F>(f: &F, x0: &[f64], opts: &Options) -> Result<Outcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    if fx.len() != x.len() {
        return Err(Error::Config(format!("{} residuals for {} unknowns", fx.len(), x.len())));
    }
    let mut trace = vec![IterationRecord { iter: 0, max_residual: max_abs(&fx), v0: x[0], step_norm: 0.0 }];
    let mut diag: Option<DVector<f64>> = None;
    let mut radius = 0.0;
    let mut xnorm = 0.0;
    let mut history = vec![norm2(&DVector::from_vec(fx.clone()))];
    let mut iter = 0;

    while max_abs(&fx) > opts.tol && iter < opts.max_iter {
        let jac = match jacobian(f, &x, &fx, opts.fd_step) {
            Ok(j) => j,
            Err(_) => break,
        };
        // Column-norm scaling, never decreasing.
        let cols = DVector::from_iterator(x.len(), jac.column_iter().map(|c| c.norm().max(1e-12)));
        let d = match diag.take() {
            Some(old) => old.zip_map(&cols, f64::max),
            None => {
                let d = cols;
                xnorm = d.component_mul(&DVector::from_column_slice(&x)).norm();
                radius = 0.5 * xnorm.max(1.0);
                d
            }
        };
        let fv = DVector::from_vec(fx.clone());
        let f2 = norm2(&fv);
        let mut accepted = None;
        for _ in 0..MAX_REJECTIONS {
            let p = scaled_step(&jac, &fv, &d, radius);
            let pnorm = p.norm();
            let snorm = p.component_mul(&d).norm();
            if pnorm == 0.0 {
                break;
            }
            let predicted = f2 - norm2(&(&fv + &jac * &p));
            let trial: Vec<f64> = x.iter().zip(p.iter()).map(|(a, b)| a + b).collect();
            let ft = match f(&trial) {
                Ok(v) if v.iter().all(|r| r.is_finite()) => v,
                _ => {
                    radius = 0.25 * snorm;
                    continue;
                }
            };
            let actual = f2 - norm2(&DVector::from_vec(ft.clone()));
            let rho = if predicted > 0.0 { actual / predicted } else { -1.0 };
            if rho < 0.25 {
                radius = 0.25 * snorm;
            } else if rho > 0.75 && snorm > 0.99 * radius {
                radius *= 2.0;
            }
            if rho > 1e-4 {
                accepted = Some((trial, ft, pnorm));
                break;
            }
            if radius < 1e-15 * xnorm.max(1.0) {
                break;
            }
        }
        diag = Some(d);
        let Some((trial, ft, pnorm)) = accepted else { break };
        x = trial;
        fx = ft;
        iter += 1;
        trace.push(IterationRecord { iter, max_residual: max_abs(&fx), v0: x[0], step_norm: pnorm });
        history.push(norm2(&DVector::from_vec(fx.clone())));
        if history.len() > STALL_WINDOW {
            let old = history[history.len() - 1 - STALL_WINDOW];
            if history[history.len() - 1] > STALL_FACTOR * STALL_FACTOR * old {
                break;
            }
        }
    }
    let converged = max_abs(&fx) <= opts.tol;
    Ok(Outcome { x, f: fx, iterations: iter, converged, trace })
}
