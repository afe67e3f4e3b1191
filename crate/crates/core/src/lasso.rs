//! LASSO by cyclic coordinate descent with an unpenalized intercept.
//!
//! Minimizes `(1/2n) |y - b0 - Z beta|^2 + lambda |beta|_1`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoOptions {
    /// Converged when no coefficient moves more than this in a sweep.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions { tol: 1e-9, max_sweeps: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub r2: f64,
    pub sweeps: usize,
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn check(z: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if z.is_empty() || z.len() != y.len() {
        return Err(Error::InvalidInput(alloc::format!("{} rows for {} targets", z.len(), y.len())));
    }
    let k = z[0].len();
    if z.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidInput("ragged design matrix".into()));
    }
    if z.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(k)
}

struct Centered {
    cols: Vec<Vec<f64>>,
    col_mean: Vec<f64>,
    y: Vec<f64>,
    y_mean: f64,
}

fn center(z: &[Vec<f64>], y: &[f64], k: usize) -> Centered {
    let n = y.len() as f64;
    let y_mean = y.iter().sum::<f64>() / n;
    let mut cols = Vec::with_capacity(k);
    let mut col_mean = Vec::with_capacity(k);
    for j in 0..k {
        let m = z.iter().map(|r| r[j]).sum::<f64>() / n;
        cols.push(z.iter().map(|r| r[j] - m).collect::<Vec<f64>>());
        col_mean.push(m);
    }
    Centered { cols, col_mean, y: y.iter().map(|v| v - y_mean).collect(), y_mean }
}

pub fn lasso_fit(z: &[Vec<f64>], y: &[f64], lambda: f64, opts: &LassoOptions) -> Result<LassoFit> {
    let k = check(z, y)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidInput("lambda must be non-negative".into()));
    }
    let n = y.len() as f64;
    let c = center(z, y, k);
    let norms: Vec<f64> = c.cols.iter().map(|col| col.iter().map(|v| v * v).sum::<f64>() / n).collect();
    let mut beta = vec![0.0; k];
    let mut resid = c.y.clone();
    let mut sweeps = 0;
    loop {
        if sweeps >= opts.max_sweeps {
            let residual = beta.iter().fold(0.0f64, |m, b: &f64| m.max(b.abs()));
            return Err(Error::NoConvergence { iterations: sweeps, residual });
        }
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..k {
            if norms[j] == 0.0 {
                continue;
            }
            let col = &c.cols[j];
            let rho = col.iter().zip(&resid).map(|(x, r)| x * r).sum::<f64>() / n + norms[j] * beta[j];
            let new = soft_threshold(rho, lambda) / norms[j];
            let delta = new - beta[j];
            if delta != 0.0 {
                for (r, x) in resid.iter_mut().zip(col) {
                    *r -= delta * x;
                }
                beta[j] = new;
            }
            max_change = max_change.max(delta.abs());
        }
        if max_change < opts.tol {
            break;
        }
    }
    let intercept = c.y_mean - beta.iter().zip(&c.col_mean).map(|(b, m)| b * m).sum::<f64>();
    let ss_res: f64 = resid.iter().map(|r| r * r).sum();
    let ss_tot: f64 = c.y.iter().map(|v| v * v).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(LassoFit { coef: beta, intercept, r2, sweeps })
}

/// Largest violation of the optimality conditions: `|g_j| <= lambda` for
/// zero coefficients and `g_j = lambda * sign(beta_j)` otherwise, where
/// `g_j = Z_j^T (y - b0 - Z beta) / n`. The intercept condition (mean
/// residual zero) is included.
pub fn kkt_violation(z: &[Vec<f64>], y: &[f64], fit: &LassoFit, lambda: f64) -> Result<f64> {
    let k = check(z, y)?;
    let n = y.len() as f64;
    let resid: Vec<f64> = z
        .iter()
        .zip(y)
        .map(|(row, yi)| yi - fit.intercept - row.iter().zip(&fit.coef).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let mut worst = (resid.iter().sum::<f64>() / n).abs();
    for j in 0..k {
        let g = z.iter().zip(&resid).map(|(row, r)| row[j] * r).sum::<f64>() / n;
        let b = fit.coef[j];
        let v = if b == 0.0 { (g.abs() - lambda).max(0.0) } else { (g - lambda * b.signum()).abs() };
        worst = worst.max(v);
    }
    Ok(worst)
}

/// Smallest lambda at which every coefficient is zero.
pub fn lambda_max(z: &[Vec<f64>], y: &[f64]) -> Result<f64> {
    let k = check(z, y)?;
    let n = y.len() as f64;
    let c = center(z, y, k);
    Ok(c.cols.iter().map(|col| (col.iter().zip(&c.y).map(|(x, r)| x * r).sum::<f64>() / n).abs()).fold(0.0, f64::max))
}
