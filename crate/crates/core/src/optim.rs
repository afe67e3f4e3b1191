//! Nelder–Mead simplex minimization.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop once every vertex is within `xatol` (max norm) of the best one...
    pub xatol: f64,
    /// ...and every vertex value within `fatol` of the best value.
    pub fatol: f64,
    /// Offset of the initial simplex vertices along each axis.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { max_iter: 5_000, xatol: 1e-8, fatol: 1e-8, initial_step: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimize `f` from `x0`. A zero-dimensional problem evaluates `f` once.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| -> Result<f64> {
        evaluations += 1;
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite)
        }
    };
    if n == 0 {
        let v = eval(x0)?;
        return Ok(Minimum { x: Vec::new(), f: v, iterations: 0, evaluations: 1, converged: true });
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)?));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let v = eval(&x)?;
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    while iterations < opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best_x, best_f) = (&simplex[0].0, simplex[0].1);
        let spread_x = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(best_x).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread_f = simplex[1..].iter().map(|(_, v)| (v - best_f).abs()).fold(0.0, f64::max);
        if spread_x <= opts.xatol && spread_f <= opts.fatol {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst_f = simplex[n].1;
        let second_worst_f = simplex[n - 1].1;

        let along = |t: f64, out: &mut Vec<f64>, worst: &[f64], centroid: &[f64]| {
            for i in 0..out.len() {
                out[i] = centroid[i] + t * (centroid[i] - worst[i]);
            }
        };

        along(REFLECT, &mut trial, &simplex[n].0, &centroid);
        let reflected = trial.clone();
        let f_r = eval(&reflected)?;
        if f_r < best_f {
            along(EXPAND, &mut trial, &simplex[n].0, &centroid);
            let f_e = eval(&trial)?;
            simplex[n] = if f_e < f_r { (trial.clone(), f_e) } else { (reflected, f_r) };
            continue;
        }
        if f_r < second_worst_f {
            simplex[n] = (reflected, f_r);
            continue;
        }
        // contraction: outside if the reflection helped at all, else inside
        let (t, target) = if f_r < worst_f { (CONTRACT, f_r) } else { (-CONTRACT, worst_f) };
        along(t, &mut trial, &simplex[n].0, &centroid);
        let f_c = eval(&trial)?;
        if f_c <= target {
            simplex[n] = (trial.clone(), f_c);
            continue;
        }
        let best = simplex[0].0.clone();
        for (x, v) in simplex[1..].iter_mut() {
            for (xi, bi) in x.iter_mut().zip(&best) {
                *xi = bi + SHRINK * (*xi - bi);
            }
            *v = eval(x)?;
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Ok(Minimum { x, f, iterations, evaluations, converged })
}
