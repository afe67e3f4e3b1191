//! Psychometric tables: empirical choice frequency against the level-1
//! expected-utility gap, split at the median of a per-record score.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::behavioral::level1_delta_eu;
use crate::data::GameRecord;
use crate::error::{Error, Result};
use crate::math;
use crate::optim::{nelder_mead, NelderMeadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    /// Score at or below the median.
    Low,
    High,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Low => "low",
            Group::High => "high",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub group: Group,
    pub bin: usize,
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
    pub mean_delta_eu: f64,
    pub mean_p: f64,
    /// Standard error of `mean_p`; absent with fewer than two records.
    pub se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsychometricTable {
    pub median: f64,
    pub bins: Vec<Bin>,
    /// Least-squares slope of `p = logistic(slope * delta_eu)` per group.
    pub low_slope: f64,
    pub high_slope: f64,
}

/// Fit `p ≈ logistic(slope * x)` by least squares.
pub fn logistic_slope(x: &[f64], p: &[f64]) -> Result<f64> {
    if x.is_empty() || x.len() != p.len() {
        return Err(Error::EmptyDataset);
    }
    let loss = |v: &[f64]| {
        x.iter().zip(p).map(|(x, p)| {
            let e = math::logistic(v[0] * x) - p;
            e * e
        }).sum::<f64>()
    };
    let opts = NelderMeadOptions { xatol: 1e-10, fatol: 1e-14, initial_step: 0.1, ..Default::default() };
    Ok(nelder_mead(loss, &[0.1], &opts)?.x[0])
}

/// Bin records by the level-1 expected-utility gap (`n_bins` equal-width
/// bins over the pooled range) separately for records whose `score` is at
/// or below its median and above it.
pub fn psychometric_bins(records: &[GameRecord], score: &[f64], n_bins: usize, alpha: f64) -> Result<PsychometricTable> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if records.len() != score.len() || n_bins == 0 {
        return Err(Error::InvalidInput("one score per record and at least one bin".into()));
    }
    let median = math::median(score);
    let delta: Vec<f64> = records.iter().map(|r| level1_delta_eu(&r.game, r.role, alpha)).collect();
    let lo = delta.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = delta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / n_bins as f64 } else { 1.0 };
    let bin_of = |d: f64| (((d - lo) / width) as usize).min(n_bins - 1);

    let mut bins = Vec::new();
    let mut slopes = [0.0; 2];
    for (gi, group) in [Group::Low, Group::High].into_iter().enumerate() {
        let members: Vec<usize> = (0..records.len())
            .filter(|&i| (score[i] <= median) == (group == Group::Low))
            .collect();
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); n_bins];
        for &i in &members {
            buckets[bin_of(delta[i])].push(i);
        }
        for (b, idx) in buckets.iter().enumerate() {
            if idx.is_empty() {
                continue;
            }
            let ps: Vec<f64> = idx.iter().map(|&i| records[i].p_first).collect();
            let ds: Vec<f64> = idx.iter().map(|&i| delta[i]).collect();
            bins.push(Bin {
                group,
                bin: b,
                lower: lo + width * b as f64,
                upper: lo + width * (b + 1) as f64,
                n: idx.len(),
                mean_delta_eu: math::mean(&ds),
                mean_p: math::mean(&ps),
                se: (idx.len() > 1).then(|| math::sample_sd(&ps) / math::sqrt(idx.len() as f64)),
            });
        }
        if !members.is_empty() {
            let xs: Vec<f64> = members.iter().map(|&i| delta[i]).collect();
            let ps: Vec<f64> = members.iter().map(|&i| records[i].p_first).collect();
            slopes[gi] = logistic_slope(&xs, &ps)?;
        }
    }
    Ok(PsychometricTable { median, bins, low_slope: slopes[0], high_slope: slopes[1] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{GameMatrix, Role};

    #[test]
    fn slope_recovery() {
        let x: Vec<f64> = (-20..=20).map(f64::from).collect();
        let p: Vec<f64> = x.iter().map(|v| math::logistic(0.3 * v)).collect();
        assert!((logistic_slope(&x, &p).unwrap() - 0.3).abs() < 1e-6);
    }

    #[test]
    fn single_record_bins_have_no_se() {
        let g = GameMatrix::new("g", [30, 10, 40, 20], [30, 40, 10, 20]).unwrap();
        let r = GameRecord::new(g, Role::Row, 10, 0.3);
        let t = psychometric_bins(&[r], &[1.0], 3, 0.0).unwrap();
        assert_eq!(t.bins.len(), 1);
        assert_eq!(t.bins[0].se, None);
    }
}
