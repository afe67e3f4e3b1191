//! Structural game features and the linear complexity index built on them.
//!
//! "Self" is the row player and "other" the column player; compute on
//! [`GameMatrix::perspective`] for the column player's view.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AsPayoffs, Payoffs, Role};
use crate::lasso::{self, LassoFit, LassoOptions};
use crate::math;
use crate::solvers;

fn sq(x: f64) -> f64 {
    x * x
}

pub const FEATURE_COUNT: usize = 18;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "DominantSolvable_self",
    "DominantSolvable_other",
    "Dissimilarity_self",
    "Dissimilarity_other",
    "LevelIterRational",
    "NumPSNE",
    "NumMSNE",
    "PayoffDomEquilibrium",
    "PayoffDomNonEquilibrium",
    "ParetoDomEquilibrium",
    "PureMotives",
    "Max_self",
    "Max_other",
    "PayoffVar_self",
    "PayoffVar_other",
    "NonZeroSum",
    "Inequality",
    "Asymmetry",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct FeatureVector {
    pub DominantSolvable_self: f64,
    pub DominantSolvable_other: f64,
    pub Dissimilarity_self: f64,
    pub Dissimilarity_other: f64,
    pub LevelIterRational: f64,
    pub NumPSNE: f64,
    pub NumMSNE: f64,
    pub PayoffDomEquilibrium: f64,
    pub PayoffDomNonEquilibrium: f64,
    pub ParetoDomEquilibrium: f64,
    pub PureMotives: f64,
    pub Max_self: f64,
    pub Max_other: f64,
    pub PayoffVar_self: f64,
    pub PayoffVar_other: f64,
    pub NonZeroSum: f64,
    pub Inequality: f64,
    pub Asymmetry: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.DominantSolvable_self,
            self.DominantSolvable_other,
            self.Dissimilarity_self,
            self.Dissimilarity_other,
            self.LevelIterRational,
            self.NumPSNE,
            self.NumMSNE,
            self.PayoffDomEquilibrium,
            self.PayoffDomNonEquilibrium,
            self.ParetoDomEquilibrium,
            self.PureMotives,
            self.Max_self,
            self.Max_other,
            self.PayoffVar_self,
            self.PayoffVar_other,
            self.NonZeroSum,
            self.Inequality,
            self.Asymmetry,
        ]
    }

    pub fn from_array(v: [f64; FEATURE_COUNT]) -> Self {
        FeatureVector {
            DominantSolvable_self: v[0],
            DominantSolvable_other: v[1],
            Dissimilarity_self: v[2],
            Dissimilarity_other: v[3],
            LevelIterRational: v[4],
            NumPSNE: v[5],
            NumMSNE: v[6],
            PayoffDomEquilibrium: v[7],
            PayoffDomNonEquilibrium: v[8],
            ParetoDomEquilibrium: v[9],
            PureMotives: v[10],
            Max_self: v[11],
            Max_other: v[12],
            PayoffVar_self: v[13],
            PayoffVar_other: v[14],
            NonZeroSum: v[15],
            Inequality: v[16],
            Asymmetry: v[17],
        }
    }

    /// The same game described from the other player's seat.
    pub fn swap_roles(&self) -> Self {
        FeatureVector {
            DominantSolvable_self: self.DominantSolvable_other,
            DominantSolvable_other: self.DominantSolvable_self,
            Dissimilarity_self: self.Dissimilarity_other,
            Dissimilarity_other: self.Dissimilarity_self,
            Max_self: self.Max_other,
            Max_other: self.Max_self,
            PayoffVar_self: self.PayoffVar_other,
            PayoffVar_other: self.PayoffVar_self,
            Inequality: -self.Inequality,
            ..*self
        }
    }
}

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn max4(v: [f64; 4]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Average ranks (1-based) of four values.
fn ranks(v: [f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for i in 0..4 {
        let below = v.iter().filter(|&&x| x < v[i]).count() as f64;
        let equal = v.iter().filter(|&&x| x == v[i]).count() as f64;
        out[i] = below + (equal + 1.0) / 2.0;
    }
    out
}

/// Spearman rank correlation of the two players' payoffs over the four
/// cells; `None` when either player's payoffs are all equal.
pub fn payoff_rank_correlation(g: &impl AsPayoffs) -> Option<f64> {
    let p = g.payoffs();
    let (rx, ry) = (ranks(p.row), ranks(p.col));
    let (mx, my) = (math::mean(&rx), math::mean(&ry));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..4 {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / math::sqrt(sxx * syy))
    }
}

/// All 18 features of a game.
pub fn compute_features(g: &impl AsPayoffs) -> FeatureVector {
    let p: Payoffs = g.payoffs();
    let [a, b, c, d] = p.row;
    let [x, y, z, w] = p.col;
    let mu_up = (a + b) / 2.0;
    let mu_down = (c + d) / 2.0;
    let mu_left = (x + z) / 2.0;
    let mu_right = (y + w) / 2.0;

    let pure = solvers::pure_nash(&p);
    let cells: Vec<usize> =
        pure.iter().map(|e| crate::game::cell_index(e.row_action, e.col_action)).collect();
    let (max_row, max_col) = (max4(p.row), max4(p.col));

    let payoff_dom_eq = cells.iter().any(|&i| p.row[i] == max_row && p.col[i] == max_col);
    let payoff_dom_non_eq = !cells.is_empty()
        && (0..4).any(|i| {
            !cells.contains(&i) && cells.iter().all(|&e| p.row[i] > p.row[e] && p.col[i] > p.col[e])
        });
    let pareto_dom_eq = match cells.len() {
        0 => false,
        1 => true,
        _ => cells.iter().any(|&e| {
            cells.iter().filter(|&&f| f != e).all(|&f| {
                p.row[e] >= p.row[f] && p.col[e] >= p.col[f] && (p.row[e] > p.row[f] || p.col[e] > p.col[f])
            })
        }),
    };
    let pure_motives = payoff_rank_correlation(&p).is_some_and(|r| (r.abs() - 1.0).abs() < 1e-12);

    FeatureVector {
        DominantSolvable_self: flag(solvers::dominant_strategy(&p, Role::Row).is_some()),
        DominantSolvable_other: flag(solvers::dominant_strategy(&p, Role::Col).is_some()),
        Dissimilarity_self: (a - c).abs() / 2.0 + (b - d).abs() / 2.0 - (mu_up - mu_down).abs(),
        Dissimilarity_other: (x - y).abs() / 2.0 + (z - w).abs() / 2.0 - (mu_left - mu_right).abs(),
        LevelIterRational: f64::from(solvers::iterative_rationality_level(&p)),
        NumPSNE: pure.len() as f64,
        NumMSNE: flag(solvers::mixed_nash(&p).interior().is_some()),
        PayoffDomEquilibrium: flag(payoff_dom_eq),
        PayoffDomNonEquilibrium: flag(payoff_dom_non_eq),
        ParetoDomEquilibrium: flag(pareto_dom_eq),
        PureMotives: flag(pure_motives),
        Max_self: max_row,
        Max_other: max_col,
        PayoffVar_self: (sq(a - mu_up) + sq(b - mu_up) + sq(c - mu_down) + sq(d - mu_down))
            / 4.0,
        PayoffVar_other: (sq(x - mu_left) + sq(z - mu_left) + sq(y - mu_right) + sq(w - mu_right))
            / 4.0,
        NonZeroSum: (a - c + x - z).abs() + (a - b + x - y).abs() + (c - d + z - w).abs() + (b - d + y - w).abs(),
        Inequality: max_row - max_col,
        Asymmetry: ((a - x).abs() + (b - z).abs() + (c - y).abs() + (d - w).abs()) / 4.0,
    }
}

/// Column means and population standard deviations frozen at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// 1 for constant columns.
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InsufficientData("need at least 2 rows to normalize".into()));
        }
        let k = rows[0].len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidInput("ragged feature matrix".into()));
        }
        let mut mean = Vec::with_capacity(k);
        let mut sd = Vec::with_capacity(k);
        for j in 0..k {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let s = math::population_sd(&col);
            mean.push(math::mean(&col));
            sd.push(if s > 0.0 { s } else { 1.0 });
        }
        Ok(Standardizer { mean, sd })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(self.mean.iter().zip(&self.sd)).map(|(v, (m, s))| (v - m) / s).collect()
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

/// Column-wise z-scores and the statistics used.
pub fn normalize_features(rows: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Standardizer)> {
    let s = Standardizer::fit(rows)?;
    Ok((s.transform(rows), s))
}

/// Reference coefficients (on standardized features, feature order) for the
/// negated self precision, with intercept [`REFERENCE_INTERCEPT`].
pub const REFERENCE_WEIGHTS: [f64; FEATURE_COUNT] = [
    0.0, 0.0, 0.28, 0.0, 0.38, 0.0, 0.0, -0.80, 0.0, 0.0, 0.0, 0.30, 0.0, 0.40, 0.0, 0.0, 0.85, -0.09,
];
pub const REFERENCE_INTERCEPT: f64 = -9.28;

/// Sparse linear score over standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityIndex {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub standardizer: Standardizer,
    /// In-sample R² of the fit, when fitted.
    pub r2: Option<f64>,
    pub lambda: Option<f64>,
}

impl ComplexityIndex {
    /// Reference weights on the given normalization statistics.
    pub fn reference(standardizer: Standardizer) -> Self {
        ComplexityIndex {
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            weights: REFERENCE_WEIGHTS.to_vec(),
            intercept: REFERENCE_INTERCEPT,
            standardizer,
            r2: None,
            lambda: None,
        }
    }

    pub fn score_row(&self, features: &[f64]) -> f64 {
        let z = self.standardizer.transform_row(features);
        self.intercept + z.iter().zip(&self.weights).map(|(z, w)| z * w).sum::<f64>()
    }

    pub fn score(&self, f: &FeatureVector) -> f64 {
        self.score_row(&f.to_array())
    }

    /// Names and weights of the features with nonzero weight.
    pub fn selected(&self) -> Vec<(&str, f64)> {
        self.feature_names
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w != 0.0)
            .map(|(n, w)| (n.as_str(), *w))
            .collect()
    }
}

/// Complexity score of a game.
pub fn complexity_index(g: &impl AsPayoffs, index: &ComplexityIndex) -> f64 {
    index.score(&compute_features(g))
}

/// Standardize features and fit a LASSO to `target` (typically the negated
/// per-game self precision).
pub fn fit_complexity_index(
    features: &[FeatureVector],
    target: &[f64],
    lambda: f64,
    opts: &LassoOptions,
) -> Result<(ComplexityIndex, LassoFit)> {
    let rows: Vec<Vec<f64>> = features.iter().map(|f| f.to_array().to_vec()).collect();
    let (z, standardizer) = normalize_features(&rows)?;
    let fit = lasso::lasso_fit(&z, target, lambda, opts)?;
    let index = ComplexityIndex {
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        weights: fit.coef.clone(),
        intercept: fit.intercept,
        standardizer,
        r2: Some(fit.r2),
        lambda: Some(lambda),
    };
    Ok((index, fit))
}
