//! Evaluation metrics, completeness, Nelder–Mead estimation of the
//! context-invariant models, and repeated random-split cross-validation.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::behavioral;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::math;
use crate::model::{ModelSpec, Params, Structure};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub r2: f64,
}

/// Mean squared error and R² (about the mean empirical frequency).
pub fn evaluate(predictions: &[f64], data: &Dataset) -> Result<Metrics> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if predictions.len() != data.len() {
        return Err(Error::InvalidInput(alloc::format!(
            "{} predictions for {} records",
            predictions.len(),
            data.len()
        )));
    }
    metrics(predictions, &data.targets())
}

pub(crate) fn metrics(predictions: &[f64], targets: &[f64]) -> Result<Metrics> {
    if targets.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let ss_res: f64 = predictions.iter().zip(targets).map(|(p, y)| (p - y) * (p - y)).sum();
    let ss_tot: f64 = targets.iter().map(|y| (y - mean) * (y - mean)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    Ok(Metrics { mse: ss_res / n, r2 })
}

/// Baseline predicting an independent uniform draw per record.
pub fn random_baseline(data: &Dataset, seed: u64) -> Result<Metrics> {
    let mut rng = rng::stream(seed, 0);
    let preds: Vec<f64> = (0..data.len()).map(|_| rng.gen::<f64>()).collect();
    evaluate(&preds, data)
}

/// Baseline predicting 0.5 everywhere.
pub fn constant_baseline(data: &Dataset) -> Result<Metrics> {
    evaluate(&vec![0.5; data.len()], data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletenessBounds {
    pub random_mse: f64,
    pub random_r2: f64,
    pub upper_mse: f64,
    pub upper_r2: f64,
}

impl CompletenessBounds {
    pub fn new(random: Metrics, upper: Metrics) -> Result<Self> {
        let b = CompletenessBounds {
            random_mse: random.mse,
            random_r2: random.r2,
            upper_mse: upper.mse,
            upper_r2: upper.r2,
        };
        if !(b.upper_mse < b.random_mse && b.upper_r2 > b.random_r2) {
            return Err(Error::InvalidInput("upper bound does not beat the random baseline".into()));
        }
        Ok(b)
    }
}

/// Completeness in percent: the position of the model between the random
/// baseline (0) and the upper bound (100), averaged over MSE and R², or from
/// R² alone.
pub fn completeness(model: Metrics, bounds: &CompletenessBounds, r2_only: bool) -> f64 {
    let c_mse = (bounds.random_mse - model.mse) / (bounds.random_mse - bounds.upper_mse);
    let c_r2 = (model.r2 - bounds.random_r2) / (bounds.upper_r2 - bounds.random_r2);
    if r2_only {
        100.0 * c_r2
    } else {
        50.0 * (c_mse + c_r2)
    }
}

/// A context-invariant model with concrete parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub params: Params,
}

impl FittedModel {
    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<f64>> {
        data.records
            .iter()
            .map(|r| behavioral::predict(&self.spec, &self.params, &r.game, r.role))
            .collect()
    }

    pub fn evaluate(&self, data: &Dataset) -> Result<Metrics> {
        evaluate(&self.predict_all(data)?, data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FittedModel,
    pub train_mse: f64,
    pub test_mse: Option<f64>,
    pub test_r2: Option<f64>,
}

impl FitResult {
    pub fn with_test(mut self, test: &Dataset) -> Result<Self> {
        let m = self.model.evaluate(test)?;
        self.test_mse = Some(m.mse);
        self.test_r2 = Some(m.r2);
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Number of Nelder–Mead starts; the first is the supplied initial point.
    pub starts: usize,
    pub nelder_mead: NelderMeadOptions,
    /// Half-width of the uniform jitter (in log space) for extra starts.
    pub jitter: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { starts: 8, nelder_mead: NelderMeadOptions::default(), jitter: 1.5 }
    }
}

/// Maps between model parameters and an unconstrained vector: logs of the
/// positive parameters and softmax logits (first fixed at 0) for mixture
/// weights.
#[derive(Debug, Clone, Copy)]
struct Layout {
    spec: ModelSpec,
}

impl Layout {
    fn dim(&self) -> usize {
        match self.spec.structure {
            Structure::Nash => 0,
            s => {
                1 + usize::from(self.spec.use_belief_noise)
                    + usize::from(self.spec.use_risk)
                    + if s == Structure::LevelMixtureQr { 3 } else { 0 }
            }
        }
    }

    fn encode(&self, p: &Params, spec: &ModelSpec) -> Vec<f64> {
        if self.spec.structure == Structure::Nash {
            return Vec::new();
        }
        let pos = |v: f64, fallback: f64| math::ln(if v > 0.0 && v.is_finite() { v } else { fallback });
        let mut x = vec![pos(p.eta_self, 0.1)];
        if self.spec.use_belief_noise {
            x.push(pos(p.eta_other, 0.1));
        }
        if self.spec.use_risk {
            x.push(pos(p.alpha, 0.01));
        }
        if self.spec.structure == Structure::LevelMixtureQr {
            let w = spec.level_weights.unwrap_or([0.25; 4]);
            let base = math::ln(w[0].max(1e-6));
            for wk in &w[1..] {
                x.push(math::ln(wk.max(1e-6)) - base);
            }
        }
        x
    }

    fn decode(&self, x: &[f64]) -> FittedModel {
        let mut spec = self.spec;
        if spec.structure == Structure::Nash {
            return FittedModel { spec, params: Params::eta(0.0) };
        }
        let mut it = x.iter().copied();
        let eta_self = math::exp(it.next().unwrap_or(0.0));
        let eta_other = if spec.use_belief_noise { math::exp(it.next().unwrap_or(0.0)) } else { eta_self };
        let alpha = if spec.use_risk { math::exp(it.next().unwrap_or(0.0)) } else { 0.0 };
        if spec.structure == Structure::LevelMixtureQr {
            let logits = [0.0, it.next().unwrap_or(0.0), it.next().unwrap_or(0.0), it.next().unwrap_or(0.0)];
            spec.level_weights = Some(softmax4(logits));
        }
        FittedModel { spec, params: Params { eta_self, eta_other, alpha } }
    }
}

pub(crate) fn softmax4(logits: [f64; 4]) -> [f64; 4] {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = logits.map(|l| math::exp(l - m));
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

fn train_mse(model: &FittedModel, data: &Dataset) -> f64 {
    let mut sum = 0.0;
    for r in &data.records {
        match behavioral::predict(&model.spec, &model.params, &r.game, r.role) {
            Ok(p) => sum += (p - r.p_first) * (p - r.p_first),
            Err(_) => return f64::NAN,
        }
    }
    sum / data.len() as f64
}

/// Minimize training MSE of `spec` over its free parameters with multi-start
/// Nelder–Mead in log space. `init` seeds the first start; the others are
/// jittered copies drawn from `seed`.
pub fn nelder_mead_fit(
    spec: &ModelSpec,
    data: &Dataset,
    init: &Params,
    seed: u64,
    opts: &FitOptions,
) -> Result<FitResult> {
    spec.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let layout = Layout { spec: *spec };
    let x0 = layout.encode(init, spec);
    let objective = |x: &[f64]| train_mse(&layout.decode(x), data);

    let starts = if layout.dim() == 0 { 1 } else { opts.starts.max(1) };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in 0..starts {
        let start = if s == 0 {
            x0.clone()
        } else {
            let mut r = rng::stream(seed, s as u64);
            x0.iter().map(|v| v + r.gen_range(-opts.jitter..=opts.jitter)).collect()
        };
        let m = nelder_mead(objective, &start, &opts.nelder_mead)?;
        if best.as_ref().is_none_or(|(_, f)| m.f < *f) {
            best = Some((m.x, m.f));
        }
    }
    let (x, f) = best.ok_or(Error::NonFinite)?;
    Ok(FitResult { model: layout.decode(&x), train_mse: f, test_mse: None, test_r2: None })
}

/// Random split of `0..n` into consecutive parts with the given fractions;
/// the last part takes the remainder.
pub fn partition(n: usize, fractions: &[f64], rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut out = Vec::with_capacity(fractions.len() + 1);
    let mut start = 0;
    for f in fractions {
        let len = math::round((n as f64) * f) as usize;
        let end = (start + len).min(n);
        out.push(idx[start..end].to_vec());
        start = end;
    }
    out.push(idx[start..].to_vec());
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    pub rounds: usize,
    pub test_fraction: f64,
    pub seed: u64,
    pub fit: FitOptions,
    pub init: Params,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            rounds: 10,
            test_fraction: 0.1,
            seed: 0,
            fit: FitOptions::default(),
            init: Params::new(0.1, 0.1, 0.01),
        }
    }
}

/// Mean and standard error of test metrics across rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub mse_mean: f64,
    pub mse_se: f64,
    pub r2_mean: f64,
    pub r2_se: f64,
    pub rounds: Vec<Metrics>,
}

impl CvSummary {
    pub fn from_rounds(rounds: Vec<Metrics>) -> Self {
        let mse: Vec<f64> = rounds.iter().map(|m| m.mse).collect();
        let r2: Vec<f64> = rounds.iter().map(|m| m.r2).collect();
        let se = |v: &[f64]| math::sample_sd(v) / math::sqrt(v.len() as f64);
        CvSummary { mse_mean: math::mean(&mse), mse_se: se(&mse), r2_mean: math::mean(&r2), r2_se: se(&r2), rounds }
    }

    pub fn metrics(&self) -> Metrics {
        Metrics { mse: self.mse_mean, r2: self.r2_mean }
    }
}

/// Test/train split of round `round`: the test part comes first.
pub fn cv_split(n: usize, test_fraction: f64, seed: u64, round: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut r = rng::stream(seed, round as u64);
    let mut parts = partition(n, &[test_fraction], &mut r);
    let train = parts.pop().unwrap_or_default();
    let test = parts.pop().unwrap_or_default();
    if test.is_empty() || train.is_empty() {
        return Err(Error::InsufficientData(alloc::format!(
            "{n} records cannot be split with test fraction {test_fraction}"
        )));
    }
    Ok((test, train))
}

/// Repeated random train/test splits; each round refits on its training part.
pub fn cross_validate(spec: &ModelSpec, data: &Dataset, opts: &CvOptions) -> Result<CvSummary> {
    let mut rounds = Vec::with_capacity(opts.rounds);
    for round in 0..opts.rounds {
        let (test_idx, train_idx) = cv_split(data.len(), opts.test_fraction, opts.seed, round)?;
        let train = data.subset(&train_idx);
        let test = data.subset(&test_idx);
        let fit_seed = rng::substream(opts.seed, round as u64, 1).gen();
        let fit = nelder_mead_fit(spec, &train, &opts.init, fit_seed, &opts.fit)?;
        rounds.push(fit.model.evaluate(&test)?);
    }
    Ok(CvSummary::from_rounds(rounds))
}
