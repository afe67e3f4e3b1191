//! Feed-forward networks, Adam, early-stopped training and models whose
//! behavioral parameters are supplied per game by networks.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GameRecord};
use crate::error::{Error, Result};
use crate::fitting::{self, Metrics};
use crate::game::Permutation;
use crate::rng;

mod augmented;
mod mlp;

pub use augmented::{AugmentedModel, AugmentedSpec, DirectMlp, QRE_UNROLL};
pub use mlp::{game_input, Cache, Head, Mlp, MlpConfig, INPUT_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(config: AdamConfig, n: usize) -> Self {
        Adam { config, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        self.t += 1;
        let c1 = 1.0 - libm::pow(beta1, f64::from(self.t));
        let c2 = 1.0 - libm::pow(beta2, f64::from(self.t));
        for i in 0..params.len() {
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (libm::sqrt(v_hat) + eps);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub batch: usize,
    /// Epochs between validation checkpoints.
    pub eval_interval: usize,
    /// Stop after this many consecutive validation increases.
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    /// Train on the four row/column relabelings of every training record.
    pub augment: bool,
    /// Train and validation shares; the rest is the test split.
    pub train_fraction: f64,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            adam: AdamConfig::default(),
            batch: 64,
            eval_interval: 100,
            patience: 2,
            max_epochs: 20_000,
            seed: 0,
            augment: true,
            train_fraction: 0.8,
            validation_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let a = &self.adam;
        let ok = a.lr > 0.0
            && a.eps > 0.0
            && (0.0..1.0).contains(&a.beta1)
            && (0.0..1.0).contains(&a.beta2)
            && self.batch > 0
            && self.eval_interval > 0
            && self.patience > 0
            && self.max_epochs > 0
            && self.train_fraction > 0.0
            && self.validation_fraction > 0.0
            && self.train_fraction + self.validation_fraction < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("invalid training configuration".into()))
        }
    }
}

/// A model trained by minibatch gradient descent on game-level MSE.
pub trait Trainable {
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, params: &[f64]);
    /// Mean squared error over `batch`; adds its gradient to `grad`.
    fn loss_and_grad(&self, batch: &[&GameRecord], grad: &mut [f64]) -> f64;
    fn predict_records(&self, records: &[GameRecord]) -> Vec<f64>;

    fn evaluate(&self, data: &Dataset) -> Result<Metrics> {
        fitting::evaluate(&self.predict_records(&data.records), data)
    }
}

/// The record under a relabeling of its game; the target flips when the
/// relabeling swaps the role's own actions.
pub fn permute_record(r: &GameRecord, p: Permutation) -> GameRecord {
    let mut game = r.game.apply_permutation(p);
    let suffix = match (p.swap_rows, p.swap_cols) {
        (false, false) => "",
        (true, false) => "~r",
        (false, true) => "~c",
        (true, true) => "~rc",
    };
    game.id.push_str(suffix);
    let p_first = if p.flips(r.role) { 1.0 - r.p_first } else { r.p_first };
    GameRecord { game, p_first, ..r.clone() }
}

/// Every record followed by its row-swapped, column-swapped and doubly
/// swapped copies.
pub fn augment_dataset(data: &Dataset) -> Dataset {
    let records = data
        .records
        .iter()
        .flat_map(|r| [Permutation::IDENTITY, Permutation::ROWS, Permutation::COLS, Permutation::BOTH].map(|p| permute_record(r, p)))
        .collect();
    Dataset { records }
}

/// Random train / validation / test split of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_indices(n: usize, cfg: &TrainConfig) -> Result<Split> {
    let mut r = rng::stream(cfg.seed, 0x5eed);
    let mut parts = fitting::partition(n, &[cfg.train_fraction, cfg.validation_fraction], &mut r);
    let test = parts.pop().unwrap_or_default();
    let validation = parts.pop().unwrap_or_default();
    let train = parts.pop().unwrap_or_default();
    if train.is_empty() || validation.is_empty() {
        return Err(Error::InsufficientData(format!("{n} records are too few to split")));
    }
    Ok(Split { train, validation, test })
}

/// One validation checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: usize,
    /// Epoch whose parameters were kept (lowest validation error).
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub history: Vec<Checkpoint>,
    pub train: Metrics,
    pub validation: Metrics,
    pub test: Option<Metrics>,
}

/// Minibatch Adam on `train` with validation checkpoints every
/// `eval_interval` epochs. Training stops after `patience` consecutive
/// increases of the validation error; the parameters with the lowest
/// validation error are restored.
pub fn train_model<M: Trainable>(
    model: &mut M,
    train: &Dataset,
    validation: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if train.is_empty() || validation.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let fit_set = if cfg.augment { augment_dataset(train) } else { train.clone() };
    let mut params = model.params();
    let mut adam = Adam::new(cfg.adam, params.len());
    let mut order: Vec<usize> = (0..fit_set.len()).collect();
    let mut shuffle = rng::stream(cfg.seed, 1);
    let mut grad = vec![0.0; params.len()];

    let mut best = (model.evaluate(validation)?.mse, 0usize, params.clone());
    let mut history = vec![Checkpoint { epoch: 0, train_loss: model.evaluate(&fit_set)?.mse, validation_mse: best.0 }];
    let mut previous = best.0;
    let mut increases = 0;
    let mut stopped_early = false;
    let mut epoch = 0;
    while epoch < cfg.max_epochs {
        epoch += 1;
        order.shuffle(&mut shuffle);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch) {
            let batch: Vec<&GameRecord> = chunk.iter().map(|&i| &fit_set.records[i]).collect();
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = model.loss_and_grad(&batch, &mut grad);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch });
            }
            loss_sum += loss * chunk.len() as f64;
            adam.step(&mut params, &grad);
            model.set_params(&params);
        }
        if epoch % cfg.eval_interval == 0 {
            let val = model.evaluate(validation)?.mse;
            if !val.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            history.push(Checkpoint { epoch, train_loss: loss_sum / fit_set.len() as f64, validation_mse: val });
            if val < best.0 {
                best = (val, epoch, params.clone());
            }
            increases = if val > previous { increases + 1 } else { 0 };
            previous = val;
            if increases >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }
    model.set_params(&best.2);
    Ok(TrainReport {
        epochs: epoch,
        best_epoch: best.1,
        stopped_early,
        history,
        train: model.evaluate(train)?,
        validation: model.evaluate(validation)?,
        test: None,
    })
}

/// Split `data`, train on the training part with early stopping on the
/// validation part, and report test metrics.
pub fn train_split<M: Trainable>(model: &mut M, data: &Dataset, cfg: &TrainConfig) -> Result<(Split, TrainReport)> {
    let split = split_indices(data.len(), cfg)?;
    let mut report = train_model(model, &data.subset(&split.train), &data.subset(&split.validation), cfg)?;
    if !split.test.is_empty() {
        report.test = Some(model.evaluate(&data.subset(&split.test))?);
    }
    Ok((split, report))
}

/// Direct network predicting choice probabilities.
pub fn train_direct_mlp(data: &Dataset, mlp: MlpConfig, cfg: &TrainConfig) -> Result<(DirectMlp, Split, TrainReport)> {
    let mut model = DirectMlp::new(mlp, cfg.seed)?;
    let (split, report) = train_split(&mut model, data, cfg)?;
    Ok((model, split, report))
}

/// Behavioral model with network-supplied slots; scalar parameters are
/// trained jointly by gradient.
pub fn train_augmented(
    spec: &AugmentedSpec,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<(AugmentedModel, Split, TrainReport)> {
    let mut model = AugmentedModel::new(spec.clone(), cfg.seed)?;
    let (split, report) = train_split(&mut model, data, cfg)?;
    Ok((model, split, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub coordinates: usize,
    pub max_abs_grad: f64,
}

/// Finite-difference step for [`grad_check`].
pub const FD_STEP: f64 = 1e-5;

/// Compare analytic gradients of the batch loss with central differences on
/// `coordinates` parameter indices: all indices listed in `always`, then
/// random ones. Relative error uses `max(|analytic|, |numeric|, 1e-6)`.
pub fn grad_check<M: Trainable + Clone>(
    model: &M,
    records: &[GameRecord],
    coordinates: usize,
    always: &[usize],
    seed: u64,
) -> GradCheck {
    let batch: Vec<&GameRecord> = records.iter().collect();
    let base = model.params();
    let mut grad = vec![0.0; base.len()];
    model.loss_and_grad(&batch, &mut grad);

    let mut picks: Vec<usize> = always.iter().copied().filter(|&i| i < base.len()).collect();
    let mut r = rng::stream(seed, 0);
    while picks.len() < coordinates.min(base.len()) {
        let i = r.gen_range(0..base.len());
        if !picks.contains(&i) {
            picks.push(i);
        }
    }

    let mut probe = model.clone();
    let mut scratch = vec![0.0; base.len()];
    let mut p = base.clone();
    let mut max_rel: f64 = 0.0;
    let mut max_abs: f64 = 0.0;
    for &i in &picks {
        p[i] = base[i] + FD_STEP;
        probe.set_params(&p);
        let up = probe.loss_and_grad(&batch, &mut scratch);
        p[i] = base[i] - FD_STEP;
        probe.set_params(&p);
        let down = probe.loss_and_grad(&batch, &mut scratch);
        p[i] = base[i];
        let fd = (up - down) / (2.0 * FD_STEP);
        let a = grad[i];
        max_rel = max_rel.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-6));
        max_abs = max_abs.max(a.abs());
    }
    GradCheck { max_rel_error: max_rel, coordinates: picks.len(), max_abs_grad: max_abs }
}
