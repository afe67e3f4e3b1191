//! The direct choice network and behavioral models with network slots.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::mlp::{game_input, Cache, Head, Mlp, MlpConfig, INPUT_DIM};
use super::Trainable;
use crate::behavioral::{level_predictions, qre_unrolled};
use crate::data::GameRecord;
use crate::error::{Error, Result};
use crate::fitting::softmax4;
use crate::game::{AsPayoffs, Payoffs, Role};
use crate::math;
use crate::model::{ModelLabel, ModelSpec, NeuralSlots, Params, Structure};
use crate::scalar::Dual;

/// Damped QRE iterations differentiated through in training.
pub const QRE_UNROLL: usize = 50;

fn batch_inputs(records: &[&GameRecord]) -> Vec<f64> {
    let mut x = Vec::with_capacity(records.len() * INPUT_DIM);
    for r in records {
        x.extend_from_slice(&game_input(&r.game, r.role));
    }
    x
}

/// Network that maps a game straight to `p(first action)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectMlp {
    pub net: Mlp,
}

impl DirectMlp {
    pub fn new(config: MlpConfig, seed: u64) -> Result<Self> {
        if config.head != Head::Probability {
            return Err(Error::InvalidSpec("the direct network needs a probability head".into()));
        }
        Ok(DirectMlp { net: Mlp::new(config, seed) })
    }

    pub fn predict(&self, g: &impl AsPayoffs, role: Role) -> f64 {
        self.net.predict(&game_input(g, role))[0]
    }
}

impl Trainable for DirectMlp {
    fn params(&self) -> Vec<f64> {
        self.net.params.clone()
    }

    fn set_params(&mut self, params: &[f64]) {
        self.net.params.copy_from_slice(params);
    }

    fn loss_and_grad(&self, batch: &[&GameRecord], grad: &mut [f64]) -> f64 {
        let n = batch.len() as f64;
        let cache = self.net.forward(&batch_inputs(batch), batch.len());
        let mut d_raw = vec![0.0; batch.len() * 2];
        let mut loss = 0.0;
        for (i, (raw, r)) in cache.raw().chunks_exact(2).zip(batch).enumerate() {
            let out = Head::Probability.forward(raw);
            let err = out[0] - r.p_first;
            loss += err * err;
            Head::Probability.backward(raw, &out, &[2.0 * err / n, 0.0], &mut d_raw[2 * i..2 * i + 2]);
        }
        self.net.backward(&cache, &d_raw, grad);
        loss / n
    }

    fn predict_records(&self, records: &[GameRecord]) -> Vec<f64> {
        let refs: Vec<&GameRecord> = records.iter().collect();
        self.net.predict_batch(&batch_inputs(&refs), refs.len()).into_iter().map(|o| o[0]).collect()
    }
}

/// A behavioral model whose marked slots come from networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedSpec {
    pub base: ModelSpec,
    pub slots: NeuralSlots,
    /// Hidden layer sizes of every slot network.
    pub hidden: Vec<usize>,
}

impl AugmentedSpec {
    pub fn new(base: ModelSpec, slots: NeuralSlots, hidden: &[usize]) -> Result<Self> {
        let spec = AugmentedSpec { base, slots, hidden: hidden.to_vec() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_label(label: &ModelLabel, hidden: &[usize]) -> Result<Self> {
        match label {
            ModelLabel::Behavioral { spec, neural } => AugmentedSpec::new(*spec, *neural, hidden),
            _ => Err(Error::InvalidSpec(alloc::format!("{label} is not a behavioral model"))),
        }
    }

    pub fn label(&self) -> ModelLabel {
        ModelLabel::Behavioral { spec: self.base, neural: self.slots }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.base.structure == Structure::Nash {
            return Err(Error::InvalidSpec("Nash has no parameters to learn".into()));
        }
        if self.slots.eta_other && !self.base.use_belief_noise {
            return Err(Error::InvalidSpec("a neural belief slot needs belief noise".into()));
        }
        if self.slots.level_mixture && self.base.structure != Structure::LevelMixtureQr {
            return Err(Error::InvalidSpec("a neural level slot needs the level mixture".into()));
        }
        Ok(())
    }

    fn has_scalar_eta_self(&self) -> bool {
        !self.slots.eta_self
    }
    fn has_scalar_eta_other(&self) -> bool {
        self.base.use_belief_noise && !self.slots.eta_other
    }
    fn has_scalar_levels(&self) -> bool {
        self.base.structure == Structure::LevelMixtureQr && !self.slots.level_mixture
    }
}

/// Per-game parameter values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotValues {
    pub params: Params,
    pub level_weights: Option<[f64; 4]>,
}

/// Trainable behavioral model: slot networks plus scalar parameters (kept
/// in log space, mixture weights as logits relative to level 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedModel {
    pub spec: AugmentedSpec,
    pub eta_self_net: Option<Mlp>,
    pub eta_other_net: Option<Mlp>,
    pub level_net: Option<Mlp>,
    pub log_eta_self: f64,
    pub log_eta_other: f64,
    pub log_alpha: f64,
    pub level_logits: [f64; 3],
}

fn inverse_softplus(y: f64) -> f64 {
    math::ln(math::expm1(y))
}

struct Forward {
    x_batch: usize,
    caches: [Option<Cache>; 3],
}

impl AugmentedModel {
    pub fn new(spec: AugmentedSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let init = Params::new(0.1, 0.1, 0.01);
        let positive = |stream: u64| {
            let mut net = Mlp::new(MlpConfig::with_hidden(Head::Positive, &spec.hidden), seed ^ stream);
            net.set_output_bias(&[inverse_softplus(init.eta_self)]);
            net
        };
        Ok(AugmentedModel {
            eta_self_net: spec.slots.eta_self.then(|| positive(0x11)),
            eta_other_net: spec.slots.eta_other.then(|| positive(0x22)),
            level_net: spec
                .slots
                .level_mixture
                .then(|| Mlp::new(MlpConfig::with_hidden(Head::Simplex4, &spec.hidden), seed ^ 0x33)),
            log_eta_self: math::ln(init.eta_self),
            log_eta_other: math::ln(init.eta_other),
            log_alpha: math::ln(init.alpha),
            level_logits: [0.0; 3],
            spec,
        })
    }

    /// Set the scalar parameters (ignored where a network supplies the slot).
    pub fn with_scalars(mut self, params: Params, level_weights: Option<[f64; 4]>) -> Self {
        self.log_eta_self = math::ln(params.eta_self);
        self.log_eta_other = math::ln(params.eta_other);
        self.log_alpha = math::ln(params.alpha);
        if let Some(w) = level_weights {
            let base = math::ln(w[0]);
            self.level_logits = [math::ln(w[1]) - base, math::ln(w[2]) - base, math::ln(w[3]) - base];
        }
        self
    }

    fn nets(&self) -> [Option<&Mlp>; 3] {
        [self.eta_self_net.as_ref(), self.eta_other_net.as_ref(), self.level_net.as_ref()]
    }

    fn net_len(&self) -> usize {
        self.nets().iter().flatten().map(|n| n.params.len()).sum()
    }

    /// Indices of the scalar parameters in [`Trainable::params`].
    pub fn scalar_indices(&self) -> Vec<usize> {
        let start = self.net_len();
        (start..start + self.scalars().len()).collect()
    }

    fn scalars(&self) -> Vec<f64> {
        let s = &self.spec;
        let mut out = Vec::new();
        if s.has_scalar_eta_self() {
            out.push(self.log_eta_self);
        }
        if s.has_scalar_eta_other() {
            out.push(self.log_eta_other);
        }
        if s.base.use_risk {
            out.push(self.log_alpha);
        }
        if s.has_scalar_levels() {
            out.extend_from_slice(&self.level_logits);
        }
        out
    }

    fn set_scalars(&mut self, v: &[f64]) {
        let mut it = v.iter().copied();
        if self.spec.has_scalar_eta_self() {
            self.log_eta_self = it.next().unwrap_or(self.log_eta_self);
        }
        if self.spec.has_scalar_eta_other() {
            self.log_eta_other = it.next().unwrap_or(self.log_eta_other);
        }
        if self.spec.base.use_risk {
            self.log_alpha = it.next().unwrap_or(self.log_alpha);
        }
        if self.spec.has_scalar_levels() {
            for l in self.level_logits.iter_mut() {
                *l = it.next().unwrap_or(*l);
            }
        }
    }

    fn forward(&self, records: &[&GameRecord]) -> Forward {
        let x = batch_inputs(records);
        let n = records.len();
        let caches = self.nets().map(|net| net.map(|m| m.forward(&x, n)));
        Forward { x_batch: n, caches }
    }

    fn slot_values(&self, fwd: &Forward, i: usize) -> SlotValues {
        let head = |k: usize| -> Option<Vec<f64>> {
            let net = self.nets()[k]?;
            let d = net.config.head.raw_dim();
            let raw = &fwd.caches[k].as_ref()?.raw()[i * d..(i + 1) * d];
            Some(net.config.head.forward(raw))
        };
        let eta_self = head(0).map_or(math::exp(self.log_eta_self), |o| o[0]);
        let eta_other = if !self.spec.base.use_belief_noise {
            eta_self
        } else {
            head(1).map_or(math::exp(self.log_eta_other), |o| o[0])
        };
        let alpha = if self.spec.base.use_risk { math::exp(self.log_alpha) } else { 0.0 };
        let level_weights = (self.spec.base.structure == Structure::LevelMixtureQr).then(|| {
            head(2).map_or_else(
                || softmax4([0.0, self.level_logits[0], self.level_logits[1], self.level_logits[2]]),
                |o| [o[0], o[1], o[2], o[3]],
            )
        });
        SlotValues { params: Params { eta_self, eta_other, alpha }, level_weights }
    }

    /// Prediction with derivatives in `(eta_self, eta_other, alpha)` and the
    /// per-level predictions of a mixture.
    fn predict_dual(&self, p: &Payoffs, role: Role, s: &SlotValues) -> (Dual<3>, [f64; 4]) {
        let base = &self.spec.base;
        let es = Dual::<3>::variable(s.params.eta_self, 0);
        let eo = if base.use_belief_noise { Dual::variable(s.params.eta_other, 1) } else { es };
        let a = if base.use_risk { Dual::variable(s.params.alpha, 2) } else { Dual::constant(0.0) };
        match base.structure {
            Structure::LevelKQr => {
                let l = level_predictions(p, role, es, eo, a);
                (l[base.k.unwrap_or(1) as usize], [0.0; 4])
            }
            Structure::LevelMixtureQr => {
                let l = level_predictions(p, role, es, eo, a);
                let w = s.level_weights.unwrap_or([0.25; 4]);
                let mut pred = Dual::constant(0.0);
                for k in 0..4 {
                    pred = pred + l[k] * Dual::constant(w[k]);
                }
                (pred, l.map(|d| d.v))
            }
            Structure::Qre => (qre_unrolled(p, role, es, eo, a, QRE_UNROLL), [0.0; 4]),
            Structure::Nash => (Dual::constant(f64::NAN), [0.0; 4]),
        }
    }

    /// Parameter values the model uses for `role` in `g`.
    pub fn slots_for(&self, g: &impl AsPayoffs, role: Role) -> SlotValues {
        let x = game_input(g, role);
        let caches = self.nets().map(|net| net.map(|m| m.forward(&x, 1)));
        self.slot_values(&Forward { x_batch: 1, caches }, 0)
    }

    pub fn eta_self_for(&self, g: &impl AsPayoffs, role: Role) -> f64 {
        self.slots_for(g, role).params.eta_self
    }

    pub fn predict(&self, g: &impl AsPayoffs, role: Role) -> f64 {
        let s = self.slots_for(g, role);
        self.predict_dual(&g.payoffs(), role, &s).0.v
    }
}

impl Trainable for AugmentedModel {
    fn params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for net in self.nets().into_iter().flatten() {
            out.extend_from_slice(&net.params);
        }
        out.extend(self.scalars());
        out
    }

    fn set_params(&mut self, params: &[f64]) {
        let mut offset = 0;
        for net in [&mut self.eta_self_net, &mut self.eta_other_net, &mut self.level_net].into_iter().flatten() {
            let n = net.params.len();
            net.params.copy_from_slice(&params[offset..offset + n]);
            offset += n;
        }
        let rest = params[offset..].to_vec();
        self.set_scalars(&rest);
    }

    fn loss_and_grad(&self, batch: &[&GameRecord], grad: &mut [f64]) -> f64 {
        let n = batch.len();
        let fwd = self.forward(batch);
        let spec = &self.spec;
        let nets = self.nets();
        let mut d_out: [Vec<f64>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; 4 * n]];
        let mut scalar_grad = [0.0f64; 6];
        let mut loss = 0.0;
        for (i, r) in batch.iter().enumerate() {
            let s = self.slot_values(&fwd, i);
            let (pred, levels) = self.predict_dual(&r.game.payoffs(), r.role, &s);
            let err = pred.v - r.p_first;
            loss += err * err;
            let g = 2.0 * err / n as f64;
            let [d_es, d_eo, d_a] = pred.d.map(|d| g * d);
            if nets[0].is_some() {
                d_out[0][i] = d_es;
            } else {
                scalar_grad[0] += d_es * s.params.eta_self;
            }
            if spec.base.use_belief_noise {
                if nets[1].is_some() {
                    d_out[1][i] = d_eo;
                } else {
                    scalar_grad[1] += d_eo * s.params.eta_other;
                }
            }
            if spec.base.use_risk {
                scalar_grad[2] += d_a * s.params.alpha;
            }
            if let Some(w) = s.level_weights {
                let d_w = levels.map(|l| g * l);
                if nets[2].is_some() {
                    d_out[2][4 * i..4 * i + 4].copy_from_slice(&d_w);
                } else {
                    let dot: f64 = w.iter().zip(&d_w).map(|(a, b)| a * b).sum();
                    for j in 1..4 {
                        scalar_grad[2 + j] += w[j] * (d_w[j] - dot);
                    }
                }
            }
        }

        let mut offset = 0;
        for k in 0..3 {
            let (Some(net), Some(cache)) = (nets[k], fwd.caches[k].as_ref()) else { continue };
            let head = net.config.head;
            let d = head.raw_dim();
            let per = if head == Head::Simplex4 { 4 } else { 1 };
            let mut d_raw = vec![0.0; n * d];
            for i in 0..fwd.x_batch {
                let raw = &cache.raw()[i * d..(i + 1) * d];
                let out = head.forward(raw);
                head.backward(raw, &out, &d_out[k][i * per..(i + 1) * per], &mut d_raw[i * d..(i + 1) * d]);
            }
            let len = net.params.len();
            net.backward(cache, &d_raw, &mut grad[offset..offset + len]);
            offset += len;
        }
        let mut j = offset;
        if spec.has_scalar_eta_self() {
            grad[j] += scalar_grad[0];
            j += 1;
        }
        if spec.has_scalar_eta_other() {
            grad[j] += scalar_grad[1];
            j += 1;
        }
        if spec.base.use_risk {
            grad[j] += scalar_grad[2];
            j += 1;
        }
        if spec.has_scalar_levels() {
            for t in 0..3 {
                grad[j + t] += scalar_grad[3 + t];
            }
        }
        loss / n as f64
    }

    fn predict_records(&self, records: &[GameRecord]) -> Vec<f64> {
        let refs: Vec<&GameRecord> = records.iter().collect();
        let fwd = self.forward(&refs);
        refs.iter()
            .enumerate()
            .map(|(i, r)| {
                let s = self.slot_values(&fwd, i);
                self.predict_dual(&r.game.payoffs(), r.role, &s).0.v
            })
            .collect()
    }
}
