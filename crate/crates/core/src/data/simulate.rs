//! Synthetic participants: choices, displayed permutations, response times
//! and confidence ratings from known choice probabilities.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Choice, GameRecord, TrialRecord};
use crate::error::{Error, Result};
use crate::game::{GameMatrix, Permutation, Role};
use crate::math;
use crate::rng;

/// What one simulated game instance should produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTarget {
    pub game: GameMatrix,
    pub role: Role,
    /// Probability of the role's first action.
    pub p_first: f64,
    /// Complexity score driving response times (and confidence).
    pub index: f64,
}

/// `ln RT = log_mean + participant + loading * index + game + noise`, each
/// random term a centred normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtModel {
    pub log_mean: f64,
    pub participant_sd: f64,
    pub loading: f64,
    pub game_sd: f64,
    pub noise_sd: f64,
}

impl Default for RtModel {
    fn default() -> Self {
        RtModel { log_mean: math::ln(4000.0), participant_sd: 0.3, loading: 0.0, game_sd: 0.2, noise_sd: 0.5 }
    }
}

impl RtModel {
    /// Same model with the loading chosen so that the correlation between
    /// the index and aggregated RTs is `r` in expectation.
    pub fn with_target_correlation(mut self, r: f64, index_sd: f64, participants: u32) -> Result<Self> {
        if !(0.0..1.0).contains(&r.abs()) || !(index_sd > 0.0) || participants == 0 {
            return Err(Error::InvalidInput(format!("cannot target r = {r} with index sd {index_sd}")));
        }
        let nuisance = math::sqrt(self.nuisance_var(participants));
        self.loading = r * nuisance / (index_sd * math::sqrt(1.0 - r * r));
        Ok(self)
    }

    /// Variance of the per-game median RT not explained by the index, on the
    /// log scale. The median of `n` normals has variance about `pi/2 * s^2/n`.
    fn nuisance_var(&self, participants: u32) -> f64 {
        self.game_sd * self.game_sd
            + core::f64::consts::FRAC_PI_2 * self.noise_sd * self.noise_sd / f64::from(participants)
    }
}

/// Expected Pearson correlation between the index and per-game RT medians.
pub fn expected_rt_correlation(rt: &RtModel, index_sd: f64, participants: u32) -> f64 {
    let signal = rt.loading * index_sd;
    signal / math::sqrt(signal * signal + rt.nuisance_var(participants))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Panel size: every participant plays every target once.
    pub participants: u32,
    pub seed: u64,
    pub rt: RtModel,
    pub confidence: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig { participants: 100, seed: 0, rt: RtModel::default(), confidence: false }
    }
}

fn check_targets(targets: &[SimTarget]) -> Result<()> {
    for t in targets {
        if !(0.0..=1.0).contains(&t.p_first) {
            return Err(Error::InvalidInput(format!("game {}: probability {} outside [0, 1]", t.game.id, t.p_first)));
        }
        if !t.index.is_finite() {
            return Err(Error::NonFinite);
        }
    }
    Ok(())
}

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Trials for every (participant, target) pair, grouped by target. Each
/// trial shows the matrix under a uniformly random permutation and records
/// the choice in displayed coordinates.
pub fn simulate_choices(targets: &[SimTarget], cfg: &SimulationConfig) -> Result<Vec<TrialRecord>> {
    check_targets(targets)?;
    if cfg.participants == 0 {
        return Err(Error::InvalidInput("participants must be positive".into()));
    }
    let mut people = rng::stream(cfg.seed, 0);
    let offsets: Vec<f64> = (0..cfg.participants).map(|_| cfg.rt.participant_sd * normal(&mut people)).collect();
    let ids: Vec<alloc::string::String> = (0..cfg.participants).map(|p| format!("s{:05}", p + 1)).collect();

    let mut out = Vec::with_capacity(targets.len() * cfg.participants as usize);
    for (i, t) in targets.iter().enumerate() {
        let mut r = rng::stream(cfg.seed, i as u64 + 1);
        let game_effect = cfg.rt.game_sd * normal(&mut r);
        for (p, offset) in offsets.iter().enumerate() {
            let perm = Permutation { swap_rows: r.gen(), swap_cols: r.gen() };
            let canonical = if r.gen::<f64>() < t.p_first { Choice::First } else { Choice::Second };
            let choice = super::undo_permutation(canonical, perm);
            let ln_rt = cfg.rt.log_mean + offset + cfg.rt.loading * t.index + game_effect + cfg.rt.noise_sd * normal(&mut r);
            let rt_ms = math::round(math::exp(ln_rt)).clamp(1.0, f64::from(u32::MAX)) as u32;
            let confidence = if cfg.confidence {
                Some(math::logistic(1.0 - 0.5 * t.index + 0.8 * normal(&mut r)))
            } else {
                None
            };
            out.push(TrialRecord {
                participant_id: ids[p].clone(),
                game_id: t.game.id.clone(),
                role: t.role,
                permutation: perm,
                choice,
                rt_ms,
                confidence,
            });
        }
    }
    Ok(out)
}

/// Game-level records with binomial choice counts from `n` participants per
/// target, without materializing trials.
pub fn simulate_frequencies(targets: &[SimTarget], n: u32, seed: u64) -> Result<Vec<GameRecord>> {
    check_targets(targets)?;
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    targets
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut r = rng::stream(seed, i as u64);
            let count = Binomial::new(u64::from(n), t.p_first)
                .map_err(|e| Error::InvalidInput(format!("{e}")))?
                .sample(&mut r);
            Ok(GameRecord::new(t.game.clone(), t.role, n, count as f64 / f64::from(n)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::aggregate_trials;

    fn target(id: &str, p: f64, index: f64) -> SimTarget {
        SimTarget { game: GameMatrix::new(id, [30, 10, 40, 20], [30, 40, 10, 20]).unwrap(), role: Role::Row, p_first: p, index }
    }

    #[test]
    fn binomial_frequency_within_three_sd() {
        let recs = simulate_frequencies(&[target("g", 0.5, 0.0)], 10_000, 4).unwrap();
        assert!((recs[0].p_first - 0.5).abs() <= 0.015);
    }

    #[test]
    fn single_participant_gives_zero_or_one() {
        let recs = simulate_frequencies(&[target("g", 0.3, 0.0)], 1, 4).unwrap();
        assert!(recs[0].p_first == 0.0 || recs[0].p_first == 1.0);
    }

    #[test]
    fn simulate_then_aggregate_recovers_probabilities() {
        let targets: Vec<SimTarget> =
            (0..4).map(|i| target(&format!("g{i}"), 0.2 * i as f64 + 0.1, 0.0)).collect();
        let games: Vec<GameMatrix> = targets.iter().map(|t| t.game.clone()).collect();
        let cfg = SimulationConfig { participants: 10_000, seed: 1, ..Default::default() };
        let trials = simulate_choices(&targets, &cfg).unwrap();
        assert!(trials.iter().any(|t| t.permutation.swap_rows));
        let recs = aggregate_trials(&trials, &games).unwrap();
        for (r, t) in recs.iter().zip(&targets) {
            let sd = math::sqrt(t.p_first * (1.0 - t.p_first) / 10_000.0);
            assert!((r.p_first - t.p_first).abs() <= 3.0 * sd, "{} vs {}", r.p_first, t.p_first);
        }
    }

    #[test]
    fn loading_hits_target_correlation_in_expectation() {
        let rt = RtModel::default().with_target_correlation(0.2, 1.3, 50).unwrap();
        assert!((expected_rt_correlation(&rt, 1.3, 50) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_probability() {
        assert!(simulate_frequencies(&[target("g", 1.5, 0.0)], 10, 0).is_err());
    }
}
