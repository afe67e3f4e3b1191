//! Game-level records, trial-level records, game generation, aggregation of
//! trials and synthetic-participant simulation.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameMatrix, Permutation, Role};

mod aggregate;
mod generate;
mod simulate;

pub use aggregate::{aggregate_trials, undo_permutation};
pub use generate::{
    dominant_graph_count, enumerate_type_categories, generate_games, type_quotas, GeneratedGames, GeneratorConfig, TypeCensus,
};
pub use simulate::{expected_rt_correlation, simulate_choices, simulate_frequencies, RtModel, SimTarget, SimulationConfig};

/// Aggregated behavior in one game for one role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub game: GameMatrix,
    pub role: Role,
    /// Number of observed choices.
    pub n: u32,
    /// Empirical frequency of the role's first action (`A` or `C`).
    pub p_first: f64,
    /// Game-level median of within-participant z-scored log RT.
    pub rt_norm: Option<f64>,
    /// Game-level mean of within-participant z-scored confidence.
    pub conf_norm: Option<f64>,
}

impl GameRecord {
    pub fn new(game: GameMatrix, role: Role, n: u32, p_first: f64) -> Self {
        GameRecord { game, role, n, p_first, rt_norm: None, conf_norm: None }
    }
}

/// A validated collection of game records.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<GameRecord>,
}

impl Dataset {
    pub fn new(records: Vec<GameRecord>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for r in &records {
            if !(0.0..=1.0).contains(&r.p_first) {
                return Err(Error::InvalidInput(alloc::format!(
                    "record {}: frequency {} outside [0, 1]",
                    r.game.id,
                    r.p_first
                )));
            }
            if r.n == 0 {
                return Err(Error::InvalidInput(alloc::format!("record {}: n = 0", r.game.id)));
            }
            if !seen.insert((r.game.id.clone(), r.role)) {
                return Err(Error::InvalidInput(alloc::format!(
                    "duplicate record for game {} ({})",
                    r.game.id,
                    r.role.as_str()
                )));
            }
        }
        Ok(Dataset { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.p_first).collect()
    }

    /// Records at the given indices, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset { records: idx.iter().map(|&i| self.records[i].clone()).collect() }
    }
}

/// Which displayed row the participant picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    First,
    Second,
}

/// One participant's decision in one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub participant_id: String,
    pub game_id: String,
    pub role: Role,
    /// Permutation of the matrix as displayed to the participant, in the
    /// participant's own (row-player) view.
    pub permutation: Permutation,
    /// Choice in displayed coordinates.
    pub choice: Choice,
    pub rt_ms: u32,
    pub confidence: Option<f64>,
}

impl TrialRecord {
    pub fn validate(&self) -> Result<()> {
        if self.rt_ms == 0 {
            return Err(Error::InvalidInput("rt_ms must be positive".into()));
        }
        if let Some(c) = self.confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidInput(alloc::format!("confidence {c} outside [0, 1]")));
            }
        }
        Ok(())
    }
}
