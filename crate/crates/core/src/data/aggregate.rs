//! Trial-level to game-level aggregation.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{Choice, GameRecord, TrialRecord};
use crate::error::{Error, Result};
use crate::game::{GameMatrix, Permutation, Role};
use crate::math;

/// Map a choice made on a displayed (permuted) matrix back to canonical
/// coordinates. Only a row swap changes which of the participant's own
/// actions was picked. The map is an involution.
pub fn undo_permutation(choice: Choice, displayed: Permutation) -> Choice {
    match (displayed.swap_rows, choice) {
        (false, c) => c,
        (true, Choice::First) => Choice::Second,
        (true, Choice::Second) => Choice::First,
    }
}

/// Within-group z-scores; a zero or undefined spread falls back to 1.
fn zscores(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = math::mean(&sorted);
    let sd = math::population_sd(&sorted);
    let sd = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
    values.iter().map(|v| (v - mean) / sd).collect()
}

#[derive(Default)]
struct Cell {
    n: u32,
    first: u32,
    rt: Vec<f64>,
    conf: Vec<f64>,
}

/// Aggregate trials into one record per (game, role), ordered as `games`
/// then row before column. Log RTs and confidence are z-scored within
/// participant; each record carries the median RT z-score and the mean
/// confidence z-score.
pub fn aggregate_trials(trials: &[TrialRecord], games: &[GameMatrix]) -> Result<Vec<GameRecord>> {
    let index: BTreeMap<&str, usize> = games.iter().enumerate().map(|(i, g)| (g.id.as_str(), i)).collect();
    let mut by_participant: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, t) in trials.iter().enumerate() {
        t.validate()?;
        if !index.contains_key(t.game_id.as_str()) {
            return Err(Error::UnknownGame(t.game_id.clone()));
        }
        by_participant.entry(t.participant_id.as_str()).or_default().push(i);
    }

    let mut rt_z = alloc::vec![0.0; trials.len()];
    let mut conf_z: Vec<Option<f64>> = alloc::vec![None; trials.len()];
    for idx in by_participant.values() {
        let rts: Vec<f64> = idx.iter().map(|&i| math::ln(f64::from(trials[i].rt_ms))).collect();
        for (&i, z) in idx.iter().zip(zscores(&rts)) {
            rt_z[i] = z;
        }
        let rated: Vec<usize> = idx.iter().copied().filter(|&i| trials[i].confidence.is_some()).collect();
        let conf: Vec<f64> = rated.iter().filter_map(|&i| trials[i].confidence).collect();
        for (&i, z) in rated.iter().zip(zscores(&conf)) {
            conf_z[i] = Some(z);
        }
    }

    let mut cells: BTreeMap<(usize, u8), Cell> = BTreeMap::new();
    for (i, t) in trials.iter().enumerate() {
        let role_key = match t.role {
            Role::Row => 0,
            Role::Col => 1,
        };
        let cell = cells.entry((index[t.game_id.as_str()], role_key)).or_default();
        cell.n += 1;
        if undo_permutation(t.choice, t.permutation) == Choice::First {
            cell.first += 1;
        }
        cell.rt.push(rt_z[i]);
        if let Some(z) = conf_z[i] {
            cell.conf.push(z);
        }
    }

    Ok(cells
        .into_iter()
        .map(|((g, role), mut cell)| {
            // sort so the median does not depend on trial order
            cell.rt.sort_by(f64::total_cmp);
            cell.conf.sort_by(f64::total_cmp);
            GameRecord {
                game: games[g].clone(),
                role: if role == 0 { Role::Row } else { Role::Col },
                n: cell.n,
                p_first: f64::from(cell.first) / f64::from(cell.n),
                rt_norm: Some(math::median(&cell.rt)),
                conf_norm: if cell.conf.is_empty() { None } else { Some(math::mean(&cell.conf)) },
            }
        })
        .collect())
}
