//! File formats: games JSON, trials CSV, records CSV, and JSON documents
//! carrying a provenance block.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use gamecx::data::{Choice, GameRecord, TrialRecord};
use gamecx::{GameMatrix, Permutation, Role};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::provenance::{sidecar_path, Provenance};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Read a JSON array of games. Ids must be unique.
pub fn read_games(path: &Path) -> Result<Vec<GameMatrix>> {
    let games: Vec<GameMatrix> = serde_json::from_reader(std::io::BufReader::new(open(path)?))?;
    let mut seen = BTreeSet::new();
    for g in &games {
        if !seen.insert(g.id.as_str()) {
            return Err(CliError::Data(format!("{}: duplicate game id {:?}", path.display(), g.id)));
        }
    }
    Ok(games)
}

/// Write games as a bare JSON array plus a provenance sidecar.
pub fn write_games(path: &Path, games: &[GameMatrix], prov: &Provenance) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, games)?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    finish(w, path)?;
    write_plain_json(&sidecar_path(path), prov)
}

fn write_plain_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    finish(w, path)
}

#[derive(Serialize, Deserialize)]
struct Document<T> {
    provenance: Provenance,
    #[serde(flatten)]
    body: T,
}

/// Write a JSON object with a leading `provenance` field.
pub fn write_json<T: Serialize>(path: &Path, body: &T, prov: &Provenance) -> Result<()> {
    write_plain_json(path, &Document { provenance: prov.clone(), body })
}

/// Read a document written by [`write_json`].
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<(T, Provenance)> {
    let doc: Document<T> = serde_json::from_reader(std::io::BufReader::new(open(path)?))?;
    Ok((doc.body, doc.provenance))
}

/// Write rows as CSV preceded by the provenance comment lines.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], prov: &Provenance) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(prov.csv_header().as_bytes()).map_err(|e| CliError::io(path, e))?;
    {
        let mut csv = csv::Writer::from_writer(&mut w);
        for r in rows {
            csv.serialize(r)?;
        }
        csv.flush().map_err(|e| CliError::io(path, e))?;
    }
    finish(w, path)
}

/// Write a CSV with an explicit header and string cells.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>], prov: &Provenance) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(prov.csv_header().as_bytes()).map_err(|e| CliError::io(path, e))?;
    {
        let mut csv = csv::Writer::from_writer(&mut w);
        csv.write_record(header)?;
        for r in rows {
            csv.write_record(r)?;
        }
        csv.flush().map_err(|e| CliError::io(path, e))?;
    }
    finish(w, path)
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(open(path)?))
}

fn parse_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<(u64, T)>> {
    let mut rdr = reader(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<T>() {
        match row {
            Ok(r) => out.push((0, r)),
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                return Err(CliError::Parse { line, message: parse_message(&e) });
            }
        }
    }
    // second pass for line numbers of the accepted rows
    let mut rdr = reader(path)?;
    let mut rec = csv::StringRecord::new();
    let mut i = 0;
    while rdr.read_record(&mut rec)? {
        if let Some(slot) = out.get_mut(i) {
            slot.0 = rec.position().map_or(0, |p| p.line());
        }
        i += 1;
    }
    Ok(out)
}

fn parse_message(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => match err.field() {
            Some(f) => format!("field {}: {}", f + 1, err.kind()),
            None => err.kind().to_string(),
        },
        _ => e.to_string(),
    }
}

fn parse_role(s: &str, line: u64) -> Result<Role> {
    match s {
        "row" => Ok(Role::Row),
        "col" => Ok(Role::Col),
        _ => Err(CliError::Parse { line, message: format!("role must be row or col, got {s:?}") }),
    }
}

fn parse_flag(s: &str, name: &str, line: u64) -> Result<bool> {
    match s {
        "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        _ => Err(CliError::Parse { line, message: format!("{name} must be 0 or 1, got {s:?}") }),
    }
}

fn role_str(r: Role) -> &'static str {
    r.as_str()
}

#[derive(Debug, Serialize, Deserialize)]
struct TrialRow {
    participant_id: String,
    game_id: String,
    role: String,
    swap_rows: String,
    swap_cols: String,
    choice: String,
    rt_ms: i64,
    confidence: Option<f64>,
}

/// Parse a trials CSV. Choices stay in displayed coordinates.
pub fn read_trials(path: &Path) -> Result<Vec<TrialRecord>> {
    parse_rows::<TrialRow>(path)?
        .into_iter()
        .map(|(line, r)| {
            let choice = match r.choice.as_str() {
                "first" => Choice::First,
                "second" => Choice::Second,
                other => {
                    return Err(CliError::Parse { line, message: format!("choice must be first or second, got {other:?}") })
                }
            };
            if r.rt_ms <= 0 || r.rt_ms > i64::from(u32::MAX) {
                return Err(CliError::Range { line, message: format!("rt_ms {} must be a positive integer", r.rt_ms) });
            }
            if let Some(c) = r.confidence {
                if !(0.0..=1.0).contains(&c) {
                    return Err(CliError::Range { line, message: format!("confidence {c} outside [0, 1]") });
                }
            }
            Ok(TrialRecord {
                participant_id: r.participant_id,
                game_id: r.game_id,
                role: parse_role(&r.role, line)?,
                permutation: Permutation {
                    swap_rows: parse_flag(&r.swap_rows, "swap_rows", line)?,
                    swap_cols: parse_flag(&r.swap_cols, "swap_cols", line)?,
                },
                choice,
                rt_ms: r.rt_ms as u32,
                confidence: r.confidence,
            })
        })
        .collect()
}

pub fn write_trials(path: &Path, trials: &[TrialRecord], prov: &Provenance) -> Result<()> {
    let rows: Vec<TrialRow> = trials
        .iter()
        .map(|t| TrialRow {
            participant_id: t.participant_id.clone(),
            game_id: t.game_id.clone(),
            role: role_str(t.role).into(),
            swap_rows: u8::from(t.permutation.swap_rows).to_string(),
            swap_cols: u8::from(t.permutation.swap_cols).to_string(),
            choice: match t.choice {
                Choice::First => "first",
                Choice::Second => "second",
            }
            .into(),
            rt_ms: i64::from(t.rt_ms),
            confidence: t.confidence,
        })
        .collect();
    write_csv(path, &rows, prov)
}

/// Payoff columns are named by cell: `r_ac` is the row payoff at (A, C).
#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    game_id: String,
    role: String,
    n: u32,
    p_first: f64,
    rt_norm: Option<f64>,
    conf_norm: Option<f64>,
    r_ac: i32,
    r_ad: i32,
    r_bc: i32,
    r_bd: i32,
    c_ac: i32,
    c_ad: i32,
    c_bc: i32,
    c_bd: i32,
}

pub fn read_records(path: &Path) -> Result<Vec<GameRecord>> {
    parse_rows::<RecordRow>(path)?
        .into_iter()
        .map(|(line, r)| {
            if r.n == 0 {
                return Err(CliError::Range { line, message: "n must be at least 1".into() });
            }
            if !(0.0..=1.0).contains(&r.p_first) {
                return Err(CliError::Range { line, message: format!("p_first {} outside [0, 1]", r.p_first) });
            }
            Ok(GameRecord {
                game: GameMatrix::unchecked(r.game_id, [r.r_ac, r.r_ad, r.r_bc, r.r_bd], [r.c_ac, r.c_ad, r.c_bc, r.c_bd]),
                role: parse_role(&r.role, line)?,
                n: r.n,
                p_first: r.p_first,
                rt_norm: r.rt_norm,
                conf_norm: r.conf_norm,
            })
        })
        .collect()
}

pub fn write_records(path: &Path, records: &[GameRecord], prov: &Provenance) -> Result<()> {
    let rows: Vec<RecordRow> = records
        .iter()
        .map(|r| {
            let [r_ac, r_ad, r_bc, r_bd] = r.game.row;
            let [c_ac, c_ad, c_bc, c_bd] = r.game.col;
            RecordRow {
                game_id: r.game.id.clone(),
                role: role_str(r.role).into(),
                n: r.n,
                p_first: r.p_first,
                rt_norm: r.rt_norm,
                conf_norm: r.conf_norm,
                r_ac,
                r_ad,
                r_bc,
                r_bd,
                c_ac,
                c_ad,
                c_bc,
                c_bd,
            }
        })
        .collect();
    write_csv(path, &rows, prov)
}
