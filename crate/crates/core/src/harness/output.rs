//! CSV and JSON-lines emission.
//!
//! CSV layout: `seed,step,player,reward,cum_reward,epsilon[,w_model_0,...]`,
//! one row per player per record, player 0 being the decision maker.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::run::{RunRecord, Snapshot};

const BASE_COLUMNS: [&str; 6] = ["seed", "step", "player", "reward", "cum_reward", "epsilon"];

/// Number of mixture-weight columns needed, zero when no record has weights.
fn weight_columns(records: &[RunRecord]) -> usize {
    records
        .iter()
        .filter_map(|r| r.weights.as_ref().map(Vec::len))
        .max()
        .unwrap_or(0)
}

pub fn write_csv_to<W: Write>(
    records: &[RunRecord],
    out: W,
) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let k = weight_columns(records);
    let mut header: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..k).map(|i| format!("w_model_{i}")));
    w.write_record(&header)?;
    for r in records {
        for p in 0..r.rewards.len() {
            let mut row = vec![
                r.seed.to_string(),
                r.step.to_string(),
                p.to_string(),
                r.rewards[p].to_string(),
                r.cum_rewards[p].to_string(),
                r.epsilons[p].to_string(),
            ];
            if k > 0 {
                let ws = r.weights.as_deref().unwrap_or(&[]);
                row.extend((0..k).map(|i| ws.get(i).map(f64::to_string).unwrap_or_default()));
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(records, BufWriter::new(file)).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            line: 0,
            msg: format!("{}: {other:?}", path.display()),
        },
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, column: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("column `{column}`: cannot parse `{s}`"),
    })
}

/// Parses CSV emitted by [`write_csv`], grouping rows back into records.
pub fn read_csv_from<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            msg: format!("bad header: {e}"),
        })?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    for (i, want) in BASE_COLUMNS.iter().enumerate() {
        if names.get(i) != Some(want) {
            return Err(Error::Parse {
                line: 1,
                msg: format!("missing column `{want}` at position {i}"),
            });
        }
    }
    let k = names.len() - BASE_COLUMNS.len();
    for (i, n) in names[BASE_COLUMNS.len()..].iter().enumerate() {
        if *n != format!("w_model_{i}") {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unexpected column `{n}`"),
            });
        }
    }

    let mut records: Vec<RunRecord> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        if row.len() != names.len() {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, found {}", names.len(), row.len()),
            });
        }
        let seed: u64 = parse_field(&row[0], "seed", line)?;
        let step: u64 = parse_field(&row[1], "step", line)?;
        let player: usize = parse_field(&row[2], "player", line)?;
        let reward: f64 = parse_field(&row[3], "reward", line)?;
        let cum: f64 = parse_field(&row[4], "cum_reward", line)?;
        let eps: f64 = parse_field(&row[5], "epsilon", line)?;
        let weights = if k > 0 && !row[6].is_empty() {
            let ws = (0..k)
                .map(|j| row[6 + j].to_string())
                .take_while(|s| !s.is_empty())
                .map(|s| parse_field::<f64>(&s, "w_model", line))
                .collect::<Result<Vec<_>>>()?;
            Some(ws)
        } else {
            None
        };
        if player == 0 {
            if let Some(prev) = records.last() {
                if prev.seed == seed && step <= prev.step {
                    return Err(Error::Parse {
                        line,
                        msg: format!("step {step} does not increase for seed {seed}"),
                    });
                }
            }
            records.push(RunRecord {
                seed,
                step,
                rewards: vec![reward],
                cum_rewards: vec![cum],
                epsilons: vec![eps],
                weights,
            });
        } else {
            let current = records
                .last_mut()
                .filter(|r| r.seed == seed && r.step == step && r.rewards.len() == player);
            let Some(r) = current else {
                return Err(Error::Parse {
                    line,
                    msg: format!("player {player} row out of order"),
                });
            };
            r.rewards.push(reward);
            r.cum_rewards.push(cum);
            r.epsilons.push(eps);
        }
    }
    Ok(records)
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(file)
}

/// One JSON object per line.
pub fn write_snapshots(snapshots: &[Snapshot], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in snapshots {
        serde_json::to_writer(&mut w, s).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
