use std::path::Path;

use crate::error::{Error, Result};

/// One answered presentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InteractionRecord {
    pub learner: usize,
    pub item: usize,
    /// Seconds since the simulation epoch.
    pub timestamp: u64,
    pub correct: bool,
}

impl InteractionRecord {
    pub fn outcome(&self) -> f64 {
        if self.correct {
            1.0
        } else {
            0.0
        }
    }
}

const HEADER: [&str; 4] = ["learner_id", "item_id", "timestamp", "outcome"];

/// Reads an interaction log with header `learner_id,item_id,timestamp,outcome`.
pub fn read_history_csv(path: &Path) -> Result<Vec<InteractionRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
    let headers = reader.headers().map_err(|e| Error::parse(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::parse(path, format!("expected header `{}`", HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::parse(path, e))?;
        let field = |i: usize| -> Result<u64> {
            row[i].trim().parse::<u64>().map_err(|e| {
                Error::parse(path, format!("row {}: {} {:?}: {e}", line + 2, HEADER[i], &row[i]))
            })
        };
        let correct = match field(3)? {
            0 => false,
            1 => true,
            o => {
                return Err(Error::parse(
                    path,
                    format!("row {}: outcome must be 0 or 1, got {o}", line + 2),
                ))
            }
        };
        out.push(InteractionRecord {
            learner: field(0)? as usize,
            item: field(1)? as usize,
            timestamp: field(2)?,
            correct,
        });
    }
    Ok(out)
}

pub fn write_history_csv(path: &Path, records: &[InteractionRecord]) -> Result<()> {
    let mut out = format!("{}\n", HEADER.join(","));
    for r in records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.learner,
            r.item,
            r.timestamp,
            u8::from(r.correct)
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
