//! Append-only JSON-lines log of finished record outcomes.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{PipelineError, RecordOutcome};

pub const JOURNAL_FILE: &str = "journal.jsonl";

pub struct Journal {
    path: PathBuf,
    out: BufWriter<File>,
}

impl Journal {
    /// Creates (or truncates) the journal in `dir`.
    pub fn create(dir: &Path) -> Result<Journal, PipelineError> {
        let path = dir.join(JOURNAL_FILE);
        let file = File::create(&path)?;
        Ok(Journal {
            path,
            out: BufWriter::new(file),
        })
    }

    /// Opens an existing journal for appending and returns what it already
    /// holds. A partial final line (an interrupted write) is discarded.
    pub fn resume(dir: &Path) -> Result<(Journal, Vec<RecordOutcome>), PipelineError> {
        let path = dir.join(JOURNAL_FILE);
        if !path.exists() {
            return Ok((Journal::create(dir)?, Vec::new()));
        }
        let text = fs::read_to_string(&path)?;
        let (done, valid_len) = parse(&text)?;
        if valid_len < text.len() {
            log::warn!(
                "{}: discarding {} bytes of incomplete trailing entry",
                path.display(),
                text.len() - valid_len
            );
            let file = OpenOptions::new().write(true).open(&path)?;
            file.set_len(valid_len as u64)?;
        }
        let file = OpenOptions::new().append(true).open(&path)?;
        Ok((
            Journal {
                path,
                out: BufWriter::new(file),
            },
            done,
        ))
    }

    pub fn append(&mut self, outcome: &RecordOutcome) -> Result<(), PipelineError> {
        let line = serde_json::to_string(outcome).expect("outcome serializes");
        self.out.write_all(line.as_bytes())?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Parses journal text; returns the entries and the byte length of the
/// well-formed prefix. Later entries for the same id replace earlier ones.
pub fn parse(text: &str) -> Result<(Vec<RecordOutcome>, usize), PipelineError> {
    let mut order: Vec<String> = Vec::new();
    let mut by_id: HashMap<String, RecordOutcome> = HashMap::new();
    let mut valid_len = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let complete = line.ends_with('\n');
        let body = line.trim_end();
        if body.is_empty() {
            valid_len += line.len();
            continue;
        }
        // an unterminated last line is an interrupted append
        if !complete {
            break;
        }
        let o: RecordOutcome =
            serde_json::from_str(body).map_err(|e| PipelineError::JournalCorrupt {
                line: i + 1,
                message: e.to_string(),
            })?;
        if !by_id.contains_key(&o.id) {
            order.push(o.id.clone());
        }
        by_id.insert(o.id.clone(), o);
        valid_len += line.len();
    }
    let outcomes = order
        .into_iter()
        .map(|id| by_id.remove(&id).unwrap())
        .collect();
    Ok((outcomes, valid_len))
}
