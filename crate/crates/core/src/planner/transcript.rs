//! JSON-lines log of queries, responses and executed actions.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::actions::{ActionResult, StructuredAction};
use crate::error::{Error, Result};

#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Record {
    Subgoal { goal: String, count: u32, skipped: bool },
    Query { goal: String, index: u32, text: String },
    Response { goal: String, index: u32, text: String },
    Execution { goal: String, action: StructuredAction, result: ActionResult },
    Outcome { goal: String, achieved: bool, queries: u32, detail: String },
}

/// Keeps every record in memory and optionally mirrors it to a file.
#[derive(Debug, Default)]
pub struct Transcript {
    records: Vec<Record>,
    file: Option<(PathBuf, BufWriter<File>)>,
}

impl Transcript {
    pub fn new() -> Self {
        Transcript::default()
    }

    pub fn to_file(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Transcript {
            records: Vec::new(),
            file: Some((path.to_path_buf(), BufWriter::new(f))),
        })
    }

    pub fn push(&mut self, r: Record) {
        if let Some((path, w)) = &mut self.file {
            let line = serde_json::to_string(&r).expect("records serialize");
            if let Err(e) = writeln!(w, "{line}") {
                log::warn!("transcript {}: {e}", path.display());
            }
        }
        self.records.push(r);
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn path(&self) -> Option<&Path> {
        self.file.as_ref().map(|(p, _)| p.as_path())
    }

    pub fn flush(&mut self) -> Result<()> {
        if let Some((path, w)) = &mut self.file {
            w.flush().map_err(|e| Error::io(path.clone(), e))?;
        }
        Ok(())
    }
}

impl Drop for Transcript {
    fn drop(&mut self) {
        let _ = self.flush();
    }
}

/// Reads a transcript file back.
pub fn read_transcript(path: &Path) -> Result<Vec<Record>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::json(path.display().to_string(), e)))
        .collect()
}
