//! Per-goal store of successful action sequences with periodic summarization.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::actions::StructuredAction;
use crate::error::{Error, Result};
use crate::knowledge::Goal;

/// Recordings per key that trigger a summary.
pub const SUMMARY_EVERY: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSequence {
    pub actions: Vec<StructuredAction>,
    pub episode: String,
    pub seed: u64,
}

impl ActionSequence {
    pub fn new(actions: Vec<StructuredAction>, episode: impl Into<String>, seed: u64) -> Self {
        ActionSequence {
            actions,
            episode: episode.into(),
            seed,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryEntry {
    #[serde(default)]
    pub summary: Option<ActionSequence>,
    #[serde(default)]
    pub recordings: Vec<ActionSequence>,
}

impl MemoryEntry {
    /// Position 0 of the recording list.
    pub fn first(&self) -> Option<&ActionSequence> {
        self.summary.as_ref().or_else(|| self.recordings.first())
    }

    pub fn len(&self) -> usize {
        self.summary.is_some() as usize + self.recordings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Result of merging several sequences into one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Summary {
    pub sequence: ActionSequence,
    /// Set when no common core was found and the first input was returned.
    pub warning: bool,
}

pub trait Summarizer {
    fn summarize(&self, key: &str, seqs: &[ActionSequence]) -> Summary;
}

/// Longest-common-subsequence summarizer.
#[derive(Clone, Copy, Debug, Default)]
pub struct LcsSummarizer;

impl Summarizer for LcsSummarizer {
    fn summarize(&self, _key: &str, seqs: &[ActionSequence]) -> Summary {
        heuristic_summarize(seqs)
    }
}

/// Memory keys ignore counts.
pub fn goal_key(goal: &Goal) -> String {
    goal.object.clone()
}

fn same_step(a: &StructuredAction, b: &StructuredAction) -> bool {
    a.name() == b.name() && a.action.object() == b.action.object()
}

/// Longest common subsequence of `a` and `b` by (name, object), keeping the
/// elements of `a`.
fn lcs(a: &[StructuredAction], b: &[StructuredAction]) -> Vec<StructuredAction> {
    let (n, m) = (a.len(), b.len());
    let mut t = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            t[i][j] = if same_step(&a[i], &b[j]) {
                t[i + 1][j + 1] + 1
            } else {
                t[i + 1][j].max(t[i][j + 1])
            };
        }
    }
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(t[0][0] as usize);
    while i < n && j < m {
        if same_step(&a[i], &b[j]) {
            out.push(a[i].clone());
            i += 1;
            j += 1;
        } else if t[i + 1][j] >= t[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Common core of all sequences in the order of the first, with its
/// arguments. Falls back to the first sequence when nothing is shared.
pub fn heuristic_summarize(seqs: &[ActionSequence]) -> Summary {
    let Some(first) = seqs.first() else {
        return Summary {
            sequence: ActionSequence::new(Vec::new(), "summary", 0),
            warning: true,
        };
    };
    let mut core = first.actions.clone();
    for s in &seqs[1..] {
        core = lcs(&core, &s.actions);
    }
    if core.is_empty() {
        log::warn!("sequences share no common actions; keeping the first");
        return Summary {
            sequence: first.clone(),
            warning: true,
        };
    }
    Summary {
        sequence: ActionSequence::new(core, "summary", first.seed),
        warning: false,
    }
}

/// Thread-safe memory shared by concurrent episodes.
pub struct MemoryStore {
    entries: Mutex<BTreeMap<String, MemoryEntry>>,
    path: Option<PathBuf>,
    summarizer: Box<dyn Summarizer + Send + Sync>,
}

impl Default for MemoryStore {
    fn default() -> Self {
        MemoryStore::new()
    }
}

impl std::fmt::Debug for MemoryStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MemoryStore")
            .field("entries", &self.snapshot())
            .field("path", &self.path)
            .finish()
    }
}

impl Clone for MemoryStore {
    /// Copies the entries; the clone keeps the LCS summarizer and no file.
    fn clone(&self) -> Self {
        MemoryStore::from_entries(self.snapshot())
    }
}

impl PartialEq for MemoryStore {
    fn eq(&self, other: &Self) -> bool {
        self.snapshot() == other.snapshot()
    }
}

impl MemoryStore {
    /// In-memory store with the LCS summarizer.
    pub fn new() -> Self {
        MemoryStore::from_entries(BTreeMap::new())
    }

    pub fn from_entries(entries: BTreeMap<String, MemoryEntry>) -> Self {
        MemoryStore {
            entries: Mutex::new(entries),
            path: None,
            summarizer: Box::new(LcsSummarizer),
        }
    }

    pub fn with_summarizer(mut self, s: impl Summarizer + Send + Sync + 'static) -> Self {
        self.summarizer = Box::new(s);
        self
    }

    /// Opens a JSON-backed store. A missing file gives an empty store; every
    /// `record` writes the file back.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let entries = if path.exists() {
            read_entries(&path)?
        } else {
            BTreeMap::new()
        };
        let mut s = MemoryStore::from_entries(entries);
        s.path = Some(path);
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(MemoryStore::from_entries(read_entries(path)?))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_entries(path, &self.snapshot())
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn snapshot(&self) -> BTreeMap<String, MemoryEntry> {
        self.lock().clone()
    }

    pub fn entry(&self, key: &str) -> Option<MemoryEntry> {
        self.lock().get(key).cloned()
    }

    pub fn keys(&self) -> Vec<String> {
        self.lock().keys().cloned().collect()
    }

    pub fn has_summary(&self, key: &str) -> bool {
        self.lock().get(key).is_some_and(|e| e.summary.is_some())
    }

    /// The reference plan for `key`: the summary when there is one.
    pub fn retrieve(&self, key: &str) -> Option<ActionSequence> {
        self.lock().get(key).and_then(|e| e.first().cloned())
    }

    /// Appends a successful sequence, summarizing once the list holds
    /// [`SUMMARY_EVERY`] sequences.
    pub fn record(&self, key: &str, seq: ActionSequence) -> Result<()> {
        if seq.actions.is_empty() {
            return Ok(());
        }
        let mut entries = self.lock();
        let old = entries.get(key).cloned();
        let e = entries.entry(key.to_string()).or_default();
        e.recordings.push(seq);
        if e.len() >= SUMMARY_EVERY {
            let mut batch: Vec<ActionSequence> = e.summary.take().into_iter().collect();
            batch.append(&mut e.recordings);
            let s = self.summarizer.summarize(key, &batch);
            e.summary = Some(s.sequence);
        }
        if let Some(p) = &self.path {
            if let Err(err) = write_entries(p, &entries) {
                match old {
                    Some(o) => entries.insert(key.to_string(), o),
                    None => entries.remove(key),
                };
                return Err(err);
            }
        }
        Ok(())
    }

    /// Adds every entry of `other`, appending recordings to existing keys.
    pub fn merge(&self, other: &MemoryStore) {
        let theirs = other.snapshot();
        let mut mine = self.lock();
        for (k, e) in theirs {
            let m = mine.entry(k).or_default();
            if m.summary.is_none() {
                m.summary = e.summary;
            }
            m.recordings.extend(e.recordings);
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, BTreeMap<String, MemoryEntry>> {
        self.entries.lock().unwrap_or_else(|p| p.into_inner())
    }
}

fn read_entries(path: &Path) -> Result<BTreeMap<String, MemoryEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
}

fn write_entries(path: &Path, entries: &BTreeMap<String, MemoryEntry>) -> Result<()> {
    let text = serde_json::to_string_pretty(entries).map_err(|e| Error::json("memory", e))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::Action;

    fn act(name: &str, object: &str) -> StructuredAction {
        let a = match name {
            "explore" => Action::Explore { object: object.into(), strategy: "bfs".into() },
            "approach" => Action::Approach { object: object.into() },
            "mine" => Action::Mine { object: object.into(), tool: None, count: None },
            "equip" => Action::Equip { object: object.into() },
            _ => unreachable!(),
        };
        StructuredAction::new(a)
    }

    fn seq(steps: &[(&str, &str)]) -> ActionSequence {
        ActionSequence::new(steps.iter().map(|(n, o)| act(n, o)).collect(), "t", 0)
    }

    #[test]
    fn fifth_recording_collapses_to_summary() {
        let m = MemoryStore::new();
        let s = seq(&[("explore", "log"), ("approach", "log"), ("mine", "log")]);
        for _ in 0..4 {
            m.record("log", s.clone()).unwrap();
        }
        assert_eq!(m.entry("log").unwrap().recordings.len(), 4);
        m.record("log", s.clone()).unwrap();
        let e = m.entry("log").unwrap();
        assert!(e.summary.is_some());
        assert!(e.recordings.is_empty());
        assert_eq!(e.summary.unwrap().actions, s.actions);
    }

    #[test]
    fn summary_stays_first() {
        let m = MemoryStore::new();
        let s = seq(&[("explore", "log"), ("mine", "log")]);
        for _ in 0..5 {
            m.record("log", s.clone()).unwrap();
        }
        m.record("log", seq(&[("mine", "log")])).unwrap();
        m.record("log", seq(&[("equip", "axe")])).unwrap();
        let e = m.entry("log").unwrap();
        assert_eq!(e.recordings.len(), 2);
        assert_eq!(m.retrieve("log").unwrap().actions, s.actions);
        assert!(m.retrieve("stone").is_none());
    }

    #[test]
    fn disjoint_sequences_warn() {
        let seqs = vec![seq(&[("mine", "a")]), seq(&[("mine", "b")])];
        let s = heuristic_summarize(&seqs);
        assert!(s.warning);
        assert_eq!(s.sequence, seqs[0]);
    }
}
