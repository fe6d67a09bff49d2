//! Pseudonymous leaderboard with k-anonymity-gated aggregates.
//!
//! Public views expose only `{pseudonym, composite}` per user and
//! aggregates over at least `k_min` users. Writes are serialized behind one
//! lock and readers always see a complete snapshot.
//!
//! When opened on a directory the store keeps two files:
//!
//! * `leaderboard.csv`: one row per pseudonym with the nine boundary
//!   scores as named columns, rewritten atomically on every submission.
//! * `feedback.jsonl`: append-only feedback bodies.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::{Boundary, BoundaryScores, BoundaryWeights, BOUNDARY_COUNT};
use crate::item::validate_pseudonym;
use crate::scoring;

pub const DEFAULT_K_MIN: usize = 5;
pub const DEFAULT_TOP_N: usize = 10;
/// Allowed gap between a submitted composite and the recomputed one.
pub const CONSISTENCY_TOLERANCE: f64 = 0.1;

const LEADERBOARD_FILE: &str = "leaderboard.csv";
const FEEDBACK_FILE: &str = "feedback.jsonl";

#[derive(Debug, Error)]
pub enum LeaderboardError {
    #[error("invalid entry: {0}")]
    InvalidEntry(String),
    #[error("composite {submitted} does not match recomputed {recomputed}")]
    ConsistencyError { submitted: f64, recomputed: f64 },
    #[error("store {path}: {message}")]
    Storage { path: PathBuf, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub pseudonym: String,
    pub campus: String,
    pub composite: f64,
    pub boundary_scores: BoundaryScores,
    /// UTC seconds.
    pub submitted_at: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Ack {
    pub ok: bool,
    pub rank_estimate: usize,
}

/// The only per-user view that crosses user boundaries.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TopEntry {
    pub pseudonym: String,
    pub composite: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeaderboardSummary {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_composite: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_composite: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sd_composite: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_boundary_means: Option<BoundaryScores>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub campus_filter: Option<String>,
}

impl LeaderboardSummary {
    pub fn is_suppressed(&self) -> bool {
        self.mean_composite.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub pseudonym: String,
    pub body: String,
    pub submitted_at: i64,
}

#[derive(Debug, Default)]
struct State {
    entries: BTreeMap<String, LeaderboardEntry>,
    feedback: usize,
}

pub struct Leaderboard {
    weights: BoundaryWeights,
    dir: Option<PathBuf>,
    state: RwLock<State>,
}

impl Leaderboard {
    pub fn in_memory(weights: BoundaryWeights) -> Self {
        Self {
            weights,
            dir: None,
            state: RwLock::new(State::default()),
        }
    }

    /// Opens (creating if needed) a file-backed store in `dir`.
    pub fn open(dir: impl AsRef<Path>, weights: BoundaryWeights) -> Result<Self, LeaderboardError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| storage_err(&dir, e))?;
        let board = Self {
            weights,
            dir: Some(dir.clone()),
            state: RwLock::new(State::default()),
        };
        let entries = read_entries(&dir.join(LEADERBOARD_FILE))?;
        let feedback = count_lines(&dir.join(FEEDBACK_FILE))?;
        {
            let mut state = board.state.write();
            for entry in entries {
                board.validate(&entry)?;
                state.entries.insert(entry.pseudonym.clone(), entry);
            }
            state.feedback = feedback;
        }
        Ok(board)
    }

    pub fn weights(&self) -> &BoundaryWeights {
        &self.weights
    }

    pub fn validate(&self, entry: &LeaderboardEntry) -> Result<(), LeaderboardError> {
        validate_pseudonym(&entry.pseudonym).map_err(|e| LeaderboardError::InvalidEntry(e.to_string()))?;
        if entry.campus.trim().is_empty() || entry.campus.contains(['\n', '\r']) {
            return Err(LeaderboardError::InvalidEntry("campus must be a non-empty single line".into()));
        }
        if !(0.0..=100.0).contains(&entry.composite) {
            return Err(LeaderboardError::InvalidEntry(format!(
                "composite {} is outside [0, 100]",
                entry.composite
            )));
        }
        let recomputed = scoring::composite(&entry.boundary_scores, &self.weights);
        if (entry.composite - recomputed).abs() > CONSISTENCY_TOLERANCE + 1e-9 {
            return Err(LeaderboardError::ConsistencyError {
                submitted: entry.composite,
                recomputed,
            });
        }
        Ok(())
    }

    /// Stores `entry`, replacing any earlier entry with the same pseudonym.
    pub fn submit_score(&self, entry: LeaderboardEntry) -> Result<Ack, LeaderboardError> {
        self.validate(&entry)?;
        let mut state = self.state.write();
        let composite = entry.composite;
        let previous = state.entries.insert(entry.pseudonym.clone(), entry.clone());
        if let Some(dir) = &self.dir {
            if let Err(e) = write_entries(dir, state.entries.values()) {
                // keep memory and disk in step
                match previous {
                    Some(prev) => state.entries.insert(prev.pseudonym.clone(), prev),
                    None => state.entries.remove(&entry.pseudonym),
                };
                return Err(e);
            }
        }
        let rank_estimate = 1 + state.entries.values().filter(|e| e.composite > composite).count();
        Ok(Ack {
            ok: true,
            rank_estimate,
        })
    }

    /// Write-only feedback store.
    pub fn submit_feedback(&self, pseudonym: &str, body: &str, submitted_at: i64) -> Result<(), LeaderboardError> {
        validate_pseudonym(pseudonym).map_err(|e| LeaderboardError::InvalidEntry(e.to_string()))?;
        let mut state = self.state.write();
        if let Some(dir) = &self.dir {
            let record = FeedbackRecord {
                pseudonym: pseudonym.to_string(),
                body: body.to_string(),
                submitted_at,
            };
            let path = dir.join(FEEDBACK_FILE);
            let mut line = serde_json::to_string(&record).expect("feedback record serializes");
            line.push('\n');
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .and_then(|mut f| f.write_all(line.as_bytes()))
                .map_err(|e| storage_err(&path, e))?;
        }
        state.feedback += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.state.read().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn feedback_count(&self) -> usize {
        self.state.read().feedback
    }

    /// Full copy of the stored rows, for operators only.
    pub fn snapshot(&self) -> Vec<LeaderboardEntry> {
        self.state.read().entries.values().cloned().collect()
    }

    pub fn summary(&self, campus_filter: Option<&str>, k_min: usize) -> LeaderboardSummary {
        let state = self.state.read();
        let selected: Vec<&LeaderboardEntry> = state
            .entries
            .values()
            .filter(|e| campus_filter.is_none_or(|c| e.campus == c))
            .collect();
        summarise(&selected, campus_filter, k_min)
    }

    /// Highest composites first; ties by earlier submission, then pseudonym.
    pub fn top_n(&self, n: usize, campus_filter: Option<&str>) -> Vec<TopEntry> {
        let state = self.state.read();
        let mut rows: Vec<&LeaderboardEntry> = state
            .entries
            .values()
            .filter(|e| campus_filter.is_none_or(|c| e.campus == c))
            .collect();
        rows.sort_by(|a, b| {
            b.composite
                .total_cmp(&a.composite)
                .then(a.submitted_at.cmp(&b.submitted_at))
                .then_with(|| a.pseudonym.cmp(&b.pseudonym))
        });
        rows.into_iter()
            .take(n)
            .map(|e| TopEntry {
                pseudonym: e.pseudonym.clone(),
                composite: e.composite,
            })
            .collect()
    }
}

fn summarise(entries: &[&LeaderboardEntry], campus_filter: Option<&str>, k_min: usize) -> LeaderboardSummary {
    let n = entries.len();
    let mut summary = LeaderboardSummary {
        n,
        top_composite: None,
        mean_composite: None,
        sd_composite: None,
        per_boundary_means: None,
        campus_filter: campus_filter.map(str::to_string),
    };
    if n == 0 || n < k_min.max(1) {
        return summary;
    }
    let count = n as f64;
    let mean = entries.iter().map(|e| e.composite).sum::<f64>() / count;
    let variance = entries.iter().map(|e| (e.composite - mean).powi(2)).sum::<f64>() / count;
    let top = entries
        .iter()
        .map(|e| e.composite)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut means = [0.0; BOUNDARY_COUNT];
    for b in Boundary::ALL {
        let total: f64 = entries.iter().map(|e| e.boundary_scores.get(b)).sum();
        means[b.index()] = (total / count).clamp(0.0, 100.0);
    }
    summary.top_composite = Some(top);
    summary.mean_composite = Some(mean);
    summary.sd_composite = Some(variance.sqrt());
    summary.per_boundary_means = Some(BoundaryScores::new(means).expect("means of valid scores"));
    summary
}

fn storage_err(path: &Path, e: impl std::fmt::Display) -> LeaderboardError {
    LeaderboardError::Storage {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn header() -> Vec<&'static str> {
    let mut h = vec!["pseudonym", "campus", "composite"];
    h.extend(Boundary::ALL.map(Boundary::code));
    h.push("submitted_at");
    h
}

fn write_entries<'a>(dir: &Path, entries: impl Iterator<Item = &'a LeaderboardEntry>) -> Result<(), LeaderboardError> {
    let path = dir.join(LEADERBOARD_FILE);
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| storage_err(dir, e))?;
    {
        let mut w = csv::Writer::from_writer(tmp.as_file());
        w.write_record(header()).map_err(|e| storage_err(&path, e))?;
        for e in entries {
            let mut row = vec![e.pseudonym.clone(), e.campus.clone(), e.composite.to_string()];
            row.extend(e.boundary_scores.as_array().iter().map(f64::to_string));
            row.push(e.submitted_at.to_string());
            w.write_record(&row).map_err(|e| storage_err(&path, e))?;
        }
        w.flush().map_err(|e| storage_err(&path, e))?;
    }
    tmp.persist(&path).map_err(|e| storage_err(&path, e))?;
    Ok(())
}

fn read_entries(path: &Path) -> Result<Vec<LeaderboardEntry>, LeaderboardError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut rdr = csv::Reader::from_path(path).map_err(|e| storage_err(path, e))?;
    let headers = rdr.headers().map_err(|e| storage_err(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != header() {
        return Err(storage_err(path, "unexpected leaderboard header"));
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| storage_err(path, e))?;
        let num = |i: usize| -> Result<f64, LeaderboardError> {
            record[i]
                .parse()
                .map_err(|_| storage_err(path, format!("bad number `{}`", &record[i])))
        };
        let mut scores = [0.0; BOUNDARY_COUNT];
        for (k, slot) in scores.iter_mut().enumerate() {
            *slot = num(3 + k)?;
        }
        out.push(LeaderboardEntry {
            pseudonym: record[0].to_string(),
            campus: record[1].to_string(),
            composite: num(2)?,
            boundary_scores: BoundaryScores::new(scores).map_err(|e| storage_err(path, e))?,
            submitted_at: record[3 + BOUNDARY_COUNT]
                .parse()
                .map_err(|_| storage_err(path, "bad submitted_at"))?,
        });
    }
    Ok(out)
}

fn count_lines(path: &Path) -> Result<usize, LeaderboardError> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(text.lines().filter(|l| !l.trim().is_empty()).count()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(0),
        Err(e) => Err(storage_err(path, e)),
    }
}
