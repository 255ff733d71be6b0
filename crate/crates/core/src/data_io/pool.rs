use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probdist::ProbVector;

/// Largest deviation of `Σ probs` from 1 that loading silently repairs.
pub const LOAD_DRIFT_TOL: f64 = 1e-6;

/// One candidate test sample, as stored one-per-line in a pool file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    #[serde(default)]
    pub task: String,
    #[serde(default)]
    pub context: String,
    #[serde(default)]
    pub question: String,
    pub options: Vec<String>,
    pub gold_index: usize,
    pub main_probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surrogate_probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl SampleRecord {
    pub fn main_dist(&self) -> Result<ProbVector> {
        ProbVector::new(self.main_probs.clone())
    }

    pub fn surrogate_dist(&self) -> Option<Result<ProbVector>> {
        self.surrogate_probs.clone().map(ProbVector::new)
    }

    /// Checks invariants and repairs small normalization drift in place.
    pub fn validate(&mut self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        let k = self.options.len();
        if k < 2 {
            return Err(format!("{k} options, need at least 2"));
        }
        if self.gold_index >= k {
            return Err(format!("gold_index {} out of range for {k} options", self.gold_index));
        }
        self.main_probs = repair(&self.main_probs, k).map_err(|e| format!("main_probs: {e}"))?;
        if let Some(s) = &self.surrogate_probs {
            let fixed = repair(s, k).map_err(|e| format!("surrogate_probs: {e}"))?;
            self.surrogate_probs = Some(fixed);
        }
        if let Some(e) = &self.embedding {
            if e.is_empty() {
                return Err("embedding is empty".into());
            }
            if e.iter().any(|x| !x.is_finite()) {
                return Err("embedding has non-finite entries".into());
            }
        }
        Ok(())
    }
}

fn repair(probs: &[f64], k: usize) -> std::result::Result<Vec<f64>, String> {
    if probs.len() != k {
        return Err(format!("{} entries for {k} options", probs.len()));
    }
    let sum: f64 = probs.iter().sum();
    if sum.is_finite() && (sum - 1.0).abs() > LOAD_DRIFT_TOL {
        return Err(format!("sums to {sum}, expected 1"));
    }
    ProbVector::normalize(probs)
        .map(ProbVector::into_inner)
        .map_err(|e| e.to_string())
}

/// Ingestion-time filters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Keep only records whose question has more than one sentence boundary.
    #[serde(default)]
    pub multi_sentence_only: bool,
}

/// Number of sentence boundaries: runs of `.`, `!` or `?` followed by
/// whitespace or the end of the text.
pub fn sentence_boundaries(text: &str) -> usize {
    let chars: Vec<char> = text.trim_end().chars().collect();
    let mut count = 0;
    let mut i = 0;
    while i < chars.len() {
        if matches!(chars[i], '.' | '!' | '?') {
            let mut j = i;
            while j + 1 < chars.len() && matches!(chars[j + 1], '.' | '!' | '?') {
                j += 1;
            }
            if j + 1 == chars.len() || chars[j + 1].is_whitespace() {
                count += 1;
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    count
}

pub fn has_multiple_sentences(text: &str) -> bool {
    sentence_boundaries(text) > 1
}

/// Parses and validates every line, collecting all errors.
pub fn parse_pool_lines<R: BufRead>(reader: R) -> (Vec<SampleRecord>, Vec<Error>) {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                errors.push(Error::Parse { line: line_no, message: e.to_string() });
                continue;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut rec: SampleRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                errors.push(Error::Parse { line: line_no, message: e.to_string() });
                continue;
            }
        };
        if let Err(reason) = rec.validate() {
            errors.push(Error::Validation { line: line_no, reason });
            continue;
        }
        if !seen.insert(rec.id.clone()) {
            errors.push(Error::DuplicateId { id: rec.id.clone(), line: line_no });
            continue;
        }
        records.push(rec);
    }
    (records, errors)
}

/// Reads a JSON Lines pool, failing on the first invalid line.
pub fn read_pool<R: BufRead>(reader: R, options: LoadOptions) -> Result<Vec<SampleRecord>> {
    let (records, mut errors) = parse_pool_lines(reader);
    if !errors.is_empty() {
        return Err(errors.remove(0));
    }
    let records: Vec<SampleRecord> = records
        .into_iter()
        .filter(|r| !options.multi_sentence_only || has_multiple_sentences(&r.question))
        .collect();
    if records.is_empty() {
        return Err(Error::EmptyPool);
    }
    Ok(records)
}

pub fn load_pool(path: impl AsRef<Path>) -> Result<Vec<SampleRecord>> {
    load_pool_with(path, LoadOptions::default())
}

pub fn load_pool_with(path: impl AsRef<Path>, options: LoadOptions) -> Result<Vec<SampleRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_pool(BufReader::new(file), options)
}

/// All line-level problems in a pool file; empty when the file is valid.
pub fn validate_pool_file(path: impl AsRef<Path>) -> Result<(usize, Vec<Error>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (records, mut errors) = parse_pool_lines(BufReader::new(file));
    if records.is_empty() && errors.is_empty() {
        errors.push(Error::EmptyPool);
    }
    Ok((records.len(), errors))
}

pub fn write_pool_to<W: Write>(mut w: W, records: &[SampleRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io("<pool writer>", e))?;
    }
    w.flush().map_err(|e| Error::io("<pool writer>", e))
}

pub fn write_pool(path: impl AsRef<Path>, records: &[SampleRecord]) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_pool_to(BufWriter::new(file), records)
}
