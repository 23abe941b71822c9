//! Essay corpora and the unified 1–6.5 holistic scale.
//!
//! W&I labels come as twelve CEFR bands (A1 … C2+), EFCAMDAT as a level 1–16
//! plus a 0–100 raw score. Both are mapped onto half-step numeric scores so the
//! rest of the pipeline only sees [`NumericScore`].

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate essay id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: invalid score {value}")]
    InvalidScore { line: usize, value: String },
    #[error("value {0} is out of range")]
    OutOfRange(String),
    #[error("prediction for unknown essay id {0:?}")]
    MissingEssay(String),
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

/// The twelve-level CEFR ladder used by W&I, ordered A1 < A1+ < … < C2+.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CefrLevel {
    A1,
    A1Plus,
    A2,
    A2Plus,
    B1,
    B1Plus,
    B2,
    B2Plus,
    C1,
    C1Plus,
    C2,
    C2Plus,
}

impl CefrLevel {
    pub const ALL: [CefrLevel; 12] = [
        CefrLevel::A1,
        CefrLevel::A1Plus,
        CefrLevel::A2,
        CefrLevel::A2Plus,
        CefrLevel::B1,
        CefrLevel::B1Plus,
        CefrLevel::B2,
        CefrLevel::B2Plus,
        CefrLevel::C1,
        CefrLevel::C1Plus,
        CefrLevel::C2,
        CefrLevel::C2Plus,
    ];

    fn index(self) -> u8 {
        self as u8
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CefrLevel::A1 => "A1",
            CefrLevel::A1Plus => "A1+",
            CefrLevel::A2 => "A2",
            CefrLevel::A2Plus => "A2+",
            CefrLevel::B1 => "B1",
            CefrLevel::B1Plus => "B1+",
            CefrLevel::B2 => "B2",
            CefrLevel::B2Plus => "B2+",
            CefrLevel::C1 => "C1",
            CefrLevel::C1Plus => "C1+",
            CefrLevel::C2 => "C2",
            CefrLevel::C2Plus => "C2+",
        }
    }

    /// The six-band level this sits in (A1+ → A1).
    pub fn band(self) -> CefrBand {
        CefrBand::ALL[usize::from(self.index() / 2)]
    }
}

impl fmt::Display for CefrLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CefrLevel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let wanted = s.trim().to_ascii_uppercase();
        CefrLevel::ALL
            .into_iter()
            .find(|l| l.as_str() == wanted)
            .ok_or_else(|| format!("unknown CEFR level {s:?}"))
    }
}

/// The six base CEFR bands. Analytic descriptors exist only at this granularity,
/// so graded aspects are reported as a band with numeric image 1..=6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CefrBand {
    A1,
    A2,
    B1,
    B2,
    C1,
    C2,
}

impl CefrBand {
    pub const ALL: [CefrBand; 6] = [
        CefrBand::A1,
        CefrBand::A2,
        CefrBand::B1,
        CefrBand::B2,
        CefrBand::C1,
        CefrBand::C2,
    ];

    pub fn numeric(self) -> u8 {
        self as u8 + 1
    }

    /// Inverse of [`CefrBand::numeric`].
    pub fn from_numeric(n: u8) -> Option<CefrBand> {
        CefrBand::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CefrBand::A1 => "A1",
            CefrBand::A2 => "A2",
            CefrBand::B1 => "B1",
            CefrBand::B2 => "B2",
            CefrBand::C1 => "C1",
            CefrBand::C2 => "C2",
        }
    }
}

impl fmt::Display for CefrBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CefrBand {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let wanted = s.trim().to_ascii_uppercase();
        CefrBand::ALL
            .into_iter()
            .find(|b| b.as_str() == wanted)
            .ok_or_else(|| format!("unknown CEFR band {s:?}"))
    }
}

/// A holistic score on the 1.0–6.5 half-step scale.
///
/// Stored as a count of half points so equality and hashing are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NumericScore(u8);

impl NumericScore {
    pub const MIN: NumericScore = NumericScore(2);
    pub const MAX: NumericScore = NumericScore(13);

    /// Accepts only exact multiples of 0.5 within [1.0, 6.5].
    pub fn new(value: f64) -> Option<NumericScore> {
        let halves = value * 2.0;
        if !halves.is_finite() || halves.fract() != 0.0 || !(2.0..=13.0).contains(&halves) {
            return None;
        }
        Some(NumericScore(halves as u8))
    }

    /// Rounds to the nearest half point, ties upward.
    pub fn nearest(value: f64) -> Result<NumericScore> {
        if !(1.0..=6.5).contains(&value) {
            return Err(CorpusError::OutOfRange(value.to_string()));
        }
        let halves = (value * 2.0 + 0.5).floor();
        Ok(NumericScore(halves as u8))
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

/// Minimal decimal form: `3` rather than `3.0`, `3.5` as is.
impl fmt::Display for NumericScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}.5", self.0 / 2)
        }
    }
}

pub fn cefr_to_numeric(level: CefrLevel) -> NumericScore {
    NumericScore(level.index() + 2)
}

pub fn numeric_to_cefr(score: f64) -> Result<CefrLevel> {
    let s = NumericScore::nearest(score)?;
    Ok(CefrLevel::ALL[usize::from(s.0 - 2)])
}

/// EFCAMDAT level (1–16) and raw score (0–100) onto the unified scale.
pub fn efcamdat_align(level: u8, raw_score: u8) -> Result<NumericScore> {
    if !(1..=16).contains(&level) {
        return Err(CorpusError::OutOfRange(format!("EFCAMDAT level {level}")));
    }
    if raw_score > 100 {
        return Err(CorpusError::OutOfRange(format!("EFCAMDAT score {raw_score}")));
    }
    let halves = match level {
        1 | 2 => 2,
        3 => 3,
        4 | 5 => 4,
        6 => 5,
        7 | 8 => 6,
        9 => 7,
        10 | 11 => 8,
        12 => 9,
        13 | 14 => 10,
        15 => 11,
        _ if raw_score < 85 => 12,
        _ => 13,
    };
    Ok(NumericScore(halves))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Source {
    Wi,
    Efcamdat,
    #[default]
    Synthetic,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Wi => "WI",
            Source::Efcamdat => "EFCAMDAT",
            Source::Synthetic => "SYNTHETIC",
        }
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "WI" | "W&I" => Ok(Source::Wi),
            "EFCAMDAT" => Ok(Source::Efcamdat),
            "SYNTHETIC" => Ok(Source::Synthetic),
            other => Err(format!("unknown source {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EssayRecord {
    pub id: String,
    pub text: String,
    pub corrected_text: Option<String>,
    pub holistic_gt: Option<NumericScore>,
    pub holistic_pred: Option<NumericScore>,
    pub source: Source,
}

impl EssayRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> EssayRecord {
        EssayRecord {
            id: id.into(),
            text: text.into(),
            corrected_text: None,
            holistic_gt: None,
            holistic_pred: None,
            source: Source::Synthetic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub name: String,
    pub records: Vec<EssayRecord>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&EssayRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Serializes in the corpus JSONL schema. Holistic ground truth is written
    /// as a numeric `score`; predictions are not part of the corpus schema.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let row = CorpusRow {
                id: r.id.clone(),
                text: r.text.clone(),
                corrected_text: r.corrected_text.clone(),
                cefr: None,
                score: r.holistic_gt.map(|s| s.value()),
                source: Some(r.source.as_str().to_string()),
            };
            out.push_str(&serde_json::to_string(&row).expect("corpus rows serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    pub fn from_path(path: &Path) -> CorpusFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusRow {
    id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    corrected_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cefr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn parse_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let content = read_file(path)?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("corpus")
        .to_string();
    let mut corpus = match format {
        CorpusFormat::Jsonl => parse_corpus_jsonl(&content)?,
        CorpusFormat::Csv => parse_corpus_csv(&content)?,
    };
    corpus.name = name;
    Ok(corpus)
}

pub fn parse_corpus_jsonl(content: &str) -> Result<Corpus> {
    let mut rows = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: CorpusRow = serde_json::from_str(line).map_err(|e| CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        rows.push((i + 1, row));
    }
    build_corpus(rows)
}

pub fn parse_corpus_csv(content: &str) -> Result<Corpus> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(content.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let mut rows = Vec::new();
    for result in reader.records() {
        let rec = result.map_err(|e| CorpusError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |name: &str| -> Option<String> {
            headers
                .iter()
                .position(|h| h == name)
                .and_then(|i| rec.get(i))
                .filter(|v| !v.is_empty())
                .map(str::to_string)
        };
        let score = match field("score") {
            Some(v) => Some(
                v.parse::<f64>()
                    .map_err(|_| CorpusError::InvalidScore { line, value: v.clone() })?,
            ),
            None => None,
        };
        let row = CorpusRow {
            id: field("id").unwrap_or_default(),
            text: field("text").unwrap_or_default(),
            corrected_text: field("corrected_text"),
            cefr: field("cefr"),
            score,
            source: field("source"),
        };
        rows.push((line, row));
    }
    build_corpus(rows)
}

fn build_corpus(rows: Vec<(usize, CorpusRow)>) -> Result<Corpus> {
    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        if row.id.is_empty() {
            return Err(CorpusError::Parse {
                line,
                message: "empty essay id".into(),
            });
        }
        if row.text.trim().is_empty() {
            return Err(CorpusError::Parse {
                line,
                message: format!("essay {:?} has empty text", row.id),
            });
        }
        if !seen.insert(row.id.clone()) {
            return Err(CorpusError::DuplicateId { line, id: row.id });
        }
        let holistic_gt = match (&row.cefr, row.score) {
            (Some(_), Some(_)) => {
                return Err(CorpusError::Parse {
                    line,
                    message: "both `cefr` and `score` given".into(),
                })
            }
            (Some(c), None) => {
                let level = c
                    .parse::<CefrLevel>()
                    .map_err(|message| CorpusError::Parse { line, message })?;
                Some(cefr_to_numeric(level))
            }
            (None, Some(v)) => Some(NumericScore::new(v).ok_or(CorpusError::InvalidScore {
                line,
                value: v.to_string(),
            })?),
            (None, None) => None,
        };
        let source = match &row.source {
            Some(s) => s
                .parse::<Source>()
                .map_err(|message| CorpusError::Parse { line, message })?,
            None => Source::default(),
        };
        if source == Source::Wi && holistic_gt.is_none() {
            return Err(CorpusError::Parse {
                line,
                message: format!("W&I essay {:?} has no CEFR label", row.id),
            });
        }
        records.push(EssayRecord {
            id: row.id,
            text: row.text,
            corrected_text: row.corrected_text,
            holistic_gt,
            holistic_pred: None,
            source,
        });
    }
    Ok(Corpus {
        name: String::new(),
        records,
    })
}

#[derive(Debug, Deserialize)]
struct PredictionRow {
    id: String,
    score: f64,
}

/// Outcome of attaching a predictions sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMerge {
    pub corpus: Corpus,
    pub matched: usize,
    /// Prediction ids with no essay in the corpus (non-strict mode only).
    pub unmatched: Vec<String>,
}

pub fn load_predictions(corpus: Corpus, path: &Path, strict: bool) -> Result<PredictionMerge> {
    let content = read_file(path)?;
    merge_predictions(corpus, &content, strict)
}

/// Predictions are continuous grader outputs; they are snapped to the nearest
/// half point (ties up) so they live on the same scale as the labels.
pub fn merge_predictions(mut corpus: Corpus, content: &str, strict: bool) -> Result<PredictionMerge> {
    let index: HashMap<String, usize> = corpus
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.clone(), i))
        .collect();
    let mut matched = 0;
    let mut unmatched = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: PredictionRow = serde_json::from_str(line).map_err(|e| CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let score = NumericScore::nearest(row.score).map_err(|_| CorpusError::InvalidScore {
            line: i + 1,
            value: row.score.to_string(),
        })?;
        match index.get(&row.id) {
            Some(&idx) => {
                corpus.records[idx].holistic_pred = Some(score);
                matched += 1;
            }
            None if strict => return Err(CorpusError::MissingEssay(row.id)),
            None => unmatched.push(row.id),
        }
    }
    Ok(PredictionMerge {
        corpus,
        matched,
        unmatched,
    })
}
