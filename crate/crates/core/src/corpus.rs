//! Essay corpus loading, stratified sampling, and calibration-set curation.
//!
//! Corpora are flat files (CSV or JSONL) with four columns/keys:
//! `essay_id`, `prompt_id`, `score`, `full_text`. Essays pass through
//! verbatim; the only normalization applied anywhere is rejecting rows
//! whose text is empty after trimming.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::score::{Score, NUM_LEVELS};

/// One corpus essay with its human ground-truth score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EssayRecord {
    pub essay_id: String,
    pub prompt_id: String,
    #[serde(rename = "score")]
    pub human_score: Score,
    #[serde(rename = "full_text")]
    pub text: String,
}

/// Where a collection came from, carried along for audit sidecars.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// An ordered, duplicate-free set of essays. Immutable once built.
#[derive(Debug, Clone)]
pub struct EssayCollection {
    records: Vec<EssayRecord>,
    pub provenance: Provenance,
}

/// The few-shot example pool: exactly `k` essays per rubric level.
#[derive(Debug, Clone)]
pub struct CalibrationSet {
    per_level: BTreeMap<Score, Vec<EssayRecord>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Csv,
    Jsonl,
}

impl CorpusFormat {
    /// Infer the format from a file extension (`.csv` vs `.jsonl`/`.json`).
    pub fn from_path(path: &Path) -> Result<Self, CorpusError> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(CorpusFormat::Csv),
            Some("jsonl") | Some("json") | Some("ndjson") => Ok(CorpusFormat::Jsonl),
            other => Err(CorpusError::UnknownFormat {
                path: path.to_path_buf(),
                extension: other.unwrap_or("").to_string(),
            }),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot infer corpus format of {path} from extension {extension:?}")]
    UnknownFormat { path: PathBuf, extension: String },
    #[error("{path}:{line}: malformed row: {message}")]
    MalformedRow {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: essay {essay_id:?}: score {value} outside the 1-6 scale")]
    ScoreOutOfRange {
        path: PathBuf,
        line: usize,
        essay_id: String,
        value: i64,
    },
    #[error("{path}:{line}: essay {essay_id:?}: text is empty after trimming")]
    EmptyText {
        path: PathBuf,
        line: usize,
        essay_id: String,
    },
    #[error("{path}:{line}: duplicate essay_id {essay_id:?}")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        essay_id: String,
    },
    #[error("essay {essay_id:?}: {message}")]
    InvalidRecord { essay_id: String, message: String },
    #[error("sample size must be positive")]
    NonPositiveSample,
    #[error("requested sample of {requested} exceeds pool size {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("level {level}: stratum has {available} essays but the allocation requires {required}")]
    StratumTooSmall {
        level: Score,
        available: usize,
        required: usize,
    },
    #[error("level {level}: only {available} calibration candidates available, need {required}")]
    InsufficientCalibration {
        level: Score,
        available: usize,
        required: usize,
    },
    #[error("k_per_level must be positive")]
    NonPositiveK,
    #[error("calibration set missing level {level}")]
    MissingLevel { level: Score },
    #[error("calibration set has {found} essays at level {level}, expected {expected}")]
    UnevenLevel {
        level: Score,
        found: usize,
        expected: usize,
    },
    #[error("essay {essay_id:?} listed under level {level} but carries human score {actual}")]
    LevelMismatch {
        essay_id: String,
        level: Score,
        actual: Score,
    },
}

/// Raw row as it appears on disk; scores validated after deserialization so
/// range errors carry row context.
#[derive(Debug, Serialize, Deserialize)]
struct RawRow {
    essay_id: String,
    prompt_id: String,
    score: i64,
    full_text: String,
}

/// Calibration rows carry the level explicitly.
#[derive(Debug, Serialize, Deserialize)]
struct CalibrationRow {
    essay_id: String,
    prompt_id: String,
    score: i64,
    full_text: String,
    level: i64,
}

fn validate_row(
    row: RawRow,
    path: &Path,
    line: usize,
    seen: &mut HashSet<String>,
) -> Result<EssayRecord, CorpusError> {
    let human_score = Score::new(row.score).map_err(|_| CorpusError::ScoreOutOfRange {
        path: path.to_path_buf(),
        line,
        essay_id: row.essay_id.clone(),
        value: row.score,
    })?;
    if row.full_text.trim().is_empty() {
        return Err(CorpusError::EmptyText {
            path: path.to_path_buf(),
            line,
            essay_id: row.essay_id,
        });
    }
    if !seen.insert(row.essay_id.clone()) {
        return Err(CorpusError::DuplicateId {
            path: path.to_path_buf(),
            line,
            essay_id: row.essay_id,
        });
    }
    Ok(EssayRecord {
        essay_id: row.essay_id,
        prompt_id: row.prompt_id,
        human_score,
        text: row.full_text,
    })
}

/// Load a corpus file, rejecting rows that violate the record invariants.
/// Errors name the offending row and field.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<EssayCollection, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    match format {
        CorpusFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
            for (i, row) in reader.deserialize::<RawRow>().enumerate() {
                // line 1 is the header, so data row i sits on line i + 2
                let line = i + 2;
                let row = row.map_err(|e| CorpusError::MalformedRow {
                    path: path.to_path_buf(),
                    line,
                    message: e.to_string(),
                })?;
                records.push(validate_row(row, path, line, &mut seen)?);
            }
        }
        CorpusFormat::Jsonl => {
            let reader = BufReader::new(file);
            for (i, line_result) in reader.lines().enumerate() {
                let line = i + 1;
                let text = line_result.map_err(|source| CorpusError::Io {
                    path: path.to_path_buf(),
                    source,
                })?;
                if text.trim().is_empty() {
                    continue;
                }
                let row: RawRow =
                    serde_json::from_str(&text).map_err(|e| CorpusError::MalformedRow {
                        path: path.to_path_buf(),
                        line,
                        message: e.to_string(),
                    })?;
                records.push(validate_row(row, path, line, &mut seen)?);
            }
        }
    }
    Ok(EssayCollection {
        records,
        provenance: Provenance {
            source: path.display().to_string(),
            seed: None,
        },
    })
}

impl EssayCollection {
    /// Build a collection from in-memory records, enforcing the invariants.
    pub fn from_records(
        records: Vec<EssayRecord>,
        provenance: Provenance,
    ) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for record in &records {
            if record.text.trim().is_empty() {
                return Err(CorpusError::InvalidRecord {
                    essay_id: record.essay_id.clone(),
                    message: "text is empty after trimming".into(),
                });
            }
            if !seen.insert(record.essay_id.as_str()) {
                return Err(CorpusError::InvalidRecord {
                    essay_id: record.essay_id.clone(),
                    message: "duplicate essay_id".into(),
                });
            }
        }
        Ok(EssayCollection {
            records,
            provenance,
        })
    }

    pub fn records(&self) -> &[EssayRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn essay_ids(&self) -> HashSet<&str> {
        self.records.iter().map(|r| r.essay_id.as_str()).collect()
    }

    /// Count of essays at each level, indexed by `Score::index`.
    pub fn level_histogram(&self) -> [usize; NUM_LEVELS] {
        let mut counts = [0usize; NUM_LEVELS];
        for record in &self.records {
            counts[record.human_score.index()] += 1;
        }
        counts
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for record in &self.records {
            let line = serde_json::to_string(record).expect("record serializes");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<(), CorpusError> {
        let file = File::create(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_jsonl(BufWriter::new(file))
            .map_err(|source| CorpusError::Io {
                path: path.to_path_buf(),
                source,
            })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut writer = csv::Writer::from_writer(out);
        for record in &self.records {
            writer.serialize(record)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Proportional allocation of `n_total` over the six strata using the
/// largest-remainder method. Remainder ties go to the lower score level.
pub fn largest_remainder_allocation(
    counts: &[usize; NUM_LEVELS],
    n_total: usize,
) -> [usize; NUM_LEVELS] {
    let pool: usize = counts.iter().sum();
    assert!(pool > 0, "allocation over an empty pool");
    assert!(n_total <= pool, "allocation exceeds pool");
    let mut alloc = [0usize; NUM_LEVELS];
    let mut remainders = [0usize; NUM_LEVELS];
    for i in 0..NUM_LEVELS {
        let numerator = n_total * counts[i];
        alloc[i] = numerator / pool;
        remainders[i] = numerator % pool;
    }
    let assigned: usize = alloc.iter().sum();
    let mut order: Vec<usize> = (0..NUM_LEVELS).collect();
    order.sort_by(|&a, &b| remainders[b].cmp(&remainders[a]).then(a.cmp(&b)));
    for &i in order.iter().take(n_total - assigned) {
        alloc[i] += 1;
    }
    alloc
}

/// Pick `amount` distinct items from `candidates` uniformly at random,
/// preserving the original relative order of the chosen items.
fn sample_indices(candidates: &[usize], amount: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    debug_assert!(amount <= candidates.len());
    let mut scratch: Vec<usize> = candidates.to_vec();
    for i in 0..amount {
        let j = rng.random_range(i..scratch.len());
        scratch.swap(i, j);
    }
    let mut chosen = scratch[..amount].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Draw a stratified sample of `n_total` essays, proportional to the pool's
/// score histogram. Deterministic for a fixed seed; uniform without
/// replacement within each stratum. Output preserves pool order.
pub fn stratified_sample(
    pool: &EssayCollection,
    n_total: usize,
    seed: u64,
) -> Result<EssayCollection, CorpusError> {
    if n_total == 0 {
        return Err(CorpusError::NonPositiveSample);
    }
    if n_total > pool.len() {
        return Err(CorpusError::SampleTooLarge {
            requested: n_total,
            available: pool.len(),
        });
    }
    let histogram = pool.level_histogram();
    let allocation = largest_remainder_allocation(&histogram, n_total);
    for i in 0..NUM_LEVELS {
        if allocation[i] > histogram[i] {
            return Err(CorpusError::StratumTooSmall {
                level: Score::from_index(i),
                available: histogram[i],
                required: allocation[i],
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: HashSet<usize> = HashSet::with_capacity(n_total);
    for level in Score::all() {
        let candidates: Vec<usize> = pool
            .records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.human_score == level)
            .map(|(i, _)| i)
            .collect();
        for idx in sample_indices(&candidates, allocation[level.index()], &mut rng) {
            chosen.insert(idx);
        }
    }

    let records: Vec<EssayRecord> = pool
        .records
        .iter()
        .enumerate()
        .filter(|(i, _)| chosen.contains(i))
        .map(|(_, r)| r.clone())
        .collect();
    Ok(EssayCollection {
        records,
        provenance: Provenance {
            source: pool.provenance.source.clone(),
            seed: Some(seed),
        },
    })
}

/// Curate a calibration set of `k_per_level` essays per level, drawn from
/// `pool` minus `exclude`. Deterministic per seed; errors name the first
/// level that cannot be filled.
pub fn select_calibration(
    pool: &EssayCollection,
    k_per_level: usize,
    seed: u64,
    exclude: &EssayCollection,
) -> Result<CalibrationSet, CorpusError> {
    if k_per_level == 0 {
        return Err(CorpusError::NonPositiveK);
    }
    let excluded = exclude.essay_ids();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_level = BTreeMap::new();
    for level in Score::all() {
        let candidates: Vec<usize> = pool
            .records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.human_score == level && !excluded.contains(r.essay_id.as_str()))
            .map(|(i, _)| i)
            .collect();
        if candidates.len() < k_per_level {
            return Err(CorpusError::InsufficientCalibration {
                level,
                available: candidates.len(),
                required: k_per_level,
            });
        }
        let picks = sample_indices(&candidates, k_per_level, &mut rng);
        per_level.insert(
            level,
            picks.into_iter().map(|i| pool.records[i].clone()).collect(),
        );
    }
    CalibrationSet::from_per_level(per_level)
}

/// List every essay_id appearing in both the collection and the calibration
/// set. Empty means the two are disjoint.
pub fn verify_disjoint(collection: &EssayCollection, calibration: &CalibrationSet) -> Vec<String> {
    let ids = collection.essay_ids();
    let mut shared: Vec<String> = calibration
        .iter_ordered()
        .filter(|r| ids.contains(r.essay_id.as_str()))
        .map(|r| r.essay_id.clone())
        .collect();
    shared.sort();
    shared
}

impl CalibrationSet {
    /// Validate and adopt a per-level map: all six levels present with the
    /// same positive count, each record scored at its level key, ids unique.
    pub fn from_per_level(
        per_level: BTreeMap<Score, Vec<EssayRecord>>,
    ) -> Result<Self, CorpusError> {
        let k = per_level.values().next().map(|v| v.len()).unwrap_or(0);
        if k == 0 {
            return Err(CorpusError::NonPositiveK);
        }
        let mut seen = HashSet::new();
        for level in Score::all() {
            let entries = per_level
                .get(&level)
                .ok_or(CorpusError::MissingLevel { level })?;
            if entries.len() != k {
                return Err(CorpusError::UnevenLevel {
                    level,
                    found: entries.len(),
                    expected: k,
                });
            }
            for record in entries {
                if record.human_score != level {
                    return Err(CorpusError::LevelMismatch {
                        essay_id: record.essay_id.clone(),
                        level,
                        actual: record.human_score,
                    });
                }
                if !seen.insert(record.essay_id.clone()) {
                    return Err(CorpusError::InvalidRecord {
                        essay_id: record.essay_id.clone(),
                        message: "duplicate essay_id".into(),
                    });
                }
            }
        }
        Ok(CalibrationSet { per_level })
    }

    pub fn k_per_level(&self) -> usize {
        self.per_level.values().next().map(|v| v.len()).unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.per_level.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn level(&self, level: Score) -> &[EssayRecord] {
        self.per_level
            .get(&level)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Iterate ascending by level, `k` records per level.
    pub fn iter_ordered(&self) -> impl Iterator<Item = &EssayRecord> {
        self.per_level.values().flat_map(|v| v.iter())
    }

    pub fn essay_ids(&self) -> HashSet<&str> {
        self.iter_ordered().map(|r| r.essay_id.as_str()).collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for record in self.iter_ordered() {
            let row = CalibrationRow {
                essay_id: record.essay_id.clone(),
                prompt_id: record.prompt_id.clone(),
                score: i64::from(record.human_score.value()),
                full_text: record.text.clone(),
                level: i64::from(record.human_score.value()),
            };
            let line = serde_json::to_string(&row).expect("row serializes");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<(), CorpusError> {
        let file = File::create(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_jsonl(BufWriter::new(file))
            .map_err(|source| CorpusError::Io {
                path: path.to_path_buf(),
                source,
            })
    }

    pub fn load_jsonl(path: &Path) -> Result<Self, CorpusError> {
        let mut file = File::open(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut contents = String::new();
        file.read_to_string(&mut contents)
            .map_err(|source| CorpusError::Io {
                path: path.to_path_buf(),
                source,
            })?;
        let mut per_level: BTreeMap<Score, Vec<EssayRecord>> = BTreeMap::new();
        for (i, line) in contents.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: CalibrationRow =
                serde_json::from_str(line).map_err(|e| CorpusError::MalformedRow {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
            let level = Score::new(row.level).map_err(|_| CorpusError::ScoreOutOfRange {
                path: path.to_path_buf(),
                line: i + 1,
                essay_id: row.essay_id.clone(),
                value: row.level,
            })?;
            let human_score = Score::new(row.score).map_err(|_| CorpusError::ScoreOutOfRange {
                path: path.to_path_buf(),
                line: i + 1,
                essay_id: row.essay_id.clone(),
                value: row.score,
            })?;
            per_level.entry(level).or_default().push(EssayRecord {
                essay_id: row.essay_id,
                prompt_id: row.prompt_id,
                human_score,
                text: row.full_text,
            });
        }
        CalibrationSet::from_per_level(per_level)
    }
}

/// Map from a run of records to a per-level index, used by tests and tools.
pub fn group_by_level(records: &[EssayRecord]) -> HashMap<Score, Vec<&EssayRecord>> {
    let mut map: HashMap<Score, Vec<&EssayRecord>> = HashMap::new();
    for record in records {
        map.entry(record.human_score).or_default().push(record);
    }
    map
}
