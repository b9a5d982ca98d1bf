//! Corpus data model: utterance records, manifest I/O, validation, seeded
//! splits and training-composition selection.
//!
//! Two on-disk formats are supported. The delimited format is UTF-8 CSV with
//! the header
//!
//! ```text
//! utterance_id,speaker_id,dataset_id,group,severity,words,phonemes,audio_path
//! ```
//!
//! optionally followed by a ninth `partition` column (`train|dev|eval`, or
//! empty). Token fields hold space-separated tokens and are quoted when they
//! contain a separator. The record-per-line format holds one JSON object per
//! line with the same field names and the same string encodings.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column names of the delimited manifest format, in order.
pub const MANIFEST_COLUMNS: [&str; 8] = [
    "utterance_id",
    "speaker_id",
    "dataset_id",
    "group",
    "severity",
    "words",
    "phonemes",
    "audio_path",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Normal,
    Clp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    None,
    Mild,
    Moderate,
    Severe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Dev,
    Eval,
}

/// Group/severity cell used to describe training compositions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Normal,
    Mild,
    Moderate,
    Severe,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Normal => "normal",
            Group::Clp => "clp",
        }
    }
}

impl Severity {
    pub const GRADED: [Severity; 3] = [Severity::Mild, Severity::Moderate, Severity::Severe];

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::None => "none",
            Severity::Mild => "mild",
            Severity::Moderate => "moderate",
            Severity::Severe => "severe",
        }
    }
}

impl Partition {
    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Dev => "dev",
            Partition::Eval => "eval",
        }
    }
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Normal,
        Category::Mild,
        Category::Moderate,
        Category::Severe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Normal => "Normal",
            Category::Mild => "Mild",
            Category::Moderate => "Moderate",
            Category::Severe => "Severe",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Category::Normal => "No",
            Category::Mild => "Mi",
            Category::Moderate => "Mo",
            Category::Severe => "Se",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            Category::Normal => Severity::None,
            Category::Mild => Severity::Mild,
            Category::Moderate => Severity::Moderate,
            Category::Severe => Severity::Severe,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown {kind} literal `{value}`")]
pub struct LiteralError {
    kind: &'static str,
    value: String,
}

macro_rules! impl_literal {
    ($ty:ty, $kind:literal, [$($lit:literal => $variant:expr),+ $(,)?]) => {
        impl FromStr for $ty {
            type Err = LiteralError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($lit => Ok($variant),)+
                    _ => Err(LiteralError { kind: $kind, value: s.to_string() }),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

impl_literal!(Group, "group", ["normal" => Group::Normal, "clp" => Group::Clp]);
impl_literal!(Severity, "severity", [
    "none" => Severity::None,
    "mild" => Severity::Mild,
    "moderate" => Severity::Moderate,
    "severe" => Severity::Severe,
]);
impl_literal!(Partition, "partition", [
    "train" => Partition::Train,
    "dev" => Partition::Dev,
    "eval" => Partition::Eval,
]);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtteranceRecord {
    pub utterance_id: String,
    pub speaker_id: String,
    pub dataset_id: String,
    pub group: Group,
    pub severity: Severity,
    pub reference_words: Vec<String>,
    pub reference_phonemes: Option<Vec<String>>,
    pub audio_path: Option<String>,
    pub partition: Option<Partition>,
}

impl UtteranceRecord {
    /// Whether group and severity agree (`Normal` ⇔ `None`).
    pub fn is_consistent(&self) -> bool {
        matches!(
            (self.group, self.severity),
            (Group::Normal, Severity::None)
                | (Group::Clp, Severity::Mild | Severity::Moderate | Severity::Severe)
        )
    }

    /// The training category of this record, `None` when group and severity
    /// disagree.
    pub fn category(&self) -> Option<Category> {
        if !self.is_consistent() {
            return None;
        }
        Some(match self.severity {
            Severity::None => Category::Normal,
            Severity::Mild => Category::Mild,
            Severity::Moderate => Category::Moderate,
            Severity::Severe => Category::Severe,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorpusManifest {
    pub dataset_id: String,
    pub records: Vec<UtteranceRecord>,
}

impl CorpusManifest {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, utterance_id: &str) -> Option<&UtteranceRecord> {
        self.records.iter().find(|r| r.utterance_id == utterance_id)
    }

    /// Records assigned to `partition`.
    pub fn partition(&self, partition: Partition) -> impl Iterator<Item = &UtteranceRecord> {
        self.records
            .iter()
            .filter(move |r| r.partition == Some(partition))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifestFormat {
    /// Comma-separated rows with a header.
    DelimitedRows,
    /// One JSON object per line.
    RecordPerLine,
}

impl ManifestFormat {
    /// Guess the format from a file extension (`.jsonl`/`.ndjson` → record
    /// per line, anything else → delimited).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => ManifestFormat::RecordPerLine,
            _ => ManifestFormat::DelimitedRows,
        }
    }
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("failed to read manifest: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("row {row}: duplicate utterance_id `{id}`")]
    DuplicateId { row: usize, id: String },
    #[error("row {row}: severity/group mismatch for `{id}`")]
    SeverityMismatch { row: usize, id: String },
    #[error("row {row}: empty reference for `{id}`")]
    EmptyReference { row: usize, id: String },
    #[error("row {row}: dataset `{found}` differs from manifest dataset `{expected}`")]
    DatasetMismatch {
        row: usize,
        expected: String,
        found: String,
    },
}

fn tokens(field: &str) -> Vec<String> {
    field.split_whitespace().map(str::to_string).collect()
}

fn optional(field: &str) -> Option<&str> {
    let t = field.trim();
    (!t.is_empty()).then_some(t)
}

#[derive(Debug, Serialize, Deserialize)]
struct LineRecord {
    utterance_id: String,
    speaker_id: String,
    dataset_id: String,
    group: String,
    severity: String,
    words: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phonemes: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    audio_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    partition: Option<String>,
}

impl LineRecord {
    fn into_record(self, row: usize) -> Result<UtteranceRecord, ManifestError> {
        let bad = |e: LiteralError| ManifestError::Malformed {
            row,
            message: e.to_string(),
        };
        if self.utterance_id.trim().is_empty() {
            return Err(ManifestError::Malformed {
                row,
                message: "empty utterance_id".into(),
            });
        }
        Ok(UtteranceRecord {
            utterance_id: self.utterance_id.trim().to_string(),
            speaker_id: self.speaker_id.trim().to_string(),
            dataset_id: self.dataset_id.trim().to_string(),
            group: self.group.parse().map_err(bad)?,
            severity: self.severity.parse().map_err(bad)?,
            reference_words: tokens(&self.words),
            reference_phonemes: self.phonemes.as_deref().and_then(optional).map(tokens),
            audio_path: self.audio_path.as_deref().and_then(optional).map(str::to_string),
            partition: match self.partition.as_deref().and_then(optional) {
                Some(p) => Some(p.parse().map_err(bad)?),
                None => None,
            },
        })
    }

    fn from_record(r: &UtteranceRecord) -> Self {
        LineRecord {
            utterance_id: r.utterance_id.clone(),
            speaker_id: r.speaker_id.clone(),
            dataset_id: r.dataset_id.clone(),
            group: r.group.as_str().into(),
            severity: r.severity.as_str().into(),
            words: r.reference_words.join(" "),
            phonemes: r.reference_phonemes.as_ref().map(|p| p.join(" ")),
            audio_path: r.audio_path.clone(),
            partition: r.partition.map(|p| p.as_str().into()),
        }
    }
}

fn parse_delimited<R: Read>(source: R) -> Result<Vec<(usize, UtteranceRecord)>, ManifestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader
        .headers()
        .map_err(|e| ManifestError::Malformed {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    let with_partition = names.len() == 9 && names[8] == "partition";
    if names[..names.len().min(8)] != MANIFEST_COLUMNS[..] || !(names.len() == 8 || with_partition)
    {
        return Err(ManifestError::Malformed {
            row: 1,
            message: format!("unexpected header `{}`", names.join(",")),
        });
    }

    let mut rows = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| ManifestError::Malformed {
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or_default().to_string();
        let line = LineRecord {
            utterance_id: field(0),
            speaker_id: field(1),
            dataset_id: field(2),
            group: field(3),
            severity: field(4),
            words: field(5),
            phonemes: Some(field(6)),
            audio_path: Some(field(7)),
            partition: with_partition.then(|| field(8)),
        };
        rows.push((row, line.into_record(row)?));
    }
    Ok(rows)
}

fn parse_lines<R: Read>(source: R) -> Result<Vec<(usize, UtteranceRecord)>, ManifestError> {
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LineRecord =
            serde_json::from_str(&line).map_err(|e| ManifestError::Malformed {
                row,
                message: e.to_string(),
            })?;
        rows.push((row, parsed.into_record(row)?));
    }
    Ok(rows)
}

fn parse_rows<R: Read>(
    source: R,
    format: ManifestFormat,
) -> Result<Vec<(usize, UtteranceRecord)>, ManifestError> {
    match format {
        ManifestFormat::DelimitedRows => parse_delimited(source),
        ManifestFormat::RecordPerLine => parse_lines(source),
    }
}

fn assemble(rows: Vec<(usize, UtteranceRecord)>) -> CorpusManifest {
    let dataset_id = rows
        .first()
        .map(|(_, r)| r.dataset_id.clone())
        .unwrap_or_default();
    CorpusManifest {
        dataset_id,
        records: rows.into_iter().map(|(_, r)| r).collect(),
    }
}

/// Parse a manifest and enforce every record invariant, failing on the first
/// violation.
pub fn load_manifest<R: Read>(
    source: R,
    format: ManifestFormat,
) -> Result<CorpusManifest, ManifestError> {
    let rows = parse_rows(source, format)?;
    let mut seen = HashSet::new();
    let expected = rows.first().map(|(_, r)| r.dataset_id.clone());
    for (row, record) in &rows {
        let row = *row;
        let id = || record.utterance_id.clone();
        if !seen.insert(record.utterance_id.as_str()) {
            return Err(ManifestError::DuplicateId { row, id: id() });
        }
        if !record.is_consistent() {
            return Err(ManifestError::SeverityMismatch { row, id: id() });
        }
        if record.reference_words.is_empty() {
            return Err(ManifestError::EmptyReference { row, id: id() });
        }
        if let Some(expected) = &expected {
            if &record.dataset_id != expected {
                return Err(ManifestError::DatasetMismatch {
                    row,
                    expected: expected.clone(),
                    found: record.dataset_id.clone(),
                });
            }
        }
    }
    Ok(assemble(rows))
}

/// Parse a manifest without checking record invariants. Syntax errors still
/// fail; use [`validate_manifest`] to collect the invariant violations.
pub fn read_manifest_unchecked<R: Read>(
    source: R,
    format: ManifestFormat,
) -> Result<CorpusManifest, ManifestError> {
    parse_rows(source, format).map(assemble)
}

pub fn load_manifest_path(path: &Path) -> Result<CorpusManifest, ManifestError> {
    let file = std::fs::File::open(path)?;
    load_manifest(file, ManifestFormat::from_path(path))
}

/// Serialize a manifest. The delimited form gains a `partition` column when
/// any record carries a partition.
pub fn write_manifest<W: Write>(
    manifest: &CorpusManifest,
    sink: W,
    format: ManifestFormat,
) -> Result<(), ManifestError> {
    let to_io = |e: csv::Error| ManifestError::Io(std::io::Error::other(e));
    match format {
        ManifestFormat::DelimitedRows => {
            let with_partition = manifest.records.iter().any(|r| r.partition.is_some());
            let mut writer = csv::WriterBuilder::new()
                .quote_style(csv::QuoteStyle::Necessary)
                .from_writer(sink);
            let mut header: Vec<&str> = MANIFEST_COLUMNS.to_vec();
            if with_partition {
                header.push("partition");
            }
            writer.write_record(&header).map_err(to_io)?;
            for r in &manifest.records {
                let line = LineRecord::from_record(r);
                let mut fields = vec![
                    line.utterance_id,
                    line.speaker_id,
                    line.dataset_id,
                    line.group,
                    line.severity,
                    line.words,
                    line.phonemes.unwrap_or_default(),
                    line.audio_path.unwrap_or_default(),
                ];
                if with_partition {
                    fields.push(line.partition.unwrap_or_default());
                }
                writer.write_record(&fields).map_err(to_io)?;
            }
            writer.flush()?;
        }
        ManifestFormat::RecordPerLine => {
            let mut sink = sink;
            for r in &manifest.records {
                let json = serde_json::to_string(&LineRecord::from_record(r))
                    .map_err(|e| ManifestError::Io(e.into()))?;
                writeln!(sink, "{json}")?;
            }
            sink.flush()?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    DuplicateId,
    SeverityGroupMismatch,
    EmptyReference,
    DatasetMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Zero-based position of the record in the manifest.
    pub index: usize,
    pub utterance_id: String,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match &self.kind {
            ViolationKind::DuplicateId => "duplicate utterance_id".to_string(),
            ViolationKind::SeverityGroupMismatch => "severity/group mismatch".to_string(),
            ViolationKind::EmptyReference => "empty reference".to_string(),
            ViolationKind::DatasetMismatch { expected, found } => {
                format!("dataset `{found}` differs from `{expected}`")
            }
        };
        write!(f, "record {} (`{}`): {}", self.index, self.utterance_id, what)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub by_cell: BTreeMap<(Group, Severity), usize>,
    /// `None` counts records with no partition assigned.
    pub by_partition: BTreeMap<Option<Partition>, usize>,
    pub violations: Vec<Violation>,
    pub total: usize,
}

impl ValidationReport {
    pub fn count(&self, group: Group, severity: Severity) -> usize {
        self.by_cell.get(&(group, severity)).copied().unwrap_or(0)
    }

    pub fn group_total(&self, group: Group) -> usize {
        self.by_cell
            .iter()
            .filter(|((g, _), _)| *g == group)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Human-readable listing of counts and violations.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("records,{}\n", self.total));
        for group in [Group::Normal, Group::Clp] {
            out.push_str(&format!("group,{},{}\n", group, self.group_total(group)));
        }
        for ((g, s), n) in &self.by_cell {
            out.push_str(&format!("cell,{g},{s},{n}\n"));
        }
        for (p, n) in &self.by_partition {
            let name = p.map_or("unassigned", |p| p.as_str());
            out.push_str(&format!("partition,{name},{n}\n"));
        }
        out.push_str(&format!("violations,{}\n", self.violations.len()));
        for v in &self.violations {
            out.push_str(&format!("violation,{v}\n"));
        }
        out
    }
}

/// Count records per cell and partition and list every invariant violation.
pub fn validate_manifest(manifest: &CorpusManifest) -> ValidationReport {
    let mut report = ValidationReport {
        total: manifest.records.len(),
        ..Default::default()
    };
    let mut seen = HashSet::new();
    for (index, r) in manifest.records.iter().enumerate() {
        *report.by_cell.entry((r.group, r.severity)).or_default() += 1;
        *report.by_partition.entry(r.partition).or_default() += 1;
        let mut flag = |kind| {
            report.violations.push(Violation {
                index,
                utterance_id: r.utterance_id.clone(),
                kind,
            })
        };
        if !seen.insert(r.utterance_id.as_str()) {
            flag(ViolationKind::DuplicateId);
        }
        if !r.is_consistent() {
            flag(ViolationKind::SeverityGroupMismatch);
        }
        if r.reference_words.is_empty() {
            flag(ViolationKind::EmptyReference);
        }
        if r.dataset_id != manifest.dataset_id {
            flag(ViolationKind::DatasetMismatch {
                expected: manifest.dataset_id.clone(),
                found: r.dataset_id.clone(),
            });
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub dev_fraction_of_train: f64,
    pub seed: u64,
    pub speaker_disjoint: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.2,
            dev_fraction_of_train: 0.2,
            seed: 0,
            speaker_disjoint: false,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("{name} must lie in [0, 1], got {value}")]
    InvalidFraction { name: &'static str, value: f64 },
    #[error("infeasible split: speaker `{speaker}` holds {count} of {total} utterances")]
    Infeasible {
        speaker: String,
        count: usize,
        total: usize,
    },
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), SplitError> {
        for (name, value) in [
            ("test_fraction", self.test_fraction),
            ("dev_fraction_of_train", self.dev_fraction_of_train),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SplitError::InvalidFraction { name, value });
            }
        }
        Ok(())
    }

    /// Target (eval, dev) sizes for `n` utterances.
    pub fn target_sizes(&self, n: usize) -> (usize, usize) {
        let eval = (n as f64 * self.test_fraction).round() as usize;
        let dev = ((n - eval) as f64 * self.dev_fraction_of_train).round() as usize;
        (eval, dev)
    }
}

/// Assign partitions. Records are ordered by utterance id, shuffled with a
/// ChaCha8 generator seeded from `spec.seed`, and cut into eval, dev and
/// train in that order. In speaker-disjoint mode whole speakers are shuffled
/// and greedily placed into whichever partition moves closer to its target.
pub fn split_corpus(
    manifest: &CorpusManifest,
    spec: &SplitSpec,
) -> Result<CorpusManifest, SplitError> {
    spec.validate()?;
    let n = manifest.records.len();
    let (target_eval, target_dev) = spec.target_sizes(n);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut assigned = vec![Partition::Train; n];

    if spec.speaker_disjoint {
        let mut by_speaker: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in manifest.records.iter().enumerate() {
            by_speaker.entry(r.speaker_id.as_str()).or_default().push(i);
        }
        let limit = (1.0 - spec.test_fraction) * n as f64;
        if let Some((speaker, idx)) = by_speaker
            .iter()
            .find(|(_, idx)| idx.len() as f64 > limit)
        {
            return Err(SplitError::Infeasible {
                speaker: speaker.to_string(),
                count: idx.len(),
                total: n,
            });
        }
        let mut speakers: Vec<(&str, Vec<usize>)> = by_speaker.into_iter().collect();
        speakers.shuffle(&mut rng);
        let (mut eval, mut dev) = (0usize, 0usize);
        let gap = |have: usize, add: usize, target: usize| {
            ((have + add) as i64 - target as i64).abs() < (have as i64 - target as i64).abs()
        };
        for (_, idx) in speakers {
            let c = idx.len();
            let part = if gap(eval, c, target_eval) {
                eval += c;
                Partition::Eval
            } else if gap(dev, c, target_dev) {
                dev += c;
                Partition::Dev
            } else {
                Partition::Train
            };
            for i in idx {
                assigned[i] = part;
            }
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            manifest.records[a]
                .utterance_id
                .cmp(&manifest.records[b].utterance_id)
        });
        order.shuffle(&mut rng);
        for (pos, &i) in order.iter().enumerate() {
            assigned[i] = if pos < target_eval {
                Partition::Eval
            } else if pos < target_eval + target_dev {
                Partition::Dev
            } else {
                Partition::Train
            };
        }
    }

    let records = manifest
        .records
        .iter()
        .zip(assigned)
        .map(|(r, p)| UtteranceRecord {
            partition: Some(p),
            ..r.clone()
        })
        .collect();
    Ok(CorpusManifest {
        dataset_id: manifest.dataset_id.clone(),
        records,
    })
}

/// A set of training categories, e.g. `Mild+Moderate+Normal`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Composition(BTreeSet<Category>);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CompositionError {
    #[error("empty training composition")]
    Empty,
    #[error("unknown composition category `{0}`")]
    UnknownCategory(String),
    #[error("record `{0}` has no partition assigned")]
    Unpartitioned(String),
}

impl Composition {
    pub fn new(categories: impl IntoIterator<Item = Category>) -> Result<Self, CompositionError> {
        let set: BTreeSet<Category> = categories.into_iter().collect();
        if set.is_empty() {
            return Err(CompositionError::Empty);
        }
        Ok(Composition(set))
    }

    pub fn all() -> Self {
        Composition(Category::ALL.into_iter().collect())
    }

    pub fn contains(&self, category: Category) -> bool {
        self.0.contains(&category)
    }

    pub fn categories(&self) -> impl Iterator<Item = Category> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &Composition) -> bool {
        self.0.is_subset(&other.0)
    }

    fn is_clp_only(&self) -> bool {
        self.0.len() == 3 && !self.contains(Category::Normal)
    }

    /// Label with severities first and Normal last, as in
    /// `Mild+Moderate+Severe+Normal`. The three severities alone read `CLP`.
    pub fn label(&self) -> String {
        self.join(Category::name, "CLP")
    }

    /// Abbreviated label, e.g. `Mi+Mo+Se+No`.
    pub fn short_label(&self) -> String {
        self.join(Category::short_name, "CLP")
    }

    fn join(&self, name: fn(Category) -> &'static str, clp: &str) -> String {
        if self.is_clp_only() {
            return clp.to_string();
        }
        let mut parts: Vec<&str> = [Category::Mild, Category::Moderate, Category::Severe]
            .into_iter()
            .filter(|c| self.contains(*c))
            .map(name)
            .collect();
        if self.contains(Category::Normal) {
            parts.push(name(Category::Normal));
        }
        parts.join("+")
    }
}

impl FromStr for Composition {
    type Err = CompositionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut set = BTreeSet::new();
        for part in s.split('+').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "normal" | "no" => {
                    set.insert(Category::Normal);
                }
                "mild" | "mi" => {
                    set.insert(Category::Mild);
                }
                "moderate" | "mo" => {
                    set.insert(Category::Moderate);
                }
                "severe" | "se" => {
                    set.insert(Category::Severe);
                }
                "clp" => set.extend([Category::Mild, Category::Moderate, Category::Severe]),
                _ => return Err(CompositionError::UnknownCategory(part.to_string())),
            }
        }
        Composition::new(set)
    }
}

impl TryFrom<String> for Composition {
    type Error = CompositionError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Composition> for String {
    fn from(c: Composition) -> Self {
        c.label()
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Train-partition records whose category belongs to `composition`.
pub fn select_training_composition<'m>(
    manifest: &'m CorpusManifest,
    composition: &Composition,
) -> Result<Vec<&'m UtteranceRecord>, CompositionError> {
    if let Some(r) = manifest.records.iter().find(|r| r.partition.is_none()) {
        return Err(CompositionError::Unpartitioned(r.utterance_id.clone()));
    }
    Ok(manifest
        .partition(Partition::Train)
        .filter(|r| r.category().is_some_and(|c| composition.contains(c)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "utterance_id,speaker_id,dataset_id,group,severity,words,phonemes,audio_path\n";

    fn csv(rows: &[&str]) -> String {
        let mut s = HEADER.to_string();
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    pub(crate) fn record(id: &str, speaker: &str, category: Category) -> UtteranceRecord {
        UtteranceRecord {
            utterance_id: id.into(),
            speaker_id: speaker.into(),
            dataset_id: "TEST".into(),
            group: if category == Category::Normal {
                Group::Normal
            } else {
                Group::Clp
            },
            severity: category.severity(),
            reference_words: vec!["a".into(), "b".into()],
            reference_phonemes: None,
            audio_path: None,
            partition: None,
        }
    }

    #[test]
    fn loads_three_rows() {
        let text = csv(&[
            "u1,s1,AIISH,normal,none,\"kage ondu\",\"k a g e\",a/u1.wav",
            "u2,s2,AIISH,clp,mild,\"kage\",,",
            "u3,s2,AIISH,clp,severe,\"ba pa\",,",
        ]);
        let m = load_manifest(text.as_bytes(), ManifestFormat::DelimitedRows).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.dataset_id, "AIISH");
        assert_eq!(m.records[0].reference_words, ["kage", "ondu"]);
        assert_eq!(
            m.records[0].reference_phonemes.as_deref(),
            Some(&["k".to_string(), "a".into(), "g".into(), "e".into()][..])
        );
        assert_eq!(m.records[0].audio_path.as_deref(), Some("a/u1.wav"));
        assert_eq!(m.records[1].reference_phonemes, None);
        assert_eq!(m.records[2].severity, Severity::Severe);
    }

    #[test]
    fn rejects_normal_with_severity() {
        let text = csv(&["u1,s1,A,normal,mild,\"x\",,"]);
        let err = load_manifest(text.as_bytes(), ManifestFormat::DelimitedRows).unwrap_err();
        assert!(matches!(err, ManifestError::SeverityMismatch { row: 2, .. }));
        assert!(err.to_string().contains("severity/group mismatch"));
    }

    #[test]
    fn reports_row_of_duplicate_and_malformed() {
        let text = csv(&["u1,s1,A,normal,none,x,,", "u1,s1,A,normal,none,y,,"]);
        let err = load_manifest(text.as_bytes(), ManifestFormat::DelimitedRows).unwrap_err();
        assert!(matches!(err, ManifestError::DuplicateId { row: 3, .. }));

        let text = csv(&["u1,s1,A,normal,none,x,,", "u2,s1,A,adult,none,y,,"]);
        let err = load_manifest(text.as_bytes(), ManifestFormat::DelimitedRows).unwrap_err();
        assert!(matches!(err, ManifestError::Malformed { row: 3, .. }), "{err}");

        let text = csv(&["u1,s1,A,normal,none,x"]);
        let err = load_manifest(text.as_bytes(), ManifestFormat::DelimitedRows).unwrap_err();
        assert!(matches!(err, ManifestError::Malformed { row: 2, .. }), "{err}");
    }

    #[test]
    fn rejects_empty_reference_and_bad_header() {
        let text = csv(&["u1,s1,A,normal,none,\"  \",,"]);
        let err = load_manifest(text.as_bytes(), ManifestFormat::DelimitedRows).unwrap_err();
        assert!(matches!(err, ManifestError::EmptyReference { .. }));

        let err = load_manifest(
            "id,speaker\nu1,s1\n".as_bytes(),
            ManifestFormat::DelimitedRows,
        )
        .unwrap_err();
        assert!(matches!(err, ManifestError::Malformed { row: 1, .. }));
    }

    #[test]
    fn record_per_line_format() {
        let text = r#"{"utterance_id":"u1","speaker_id":"s","dataset_id":"NMCPC","group":"clp","severity":"moderate","words":"a b c"}

{"utterance_id":"u2","speaker_id":"s","dataset_id":"NMCPC","group":"normal","severity":"none","words":"a","phonemes":"AH","partition":"eval"}"#;
        let m = load_manifest(text.as_bytes(), ManifestFormat::RecordPerLine).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.records[0].reference_words.len(), 3);
        assert_eq!(m.records[1].partition, Some(Partition::Eval));

        let err = load_manifest("{not json}\n".as_bytes(), ManifestFormat::RecordPerLine)
            .unwrap_err();
        assert!(matches!(err, ManifestError::Malformed { row: 1, .. }));
    }

    #[test]
    fn write_then_read_both_formats() {
        let mut m = CorpusManifest {
            dataset_id: "TEST".into(),
            records: vec![
                record("a", "s1", Category::Normal),
                record("b, tricky", "s2", Category::Moderate),
            ],
        };
        m.records[0].reference_phonemes = Some(vec!["AH".into(), "B".into()]);
        m.records[1].partition = Some(Partition::Dev);
        for format in [ManifestFormat::DelimitedRows, ManifestFormat::RecordPerLine] {
            let mut buf = Vec::new();
            write_manifest(&m, &mut buf, format).unwrap();
            let back = load_manifest(buf.as_slice(), format).unwrap();
            assert_eq!(back, m, "{format:?}");
        }
    }

    #[test]
    fn validate_empty_and_duplicates() {
        let report = validate_manifest(&CorpusManifest::default());
        assert_eq!(report.total, 0);
        assert!(report.by_cell.is_empty());
        assert!(report.is_valid());

        let m = CorpusManifest {
            dataset_id: "TEST".into(),
            records: vec![
                record("a", "s", Category::Normal),
                record("b", "s", Category::Mild),
                record("a", "s", Category::Severe),
            ],
        };
        let report = validate_manifest(&m);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::DuplicateId);
        assert_eq!(report.violations[0].index, 2);
    }

    #[test]
    fn validate_collects_all_violations() {
        let mut bad = record("x", "s", Category::Normal);
        bad.severity = Severity::Mild;
        bad.reference_words.clear();
        bad.dataset_id = "OTHER".into();
        let m = CorpusManifest {
            dataset_id: "TEST".into(),
            records: vec![bad],
        };
        let report = validate_manifest(&m);
        assert_eq!(report.violations.len(), 3);
        assert_eq!(report.total, 1);
        assert_eq!(report.by_partition.get(&None), Some(&1));
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let spec = SplitSpec {
            test_fraction: 1.5,
            ..Default::default()
        };
        assert!(matches!(
            split_corpus(&CorpusManifest::default(), &spec),
            Err(SplitError::InvalidFraction { .. })
        ));
    }

    #[test]
    fn zero_test_fraction_leaves_eval_empty() {
        let m = CorpusManifest {
            dataset_id: "TEST".into(),
            records: (0..50)
                .map(|i| record(&format!("u{i}"), "s", Category::Normal))
                .collect(),
        };
        let spec = SplitSpec {
            test_fraction: 0.0,
            ..Default::default()
        };
        let split = split_corpus(&m, &spec).unwrap();
        assert_eq!(split.partition(Partition::Eval).count(), 0);
        assert_eq!(split.partition(Partition::Dev).count(), 10);
        assert_eq!(split.partition(Partition::Train).count(), 40);
    }

    #[test]
    fn speaker_disjoint_infeasible() {
        let mut records: Vec<_> = (0..9)
            .map(|i| record(&format!("u{i}"), "big", Category::Normal))
            .collect();
        records.push(record("u9", "small", Category::Normal));
        let m = CorpusManifest {
            dataset_id: "TEST".into(),
            records,
        };
        let spec = SplitSpec {
            speaker_disjoint: true,
            ..Default::default()
        };
        let err = split_corpus(&m, &spec).unwrap_err();
        assert!(err.to_string().contains("infeasible split"));
    }

    #[test]
    fn composition_labels_and_parsing() {
        let c: Composition = "Mild+Moderate+Severe+Normal".parse().unwrap();
        assert_eq!(c, Composition::all());
        assert_eq!(c.short_label(), "Mi+Mo+Se+No");
        let c: Composition = "normal+mild".parse().unwrap();
        assert_eq!(c.label(), "Mild+Normal");
        let c: Composition = "CLP".parse().unwrap();
        assert_eq!(c.label(), "CLP");
        assert_eq!(c.categories().count(), 3);
        assert_eq!("".parse::<Composition>(), Err(CompositionError::Empty));
        assert!(matches!(
            "Mild+Loud".parse::<Composition>(),
            Err(CompositionError::UnknownCategory(_))
        ));
        let json = serde_json::to_string(&Composition::all()).unwrap();
        assert_eq!(json, "\"Mild+Moderate+Severe+Normal\"");
    }

    #[test]
    fn selection_requires_partitions() {
        let m = CorpusManifest {
            dataset_id: "TEST".into(),
            records: vec![record("a", "s", Category::Normal)],
        };
        let err = select_training_composition(&m, &Composition::all()).unwrap_err();
        assert_eq!(err, CompositionError::Unpartitioned("a".into()));
    }
}
