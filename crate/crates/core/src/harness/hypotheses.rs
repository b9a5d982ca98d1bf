//! Hypothesis transcripts produced by an ASR system, keyed by utterance id.
//!
//! Two on-disk layouts are read: a delimited file of `utterance_id,text`
//! rows (an initial header row with exactly those names is skipped), or a
//! directory holding one `<utterance_id>.txt` file per utterance.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    External,
    Simulated,
}

#[derive(Debug, Error)]
pub enum HypothesisError {
    #[error("duplicate hypothesis for utterance `{0}`")]
    DuplicateId(String),
    #[error("cannot read hypotheses from {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed hypothesis row {row}: {message}")]
    Malformed { row: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypothesisSet {
    entries: BTreeMap<String, Vec<String>>,
    pub provenance: Provenance,
}

impl HypothesisSet {
    pub fn new(provenance: Provenance) -> Self {
        HypothesisSet {
            entries: BTreeMap::new(),
            provenance,
        }
    }

    pub fn insert(
        &mut self,
        utterance_id: impl Into<String>,
        tokens: Vec<String>,
    ) -> Result<(), HypothesisError> {
        let id = utterance_id.into();
        if self.entries.contains_key(&id) {
            return Err(HypothesisError::DuplicateId(id));
        }
        self.entries.insert(id, tokens);
        Ok(())
    }

    pub fn get(&self, utterance_id: &str) -> Option<&[String]> {
        self.entries.get(utterance_id).map(Vec::as_slice)
    }

    pub fn contains(&self, utterance_id: &str) -> bool {
        self.entries.contains_key(utterance_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in utterance-id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Keep only the entries whose id satisfies `keep`.
    pub fn retain(&mut self, mut keep: impl FnMut(&str) -> bool) {
        self.entries.retain(|k, _| keep(k));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypothesisFormat {
    Delimited,
    Directory,
}

fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HypothesisError + '_ {
    move |source| HypothesisError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Read a hypothesis set; `format` of `None` picks `Directory` for
/// directories and `Delimited` otherwise.
pub fn load_hypotheses(
    source: &Path,
    format: Option<HypothesisFormat>,
) -> Result<HypothesisSet, HypothesisError> {
    let format = format.unwrap_or(if source.is_dir() {
        HypothesisFormat::Directory
    } else {
        HypothesisFormat::Delimited
    });
    let mut set = HypothesisSet::new(Provenance::External);
    match format {
        HypothesisFormat::Directory => {
            let mut files = Vec::new();
            for entry in std::fs::read_dir(source).map_err(io_err(source))? {
                let path = entry.map_err(io_err(source))?.path();
                if path.is_file() && path.extension().is_some_and(|e| e == "txt") {
                    files.push(path);
                }
            }
            files.sort();
            for path in files {
                let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
                    continue;
                };
                let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
                set.insert(id, tokens(&text))?;
            }
        }
        HypothesisFormat::Delimited => {
            let file = std::fs::File::open(source).map_err(io_err(source))?;
            read_delimited(file, &mut set)?;
        }
    }
    Ok(set)
}

/// Parse `utterance_id,text` rows from any reader.
pub fn read_delimited<R: std::io::Read>(
    source: R,
    set: &mut HypothesisSet,
) -> Result<(), HypothesisError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);
    for (idx, row) in reader.records().enumerate() {
        let row = row.map_err(|e| HypothesisError::Malformed {
            row: idx + 1,
            message: e.to_string(),
        })?;
        if idx == 0 && row.len() == 2 && &row[0] == "utterance_id" && &row[1] == "text" {
            continue;
        }
        match row.len() {
            1 | 2 => {
                let id = row[0].trim();
                if id.is_empty() {
                    return Err(HypothesisError::Malformed {
                        row: idx + 1,
                        message: "empty utterance_id".into(),
                    });
                }
                set.insert(id, tokens(row.get(1).unwrap_or_default()))?;
            }
            n => {
                return Err(HypothesisError::Malformed {
                    row: idx + 1,
                    message: format!("expected 2 fields, found {n}"),
                })
            }
        }
    }
    Ok(())
}

/// Write `utterance_id,text` rows with a header, in id order.
pub fn write_hypotheses<W: Write>(set: &HypothesisSet, sink: W) -> std::io::Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let to_io = std::io::Error::other;
    writer.write_record(["utterance_id", "text"]).map_err(to_io)?;
    for (id, toks) in set.iter() {
        writer.write_record([id, &toks.join(" ")]).map_err(to_io)?;
    }
    writer.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directory_with_three_files() {
        let dir = tempfile::tempdir().unwrap();
        for (id, text) in [("u1", "a b"), ("u2", "c"), ("u3", "")] {
            std::fs::write(dir.path().join(format!("{id}.txt")), text).unwrap();
        }
        std::fs::write(dir.path().join("notes.md"), "ignored").unwrap();
        let set = load_hypotheses(dir.path(), None).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.get("u1").unwrap(), ["a", "b"]);
        assert_eq!(set.get("u3"), Some(&[][..]));
        assert_eq!(set.get("u4"), None);
    }

    #[test]
    fn delimited_duplicate_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        std::fs::write(&path, "utterance_id,text\nu1,a b\nu1,c\n").unwrap();
        let err = load_hypotheses(&path, None).unwrap_err();
        assert!(matches!(err, HypothesisError::DuplicateId(id) if id == "u1"));
    }

    #[test]
    fn empty_text_round_trips_as_present() {
        let mut set = HypothesisSet::new(Provenance::External);
        set.insert("u1", vec![]).unwrap();
        set.insert("u2", vec!["x".into(), "y".into()]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        write_hypotheses(&set, std::fs::File::create(&path).unwrap()).unwrap();
        let back = load_hypotheses(&path, Some(HypothesisFormat::Delimited)).unwrap();
        assert_eq!(back, set);
        assert!(back.contains("u1"));
        assert!(back.get("u1").unwrap().is_empty());
    }

    #[test]
    fn unreadable_path() {
        let err = load_hypotheses(Path::new("/nonexistent/h.csv"), None).unwrap_err();
        assert!(matches!(err, HypothesisError::Io { .. }));
    }
}
