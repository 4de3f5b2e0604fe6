//! Trial manifests: UTF-8 TSV with columns
//! `utterance_id  label(0|1)  attack_type  origin`.
//! Lines starting with `#` and blank lines are skipped.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::validate_utterance_id;
use crate::error::{Error, Result};

/// Attack tag carried by bonafide rows.
pub const NO_ATTACK: &str = "-";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Deepfake = 0,
    Bonafide = 1,
}

impl Label {
    pub fn from_token(token: &str) -> Option<Self> {
        match token {
            "0" => Some(Label::Deepfake),
            "1" => Some(Label::Bonafide),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn is_bonafide(self) -> bool {
        self == Label::Bonafide
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub utterance_id: String,
    pub label: Label,
    pub attack_type: String,
    pub origin: String,
}

impl TrialRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        validate_utterance_id(&self.utterance_id)?;
        for (name, tag) in [("attack_type", &self.attack_type), ("origin", &self.origin)] {
            if tag.is_empty() || tag.chars().any(|c| c.is_whitespace() || c.is_control()) {
                return Err(format!("{name} {tag:?} must be a non-empty token"));
            }
        }
        match (self.label, self.attack_type == NO_ATTACK) {
            (Label::Bonafide, false) => Err(format!(
                "bonafide row carries attack tag {:?} (expected \"-\")",
                self.attack_type
            )),
            (Label::Deepfake, true) => {
                Err("deepfake row needs an attack tag other than \"-\"".into())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub records: Vec<TrialRecord>,
    pub source: Option<PathBuf>,
}

impl Manifest {
    /// Builds a manifest, enforcing record rules and id uniqueness.
    pub fn from_records(records: Vec<TrialRecord>) -> Result<Self> {
        let mut seen = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            r.validate()
                .map_err(|m| Error::invalid("trial record", format!("row {}: {m}", i + 1)))?;
            if let Some(prev) = seen.insert(r.utterance_id.as_str(), i) {
                return Err(Error::invalid(
                    "manifest",
                    format!(
                        "duplicate utterance id {:?} (rows {} and {})",
                        r.utterance_id,
                        prev + 1,
                        i + 1
                    ),
                ));
            }
        }
        Ok(Self {
            records,
            source: None,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TrialRecord> {
        self.records.iter()
    }

    pub fn index(&self) -> HashMap<&str, &TrialRecord> {
        self.records
            .iter()
            .map(|r| (r.utterance_id.as_str(), r))
            .collect()
    }
}

/// Parses a manifest. `source_name` labels error messages.
pub fn read_manifest<R: BufRead>(source: R, source_name: &str) -> Result<Manifest> {
    let mut records = Vec::new();
    let mut first_line: HashMap<String, usize> = HashMap::new();
    for (i, line) in source.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(source_name, lineno, e.to_string()))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("expected 4 tab-separated columns, found {}", cols.len()),
            ));
        }
        let label = Label::from_token(cols[1]).ok_or_else(|| {
            Error::parse(
                source_name,
                lineno,
                format!("bad label {:?} (expected 0 or 1)", cols[1]),
            )
        })?;
        let record = TrialRecord {
            utterance_id: cols[0].to_string(),
            label,
            attack_type: cols[2].to_string(),
            origin: cols[3].to_string(),
        };
        record
            .validate()
            .map_err(|m| Error::parse(source_name, lineno, m))?;
        if let Some(prev) = first_line.insert(record.utterance_id.clone(), lineno) {
            return Err(Error::parse(
                source_name,
                lineno,
                format!(
                    "duplicate utterance id {:?} (first seen on line {prev})",
                    record.utterance_id
                ),
            ));
        }
        records.push(record);
    }
    Ok(Manifest {
        records,
        source: None,
    })
}

pub fn read_manifest_file(path: &Path) -> Result<Manifest> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut m = read_manifest(BufReader::new(file), &path.display().to_string())?;
    m.source = Some(path.to_path_buf());
    Ok(m)
}

pub fn write_manifest<W: Write>(manifest: &Manifest, mut sink: W) -> std::io::Result<()> {
    for r in &manifest.records {
        writeln!(
            sink,
            "{}\t{}\t{}\t{}",
            r.utterance_id, r.label, r.attack_type, r.origin
        )?;
    }
    sink.flush()
}
