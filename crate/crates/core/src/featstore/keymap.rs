//! Conversion of whitespace-separated external key files into manifests.

use std::io::BufRead;

use super::manifest::{Label, Manifest, TrialRecord, NO_ATTACK};
use crate::error::{Error, Result};

/// Zero-based column positions in an external key file.
///
/// The default assumes challenge-style rows
/// `speaker utterance_id - attack_type label` with labels `bonafide` /
/// `deepfake`. It has not been checked against an official release; set the
/// fields explicitly when the layout differs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyColumnMap {
    pub id: usize,
    pub label: usize,
    pub attack: Option<usize>,
    pub origin: Option<usize>,
    pub bonafide_tokens: Vec<String>,
    pub deepfake_tokens: Vec<String>,
    /// Origin used when `origin` is `None`.
    pub default_origin: String,
}

impl Default for KeyColumnMap {
    fn default() -> Self {
        Self {
            id: 1,
            label: 4,
            attack: Some(3),
            origin: None,
            bonafide_tokens: vec!["bonafide".into(), "1".into()],
            deepfake_tokens: vec!["deepfake".into(), "spoof".into(), "0".into()],
            default_origin: "unknown".into(),
        }
    }
}

impl KeyColumnMap {
    /// Parses `id=1,label=4,attack=3,origin=none,default_origin=kising`.
    /// Unmentioned keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::default();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item.split_once('=').ok_or_else(|| {
                Error::invalid("column map", format!("expected key=value, got {item:?}"))
            })?;
            let column = |v: &str| -> Result<Option<usize>> {
                if v == "none" {
                    Ok(None)
                } else {
                    v.parse().map(Some).map_err(|_| {
                        Error::invalid("column map", format!("bad column {v:?} for {key}"))
                    })
                }
            };
            match key {
                "id" => {
                    map.id = column(value)?
                        .ok_or_else(|| Error::invalid("column map", "id is required"))?
                }
                "label" => {
                    map.label = column(value)?
                        .ok_or_else(|| Error::invalid("column map", "label is required"))?
                }
                "attack" => map.attack = column(value)?,
                "origin" => map.origin = column(value)?,
                "default_origin" => map.default_origin = value.to_string(),
                "bonafide" => map.bonafide_tokens = value.split('|').map(String::from).collect(),
                "deepfake" => map.deepfake_tokens = value.split('|').map(String::from).collect(),
                _ => return Err(Error::invalid("column map", format!("unknown key {key:?}"))),
            }
        }
        Ok(map)
    }
}

/// Converts a key file to a manifest. Bonafide rows always get attack `-`.
pub fn import_key<R: BufRead>(
    source: R,
    source_name: &str,
    map: &KeyColumnMap,
) -> Result<Manifest> {
    let mut records = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(source_name, lineno, e.to_string()))?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let get = |c: usize, what: &str| {
            cols.get(c).copied().ok_or_else(|| {
                Error::parse(
                    source_name,
                    lineno,
                    format!("missing {what} column {c} ({} columns)", cols.len()),
                )
            })
        };
        let token = get(map.label, "label")?;
        let label = if map.bonafide_tokens.iter().any(|t| t == token) {
            Label::Bonafide
        } else if map.deepfake_tokens.iter().any(|t| t == token) {
            Label::Deepfake
        } else {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("unrecognized label {token:?}"),
            ));
        };
        let attack_type = match (label, map.attack) {
            (Label::Bonafide, _) => NO_ATTACK.to_string(),
            (Label::Deepfake, Some(c)) => get(c, "attack")?.to_string(),
            (Label::Deepfake, None) => "unknown".to_string(),
        };
        let origin = match map.origin {
            Some(c) => get(c, "origin")?.to_string(),
            None => map.default_origin.clone(),
        };
        let record = TrialRecord {
            utterance_id: get(map.id, "id")?.to_string(),
            label,
            attack_type,
            origin,
        };
        record
            .validate()
            .map_err(|m| Error::parse(source_name, lineno, m))?;
        records.push(record);
    }
    Manifest::from_records(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_map() {
        let key = "S01 utt_a - - bonafide\nS01 utt_b - A03 deepfake\n";
        let m = import_key(key.as_bytes(), "key", &KeyColumnMap::default()).unwrap();
        assert_eq!(m.records[0].label, Label::Bonafide);
        assert_eq!(m.records[0].attack_type, "-");
        assert_eq!(m.records[1].attack_type, "A03");
        assert_eq!(m.records[1].origin, "unknown");
    }

    #[test]
    fn custom_map() {
        let map = KeyColumnMap::parse("id=0,label=1,attack=2,origin=3").unwrap();
        let key = "u1 spoof A10 m4singer\nu2 bonafide x kising\n";
        let m = import_key(key.as_bytes(), "key", &map).unwrap();
        assert_eq!(m.records[0].origin, "m4singer");
        assert_eq!(m.records[1].attack_type, "-");
    }

    #[test]
    fn errors_are_located() {
        let err = import_key("a b\n".as_bytes(), "key", &KeyColumnMap::default())
            .unwrap_err()
            .to_string();
        assert!(err.starts_with("key:1:"), "{err}");
        assert!(KeyColumnMap::parse("bogus=1").is_err());
    }
}
