//! Two-system score fusion by larger magnitude, and the score file format
//! (`utterance_id<TAB>score`, scores at 17 significant digits).

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numfmt::{fmt_g17, parse_f64};
use crate::par::Execution;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry {
    pub utterance_id: String,
    pub score: f64,
}

impl ScoreEntry {
    pub fn new(utterance_id: impl Into<String>, score: f64) -> Self {
        Self {
            utterance_id: utterance_id.into(),
            score,
        }
    }
}

/// Returns whichever score has the larger absolute value; on equal
/// magnitudes the first (`s_x`) wins.
#[inline]
pub fn fuse_max_abs(s_x: f64, s_w: f64) -> f64 {
    if s_x.abs() >= s_w.abs() {
        s_x
    } else {
        s_w
    }
}

const MAX_LISTED_IDS: usize = 10;

fn list_ids(ids: &[&str]) -> String {
    let mut s = ids
        .iter()
        .take(MAX_LISTED_IDS)
        .map(|i| format!("{i:?}"))
        .collect::<Vec<_>>()
        .join(", ");
    if ids.len() > MAX_LISTED_IDS {
        s.push_str(&format!(" and {} more", ids.len() - MAX_LISTED_IDS));
    }
    s
}

/// Fuses two score lists row by row, output in `x` order. The id sets must
/// be identical and duplicate-free.
pub fn fuse_scores(x: &[ScoreEntry], w: &[ScoreEntry], exec: Execution) -> Result<Vec<ScoreEntry>> {
    let w_index: HashMap<&str, f64> = w
        .iter()
        .map(|e| (e.utterance_id.as_str(), e.score))
        .collect();
    let x_ids: HashSet<&str> = x.iter().map(|e| e.utterance_id.as_str()).collect();
    if x_ids.len() != x.len() || w_index.len() != w.len() {
        return Err(Error::Data("duplicate utterance id in a score file".into()));
    }
    let only_x: Vec<&str> = x
        .iter()
        .map(|e| e.utterance_id.as_str())
        .filter(|id| !w_index.contains_key(id))
        .collect();
    let only_w: Vec<&str> = w
        .iter()
        .map(|e| e.utterance_id.as_str())
        .filter(|id| !x_ids.contains(id))
        .collect();
    if !only_x.is_empty() || !only_w.is_empty() {
        let mut msg = String::from("score files cover different utterances");
        if !only_x.is_empty() {
            msg.push_str(&format!("; only in first: {}", list_ids(&only_x)));
        }
        if !only_w.is_empty() {
            msg.push_str(&format!("; only in second: {}", list_ids(&only_w)));
        }
        return Err(Error::Data(msg));
    }
    Ok(exec.map(x, |e| ScoreEntry {
        utterance_id: e.utterance_id.clone(),
        score: fuse_max_abs(e.score, w_index[e.utterance_id.as_str()]),
    }))
}

pub fn read_scores<R: BufRead>(source: R, source_name: &str) -> Result<Vec<ScoreEntry>> {
    let mut out = Vec::new();
    let mut seen = HashMap::new();
    for (i, line) in source.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(source_name, lineno, e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, score) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(source_name, lineno, "expected utterance_id<TAB>score"))?;
        let score = parse_f64(score.trim())
            .filter(|s| s.is_finite())
            .ok_or_else(|| Error::parse(source_name, lineno, format!("bad score {score:?}")))?;
        crate::featstore::validate_utterance_id(id)
            .map_err(|m| Error::parse(source_name, lineno, m))?;
        if let Some(prev) = seen.insert(id.to_string(), lineno) {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("duplicate utterance id {id:?} (first on line {prev})"),
            ));
        }
        out.push(ScoreEntry::new(id, score));
    }
    Ok(out)
}

pub fn read_scores_file(path: &Path) -> Result<Vec<ScoreEntry>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_scores(std::io::BufReader::new(file), &path.display().to_string())
}

pub fn write_scores<W: Write>(scores: &[ScoreEntry], mut sink: W) -> std::io::Result<()> {
    for s in scores {
        writeln!(sink, "{}\t{}", s.utterance_id, fmt_g17(s.score))?;
    }
    sink.flush()
}

pub fn write_scores_file(scores: &[ScoreEntry], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_scores(scores, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Reads both files, fuses them and writes the result.
pub fn fuse_files(x: &Path, w: &Path, out: &Path, exec: Execution) -> Result<Vec<ScoreEntry>> {
    let fused = fuse_scores(&read_scores_file(x)?, &read_scores_file(w)?, exec)?;
    write_scores_file(&fused, out)?;
    Ok(fused)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scalar_cases() {
        assert_eq!(fuse_max_abs(2.0, -3.0), -3.0);
        assert_eq!(fuse_max_abs(0.0, 0.0), 0.0);
        assert_eq!(fuse_max_abs(1.5, -1.5), 1.5);
        assert_eq!(fuse_max_abs(-1.5, 1.5), -1.5);
    }

    fn entries(rows: &[(&str, f64)]) -> Vec<ScoreEntry> {
        rows.iter().map(|(i, s)| ScoreEntry::new(*i, *s)).collect()
    }

    #[test]
    fn identical_lists_fuse_to_themselves() {
        let a = entries(&[("a", 1.0), ("b", -2.0), ("c", 0.5)]);
        assert_eq!(fuse_scores(&a, &a, Execution::default()).unwrap(), a);
    }

    #[test]
    fn rowwise_mixed_signs() {
        let x = entries(&[("a", 0.3), ("b", -4.0), ("c", 2.0)]);
        let w = entries(&[("c", -2.0), ("a", -0.9), ("b", 1.0)]);
        let fused = fuse_scores(&x, &w, Execution::default()).unwrap();
        let expected: Vec<ScoreEntry> = x
            .iter()
            .map(|e| {
                let other = w
                    .iter()
                    .find(|o| o.utterance_id == e.utterance_id)
                    .unwrap()
                    .score;
                ScoreEntry::new(e.utterance_id.clone(), fuse_max_abs(e.score, other))
            })
            .collect();
        assert_eq!(fused, expected);
        assert_eq!(fused, entries(&[("a", -0.9), ("b", -4.0), ("c", 2.0)]));
    }

    #[test]
    fn mismatched_ids_listed() {
        let x = entries(&[("a", 1.0), ("b", 2.0)]);
        let w = entries(&[("a", 1.0)]);
        let err = fuse_scores(&x, &w, Execution::default())
            .unwrap_err()
            .to_string();
        assert!(err.contains("only in first: \"b\""), "{err}");
    }

    #[test]
    fn long_mismatch_is_truncated() {
        let x: Vec<ScoreEntry> = (0..25)
            .map(|i| ScoreEntry::new(format!("u{i}"), 1.0))
            .collect();
        let err = fuse_scores(&x, &[], Execution::default())
            .unwrap_err()
            .to_string();
        assert!(err.contains("and 15 more"), "{err}");
    }

    #[test]
    fn duplicates_rejected() {
        let x = entries(&[("a", 1.0), ("a", 2.0)]);
        assert!(fuse_scores(&x, &x, Execution::default()).is_err());
        assert!(read_scores("a\t1\na\t2\n".as_bytes(), "s").is_err());
    }

    #[test]
    fn score_file_is_exact() {
        let s = entries(&[("a", 0.1), ("b", -1.0 / 3.0), ("c", 1e-300)]);
        let mut buf = Vec::new();
        write_scores(&s, &mut buf).unwrap();
        assert!(std::str::from_utf8(&buf)
            .unwrap()
            .starts_with("a\t0.10000000000000001\n"));
        assert_eq!(read_scores(&buf[..], "s").unwrap(), s);
    }

    proptest! {
        #[test]
        fn fusion_laws(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let f = fuse_max_abs(a, b);
            prop_assert_eq!(f.abs(), a.abs().max(b.abs()));
            prop_assert!(f == a || f == b);
            prop_assert_eq!(fuse_max_abs(a, a), a);
            prop_assert_eq!(fuse_max_abs(-a, -b), -f);
        }

        #[test]
        fn permuting_rows_permutes_output(seed in any::<u64>()) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let x: Vec<ScoreEntry> = (0..20).map(|i| ScoreEntry::new(format!("u{i}"), rng.symmetric(3.0))).collect();
            let w: Vec<ScoreEntry> = (0..20).map(|i| ScoreEntry::new(format!("u{i}"), rng.symmetric(3.0))).collect();
            let fused = fuse_scores(&x, &w, Execution::default()).unwrap();
            let mut perm: Vec<usize> = (0..20).collect();
            rng.shuffle(&mut perm);
            let xp: Vec<ScoreEntry> = perm.iter().map(|&i| x[i].clone()).collect();
            let fp = fuse_scores(&xp, &w, Execution::default()).unwrap();
            for (k, &i) in perm.iter().enumerate() {
                prop_assert_eq!(&fp[k], &fused[i]);
            }
        }
    }
}
