use std::fmt;

use super::eer::{eer_from_scores, EerResult};
use crate::ensemble::ScoreEntry;
use crate::error::{Error, Result};
use crate::featstore::{Label, Manifest};
use crate::par::Execution;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTrial {
    pub utterance_id: String,
    pub score: f64,
    pub label: Label,
    pub attack_type: String,
    pub origin: String,
}

/// Attaches manifest metadata to scores. Every scored id must be in the
/// manifest; manifest rows without a score are skipped with a warning.
pub fn join_scores(scores: &[ScoreEntry], manifest: &Manifest) -> Result<Vec<ScoredTrial>> {
    let index = manifest.index();
    let mut out = Vec::with_capacity(scores.len());
    for s in scores {
        let r = index.get(s.utterance_id.as_str()).ok_or_else(|| {
            Error::Data(format!(
                "scored utterance {:?} is not in the manifest",
                s.utterance_id
            ))
        })?;
        out.push(ScoredTrial {
            utterance_id: s.utterance_id.clone(),
            score: s.score,
            label: r.label,
            attack_type: r.attack_type.clone(),
            origin: r.origin.clone(),
        });
    }
    if out.len() < manifest.len() {
        log::warn!("{} manifest rows have no score", manifest.len() - out.len());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Slice {
    Overall,
    Attack(String),
    Origin(String),
    ExcludeOrigin(String),
}

impl fmt::Display for Slice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slice::Overall => write!(f, "overall"),
            Slice::Attack(a) => write!(f, "attack:{a}"),
            Slice::Origin(o) => write!(f, "origin:{o}"),
            Slice::ExcludeOrigin(o) => write!(f, "exclude_origin:{o}"),
        }
    }
}

impl std::str::FromStr for Slice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "overall" {
            return Ok(Slice::Overall);
        }
        let (kind, tag) = s
            .split_once(':')
            .ok_or_else(|| format!("unknown slice {s:?}"))?;
        if tag.is_empty() {
            return Err(format!("empty tag in slice {s:?}"));
        }
        match kind {
            "attack" => Ok(Slice::Attack(tag.into())),
            "origin" => Ok(Slice::Origin(tag.into())),
            "exclude_origin" => Ok(Slice::ExcludeOrigin(tag.into())),
            _ => Err(format!("unknown slice kind {kind:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceResult {
    pub slice: Slice,
    pub result: EerResult,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BreakdownMode {
    Overall,
    /// All bonafide trials against each attack's spoofs.
    PerAttack,
    /// Each origin's own bonafide and spoof trials.
    PerOrigin,
    /// Everything except one origin.
    ExcludeOrigin(String),
}

fn first_seen<'a>(tags: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen = Vec::new();
    for t in tags {
        if !seen.contains(&t) {
            seen.push(t);
        }
    }
    seen
}

/// Slices in a fixed order: attacks sorted by tag, origins in order of first
/// appearance. Slices lacking a class are dropped with a warning.
pub fn breakdown(
    trials: &[ScoredTrial],
    mode: &BreakdownMode,
    exec: Execution,
) -> Result<Vec<SliceResult>> {
    if trials.is_empty() {
        return Err(Error::invalid("trial set", "no scored trials"));
    }
    let subsets: Vec<(Slice, Vec<&ScoredTrial>)> = match mode {
        BreakdownMode::Overall => vec![(Slice::Overall, trials.iter().collect())],
        BreakdownMode::PerAttack => {
            let mut attacks: Vec<&str> = first_seen(
                trials
                    .iter()
                    .filter(|t| !t.label.is_bonafide())
                    .map(|t| t.attack_type.as_str()),
            );
            attacks.sort_unstable();
            attacks
                .into_iter()
                .map(|a| {
                    let subset = trials
                        .iter()
                        .filter(|t| t.label.is_bonafide() || t.attack_type == a)
                        .collect();
                    (Slice::Attack(a.to_string()), subset)
                })
                .collect()
        }
        BreakdownMode::PerOrigin => first_seen(trials.iter().map(|t| t.origin.as_str()))
            .into_iter()
            .map(|o| {
                (
                    Slice::Origin(o.to_string()),
                    trials.iter().filter(|t| t.origin == o).collect(),
                )
            })
            .collect(),
        BreakdownMode::ExcludeOrigin(o) => vec![(
            Slice::ExcludeOrigin(o.clone()),
            trials.iter().filter(|t| &t.origin != o).collect(),
        )],
    };

    let results = exec.map(&subsets, |(slice, subset)| {
        let scores: Vec<f64> = subset.iter().map(|t| t.score).collect();
        let labels: Vec<Label> = subset.iter().map(|t| t.label).collect();
        let has_both =
            labels.iter().any(|l| l.is_bonafide()) && labels.iter().any(|l| !l.is_bonafide());
        if !has_both {
            return Ok(None);
        }
        eer_from_scores(&scores, &labels).map(|result| {
            Some(SliceResult {
                slice: slice.clone(),
                result,
            })
        })
    });

    let mut out = Vec::with_capacity(results.len());
    for ((slice, subset), r) in subsets.iter().zip(results) {
        match r? {
            Some(r) => out.push(r),
            None => log::warn!(
                "slice {slice} omitted: {} trials, needs bonafide and spoof",
                subset.len()
            ),
        }
    }
    Ok(out)
}
