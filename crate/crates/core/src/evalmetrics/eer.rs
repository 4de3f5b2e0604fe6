use crate::error::{Error, Result};
use crate::featstore::Label;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerResult {
    /// In `[0, 1]`.
    pub eer: f64,
    pub threshold: f64,
    pub n_bonafide: usize,
    pub n_spoof: usize,
}

/// EER of `scores` (higher = more bonafide) against `labels`.
///
/// A trial is accepted as bonafide when `score >= threshold`. The sweep
/// visits `-inf`, every distinct score in ascending order, then `+inf`,
/// with `FAR` the fraction of spoofs accepted and `FRR` the fraction of
/// bonafide rejected. At the first threshold where `FAR <= FRR` the two rate
/// curves are intersected on the segment back to the previous threshold:
///
/// ```text
/// t   = (FAR0 - FRR0) / ((FAR0 - FRR0) - (FAR1 - FRR1))
/// EER = FAR0 + t * (FAR1 - FAR0)
/// ```
///
/// which is exact (`FAR1`) when the rates meet at a threshold. Tied scores
/// always move across the threshold together.
pub fn eer_from_scores(scores: &[f64], labels: &[Label]) -> Result<EerResult> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension {
            what: "labels",
            expected: scores.len(),
            got: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::Numeric(format!("score {i} is NaN")));
    }
    let n_bonafide = labels.iter().filter(|l| l.is_bonafide()).count();
    let n_spoof = labels.len() - n_bonafide;
    if n_bonafide == 0 || n_spoof == 0 {
        return Err(Error::invalid(
            "trial set",
            format!("EER needs both classes ({n_bonafide} bonafide, {n_spoof} spoof)"),
        ));
    }

    let mut trials: Vec<(f64, bool)> = scores
        .iter()
        .zip(labels)
        .map(|(&s, l)| (s, l.is_bonafide()))
        .collect();
    trials.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (nb, ns) = (n_bonafide as f64, n_spoof as f64);
    let rates = |bona_below: usize, spoof_below: usize| {
        ((n_spoof - spoof_below) as f64 / ns, bona_below as f64 / nb)
    };
    // Sign of FAR - FRR in exact integer arithmetic.
    let cmp = |bona_below: usize, spoof_below: usize| {
        ((n_spoof - spoof_below) as u128 * n_bonafide as u128)
            .cmp(&(bona_below as u128 * n_spoof as u128))
    };

    let mut prev_threshold = f64::NEG_INFINITY;
    let (mut prev_far, mut prev_frr) = (1.0, 0.0);
    let (mut bona_below, mut spoof_below) = (0usize, 0usize);
    let mut i = 0;
    loop {
        let threshold = if i < trials.len() {
            trials[i].0
        } else {
            f64::INFINITY
        };
        let (far, frr) = rates(bona_below, spoof_below);
        match cmp(bona_below, spoof_below) {
            std::cmp::Ordering::Equal => {
                return Ok(EerResult {
                    eer: far,
                    threshold,
                    n_bonafide,
                    n_spoof,
                })
            }
            std::cmp::Ordering::Less => {
                let d0 = prev_far - prev_frr;
                let d1 = far - frr;
                let t = d0 / (d0 - d1);
                let eer = prev_far + t * (far - prev_far);
                let threshold = if prev_threshold.is_finite() && threshold.is_finite() {
                    prev_threshold + t * (threshold - prev_threshold)
                } else if threshold.is_finite() {
                    threshold
                } else {
                    prev_threshold
                };
                return Ok(EerResult {
                    eer: eer.clamp(0.0, 1.0),
                    threshold,
                    n_bonafide,
                    n_spoof,
                });
            }
            std::cmp::Ordering::Greater => {}
        }
        // Move every trial tied at `threshold` below the next threshold.
        if i >= trials.len() {
            unreachable!("FAR < FRR holds at +inf");
        }
        while i < trials.len() && trials[i].0 == threshold {
            if trials[i].1 {
                bona_below += 1;
            } else {
                spoof_below += 1;
            }
            i += 1;
        }
        prev_threshold = threshold;
        prev_far = far;
        prev_frr = frr;
    }
}

pub fn compute_eer(trials: &[super::ScoredTrial]) -> Result<EerResult> {
    let scores: Vec<f64> = trials.iter().map(|t| t.score).collect();
    let labels: Vec<Label> = trials.iter().map(|t| t.label).collect();
    eer_from_scores(&scores, &labels)
}
