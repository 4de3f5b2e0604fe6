//! Synthetic hidden-state stacks with a controllable class separation.
//!
//! Every entry is unit-variance [`SplitMix64::unit_noise`]. On the first
//! `max(1, dim / 4)` features of every layer and frame, bonafide stacks add
//! `+delta / 2` and deepfake stacks add `-delta / 2`. Utterance `i` (bonafide
//! rows first, then deepfake) draws from `mix_seed(seed, i)` in
//! layer, frame, feature order.

use std::path::Path;

use super::feature_path;
use super::hstk::{write_hstk_file, HiddenStack};
use super::manifest::{write_manifest, Label, Manifest, TrialRecord, NO_ATTACK};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::rng::{mix_seed, SplitMix64};

pub const FIXTURE_ATTACKS: [&str; 6] = ["A09", "A10", "A11", "A12", "A13", "A14"];
pub const FIXTURE_ORIGINS: [&str; 3] = ["kising", "m4singer", "acesinger"];

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureParams {
    /// Utterances per class.
    pub per_class: usize,
    pub layers: usize,
    pub frames: usize,
    pub dim: usize,
    /// Mean gap between the classes on the signal features.
    pub delta: f64,
    pub seed: u64,
    /// Prefix of generated utterance ids, e.g. `train`.
    pub id_prefix: String,
}

impl FixtureParams {
    pub fn validate(&self) -> Result<()> {
        if self.per_class == 0 {
            return Err(Error::invalid("fixture", "per_class must be at least 1"));
        }
        if self.layers == 0 || self.frames == 0 || self.dim == 0 {
            return Err(Error::invalid(
                "fixture",
                "layers, frames and dim must be positive",
            ));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid(
                "fixture",
                format!("delta must be finite and >= 0, got {}", self.delta),
            ));
        }
        super::validate_utterance_id(&self.id_prefix).map_err(|m| Error::invalid("fixture", m))?;
        Ok(())
    }

    /// Number of leading features that carry the class offset.
    pub fn signal_dims(&self) -> usize {
        (self.dim / 4).max(1)
    }

    /// `key=value` description written next to generated files.
    pub fn describe(&self) -> String {
        format!(
            "id_prefix={}\nper_class={}\nlayers={}\nframes={}\ndim={}\ndelta={}\nseed={}\nsignal_dims={}\nnoise=irwin_hall_12\nrng=splitmix64\n",
            self.id_prefix,
            self.per_class,
            self.layers,
            self.frames,
            self.dim,
            self.delta,
            self.seed,
            self.signal_dims()
        )
    }
}

#[derive(Debug, Clone)]
pub struct FixtureSplit {
    pub stacks: Vec<HiddenStack>,
    pub manifest: Manifest,
}

impl FixtureSplit {
    /// Writes `manifest.tsv` and `feats/<id>.hstk` under `dir`.
    pub fn write_to(&self, dir: &Path, exec: Execution) -> Result<()> {
        let feats = dir.join("feats");
        std::fs::create_dir_all(&feats).map_err(|e| Error::io(&feats, e))?;
        let manifest_path = dir.join("manifest.tsv");
        let file =
            std::fs::File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        write_manifest(&self.manifest, std::io::BufWriter::new(file))
            .map_err(|e| Error::io(&manifest_path, e))?;
        exec.try_map(&self.stacks, |s| {
            write_hstk_file(s, &feature_path(&feats, s.utterance_id()))
        })?;
        Ok(())
    }
}

fn record_for(params: &FixtureParams, index: usize) -> TrialRecord {
    let origin = FIXTURE_ORIGINS[index % FIXTURE_ORIGINS.len()].to_string();
    if index < params.per_class {
        TrialRecord {
            utterance_id: format!("{}_bona_{:05}", params.id_prefix, index),
            label: Label::Bonafide,
            attack_type: NO_ATTACK.into(),
            origin,
        }
    } else {
        let k = index - params.per_class;
        TrialRecord {
            utterance_id: format!("{}_spoof_{:05}", params.id_prefix, k),
            label: Label::Deepfake,
            attack_type: FIXTURE_ATTACKS[k % FIXTURE_ATTACKS.len()].into(),
            origin,
        }
    }
}

fn stack_for(params: &FixtureParams, record: &TrialRecord, index: usize) -> HiddenStack {
    let mut rng = SplitMix64::new(mix_seed(params.seed, index as u64));
    let shift = match record.label {
        Label::Bonafide => params.delta / 2.0,
        Label::Deepfake => -params.delta / 2.0,
    };
    let signal = params.signal_dims();
    let mut values = Vec::with_capacity(params.layers * params.frames * params.dim);
    for _layer in 0..params.layers {
        for _frame in 0..params.frames {
            for d in 0..params.dim {
                let mut v = rng.unit_noise();
                if d < signal {
                    v += shift;
                }
                values.push(v as f32);
            }
        }
    }
    HiddenStack::new(
        record.utterance_id.clone(),
        params.layers,
        params.frames,
        params.dim,
        values,
    )
    .expect("fixture stacks satisfy the format invariants")
}

/// Generates `2 * per_class` stacks and their manifest. Deterministic in
/// `params`; the execution mode only affects speed.
pub fn synth_fixture(params: &FixtureParams, exec: Execution) -> Result<FixtureSplit> {
    params.validate()?;
    let total = 2 * params.per_class;
    let records: Vec<TrialRecord> = (0..total).map(|i| record_for(params, i)).collect();
    let stacks = exec.map_range(total, |i| stack_for(params, &records[i], i));
    let manifest = Manifest::from_records(records)?;
    Ok(FixtureSplit { stacks, manifest })
}
