//! Fixed-length input windows: waveforms longer than the window are cropped
//! to a contiguous slice, shorter ones are tiled end to end and truncated.
//!
//! The crop offset for a `len`-sample input is
//! `SplitMix64::new(seed).below(len - target + 1)`, so any implementation of
//! [`crate::rng::SplitMix64`] reproduces it. [`golden_vectors_tsv`] emits
//! reference cases for parity checks in other languages.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numfmt::parse_f64;
use crate::rng::{mix_seed, SplitMix64};

pub const SAMPLE_RATE: u32 = 16_000;
/// Four seconds at 16 kHz.
pub const DEFAULT_WINDOW: usize = 64_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if sample_rate != SAMPLE_RATE {
            return Err(Error::invalid(
                "waveform",
                format!("sample rate {sample_rate} Hz, expected {SAMPLE_RATE}"),
            ));
        }
        if samples.is_empty() {
            return Err(Error::invalid("waveform", "empty input"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(
                "waveform",
                format!("non-finite sample at {i}"),
            ));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CropMode {
    /// Seeded uniform offset (training).
    Random { seed: u64 },
    /// Offset 0 (evaluation).
    Head,
}

impl CropMode {
    /// Training crop re-drawn every epoch from one base seed.
    pub fn for_epoch(seed: u64, epoch: u64) -> Self {
        CropMode::Random {
            seed: mix_seed(seed, epoch),
        }
    }
}

/// Start of the crop for an input of `len` samples, or `None` when the input
/// is not longer than the window.
pub fn crop_offset(len: usize, target: usize, mode: CropMode) -> Option<usize> {
    if len <= target {
        return None;
    }
    Some(match mode {
        CropMode::Head => 0,
        CropMode::Random { seed } => {
            SplitMix64::new(seed).below((len - target + 1) as u64) as usize
        }
    })
}

pub fn fit_to_window(w: &Waveform, target: usize, mode: CropMode) -> Result<Waveform> {
    if target == 0 {
        return Err(Error::invalid("window", "target length must be positive"));
    }
    let src = w.samples();
    let samples = match crop_offset(src.len(), target, mode) {
        Some(o) => src[o..o + target].to_vec(),
        None => src.iter().copied().cycle().take(target).collect(),
    };
    Ok(Waveform {
        samples,
        sample_rate: w.sample_rate,
    })
}

/// One parity case: input length, seed and the crop offset (0 when no crop).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GoldenVector {
    pub length: usize,
    pub seed: u64,
    pub offset: usize,
}

pub fn golden_vectors(cases: &[(usize, u64)], target: usize) -> Vec<GoldenVector> {
    cases
        .iter()
        .map(|&(length, seed)| GoldenVector {
            length,
            seed,
            offset: crop_offset(length, target, CropMode::Random { seed }).unwrap_or(0),
        })
        .collect()
}

/// TSV with header `length\tseed\texpected_offset`.
pub fn golden_vectors_tsv(vectors: &[GoldenVector]) -> String {
    let mut out = String::from("length\tseed\texpected_offset\n");
    for v in vectors {
        writeln!(out, "{}\t{}\t{}", v.length, v.seed, v.offset).unwrap();
    }
    out
}

pub fn parse_golden_vectors(text: &str) -> Result<Vec<GoldenVector>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if (i == 0 && line.starts_with("length")) || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let bad = |m: &str| Error::parse("golden vectors", i + 1, m.to_string());
        if cols.len() != 3 {
            return Err(bad("expected 3 columns"));
        }
        out.push(GoldenVector {
            length: cols[0].parse().map_err(|_| bad("bad length"))?,
            seed: cols[1].parse().map_err(|_| bad("bad seed"))?,
            offset: cols[2].parse().map_err(|_| bad("bad offset"))?,
        });
    }
    Ok(out)
}

/// Reads a plain-text waveform: one sample per line.
pub fn parse_samples(text: &str) -> Result<Vec<f32>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_f64(l.trim())
                .map(|v| v as f32)
                .ok_or_else(|| Error::parse("samples", i + 1, format!("bad sample {l:?}")))
        })
        .collect()
}
