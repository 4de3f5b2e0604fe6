use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numfmt::{fmt_g17, parse_f64};

/// Training hyperparameters. Read from flat `key=value` text whose keys are
/// the field names; `#` starts a comment line.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Cosine period in epochs.
    pub t_max: u64,
    pub eta_min: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub focal_gamma: f64,
    pub focal_alpha: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-5,
            weight_decay: 1e-9,
            t_max: 10,
            eta_min: 1e-6,
            batch_size: 5,
            epochs: 50,
            focal_gamma: 2.0,
            focal_alpha: 0.25,
            seed: 0,
        }
    }
}

pub const CONFIG_KEYS: [&str; 9] = [
    "learning_rate",
    "weight_decay",
    "t_max",
    "eta_min",
    "batch_size",
    "epochs",
    "focal_gamma",
    "focal_alpha",
    "seed",
];

impl TrainConfig {
    /// Rate of the XLS-R branch. It sits below the default `eta_min`, so its
    /// schedule is flat.
    pub const XLSR_LEARNING_RATE: f64 = 5e-7;

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid("train config", m));
        let finite = [
            ("learning_rate", self.learning_rate),
            ("weight_decay", self.weight_decay),
            ("eta_min", self.eta_min),
            ("focal_gamma", self.focal_gamma),
            ("focal_alpha", self.focal_alpha),
        ];
        if let Some((k, v)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return bad(format!("{k} must be finite, got {v}"));
        }
        if self.eta_min < 0.0 || self.learning_rate < 0.0 {
            return bad("learning rates must be non-negative".into());
        }
        if self.weight_decay < 0.0 {
            return bad("weight_decay must be non-negative".into());
        }
        if self.batch_size == 0 || self.epochs == 0 || self.t_max == 0 {
            return bad("batch_size, epochs and t_max must be at least 1".into());
        }
        if self.focal_gamma < 0.0 {
            return bad("focal_gamma must be >= 0".into());
        }
        if !(self.focal_alpha > 0.0 && self.focal_alpha < 1.0) {
            return bad(format!(
                "focal_alpha must lie in (0, 1), got {}",
                self.focal_alpha
            ));
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let float = || {
            parse_f64(value).ok_or_else(|| {
                Error::invalid("train config", format!("{key}: bad number {value:?}"))
            })
        };
        let int = || {
            value.parse::<u64>().map_err(|_| {
                Error::invalid("train config", format!("{key}: bad integer {value:?}"))
            })
        };
        match key {
            "learning_rate" => self.learning_rate = float()?,
            "weight_decay" => self.weight_decay = float()?,
            "t_max" => self.t_max = int()?,
            "eta_min" => self.eta_min = float()?,
            "batch_size" => self.batch_size = int()? as usize,
            "epochs" => self.epochs = int()? as usize,
            "focal_gamma" => self.focal_gamma = float()?,
            "focal_alpha" => self.focal_alpha = float()?,
            "seed" => self.seed = int()?,
            _ => {
                return Err(Error::invalid(
                    "train config",
                    format!("unknown key {key:?} (known: {})", CONFIG_KEYS.join(", ")),
                ))
            }
        }
        Ok(())
    }

    /// Applies `key=value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str, source_name: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(source_name, i + 1, "expected key=value"))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::parse(source_name, i + 1, e.to_string()))?;
        }
        Ok(())
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text, source_name)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let floats = [
            ("learning_rate", self.learning_rate),
            ("weight_decay", self.weight_decay),
        ];
        for (k, v) in floats {
            writeln!(out, "{k}={}", fmt_g17(v)).unwrap();
        }
        writeln!(out, "t_max={}", self.t_max).unwrap();
        writeln!(out, "eta_min={}", fmt_g17(self.eta_min)).unwrap();
        writeln!(out, "batch_size={}", self.batch_size).unwrap();
        writeln!(out, "epochs={}", self.epochs).unwrap();
        writeln!(out, "focal_gamma={}", fmt_g17(self.focal_gamma)).unwrap();
        writeln!(out, "focal_alpha={}", fmt_g17(self.focal_alpha)).unwrap();
        writeln!(out, "seed={}", self.seed).unwrap();
        out
    }
}
