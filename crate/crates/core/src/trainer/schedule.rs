use std::f64::consts::PI;

use super::TrainConfig;

/// Cosine-annealed learning rate for zero-based epoch `t`.
///
/// Within a cycle the phase runs `0, 1, ..., t_max`; the phase-`t_max` epoch
/// sits at the floor and the next epoch restarts at phase 1. Phase 0 only
/// occurs at `t = 0`. The floor is `min(eta_min, learning_rate)`: a rate at
/// or below `eta_min` stays constant, and a zero rate freezes training.
pub fn cosine_lr(t: u64, cfg: &TrainConfig) -> f64 {
    let t_max = cfg.t_max.max(1);
    let phase = if t == 0 { 0 } else { (t - 1) % t_max + 1 };
    let floor = cfg.eta_min.min(cfg.learning_rate);
    floor + (cfg.learning_rate - floor) * (1.0 + (PI * phase as f64 / t_max as f64).cos()) / 2.0
}
