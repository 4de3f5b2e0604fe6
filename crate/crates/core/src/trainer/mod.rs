//! Fits the head on frozen features: focal loss, AdamW, cosine-annealed
//! learning rate, fixed-size mini-batches.

mod adamw;
mod config;
mod features;
mod focal;
mod schedule;

pub use adamw::{adamw_step, OptimizerState, BETA1, BETA2, EPSILON};
pub use config::{TrainConfig, CONFIG_KEYS};
pub use features::FeatureSet;
pub use focal::{focal_loss, softplus};
pub use schedule::cosine_lr;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::evalmetrics::eer_from_scores;
use crate::featstore::{HiddenStack, Label};
use crate::numfmt::fmt_g17;
use crate::par::Execution;
use crate::rng::{mix_seed, SplitMix64};
use crate::slshead::{sls_backward, sls_forward, SlsGrads, SlsParams};

const INIT_STREAM: u64 = 0x1417;
const SHUFFLE_STREAM: u64 = 0x5_0000_0000;

/// Focal loss of one stack and its parameter gradient.
pub fn sample_loss_and_grad(
    stack: &HiddenStack,
    label: Label,
    params: &SlsParams,
    cfg: &TrainConfig,
) -> Result<(f64, SlsGrads)> {
    let (score, cache) = sls_forward(stack, params)?;
    let (loss, d_score) = focal_loss(score, label.is_bonafide(), cfg.focal_gamma, cfg.focal_alpha);
    Ok((loss, sls_backward(&cache, d_score)))
}

/// Mean focal loss over a batch and its gradient. Per-sample work may run in
/// parallel; the sums are taken in batch order.
pub fn batch_loss_and_grad(
    batch: &[(&HiddenStack, Label)],
    params: &SlsParams,
    cfg: &TrainConfig,
    exec: Execution,
) -> Result<(f64, SlsGrads)> {
    if batch.is_empty() {
        return Err(Error::invalid("batch", "empty batch"));
    }
    let parts = exec.try_map(batch, |(s, y)| sample_loss_and_grad(s, *y, params, cfg))?;
    let mut grad = SlsParams::zeros(params.dim());
    let mut total = 0.0;
    for (loss, g) in &parts {
        total += loss;
        grad.accumulate(g);
    }
    let inv = 1.0 / batch.len() as f64;
    grad.scale(inv);
    Ok((total * inv, grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// One-based.
    pub epoch: usize,
    pub lr: f64,
    /// Mean per-sample focal loss over the epoch.
    pub mean_loss: f64,
    pub train_eer: f64,
    pub dev_eer: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the selected epoch: best dev EER (later epoch on ties),
    /// or the final epoch without a dev set.
    pub best: SlsParams,
    pub best_epoch: usize,
    pub final_params: SlsParams,
    pub history: Vec<EpochRecord>,
}

pub const HISTORY_HEADER: &str = "epoch,lr,mean_loss,train_eer,dev_eer";

/// History as CSV; `dev_eer` is empty when no dev set was given.
pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in history {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.epoch,
            fmt_g17(r.lr),
            fmt_g17(r.mean_loss),
            fmt_g17(r.train_eer),
            r.dev_eer.map(fmt_g17).unwrap_or_default()
        )
        .unwrap();
    }
    out
}

/// Scores every stack of `features` in manifest order.
pub fn score_features(
    params: &SlsParams,
    features: &FeatureSet,
    exec: Execution,
) -> Result<Vec<f64>> {
    features.map_stacks(exec, |s| crate::slshead::sls_score(s, params))
}

fn eer_of(params: &SlsParams, features: &FeatureSet, exec: Execution) -> Result<f64> {
    let scores = score_features(params, features, exec)?;
    Ok(eer_from_scores(&scores, features.labels())?.eer)
}

/// Runs the full training loop. Output is a deterministic function of the
/// inputs and `cfg.seed`, independent of `exec`.
pub fn train(
    train_set: &FeatureSet,
    dev_set: Option<&FeatureSet>,
    cfg: &TrainConfig,
    exec: Execution,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::invalid("training set", "no utterances"));
    }
    let dim = train_set.dim();
    if let Some(dev) = dev_set {
        if dev.dim() != dim {
            return Err(Error::Data(format!(
                "dev features have dim {}, train features {dim}",
                dev.dim()
            )));
        }
    }

    let mut params = SlsParams::init_for_training(dim, mix_seed(cfg.seed, INIT_STREAM));
    let mut state = OptimizerState::new(&params);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, SlsParams)> = None;
    let n = train_set.len();

    for epoch in 0..cfg.epochs {
        let lr = cosine_lr(epoch as u64, cfg);
        let mut order: Vec<usize> = (0..n).collect();
        SplitMix64::new(mix_seed(cfg.seed, SHUFFLE_STREAM + epoch as u64)).shuffle(&mut order);

        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let stacks = train_set.fetch(chunk, exec)?;
            let batch: Vec<(&HiddenStack, Label)> = stacks
                .iter()
                .zip(chunk)
                .map(|(s, &i)| (s.as_ref(), train_set.labels()[i]))
                .collect();
            let (loss, grad) = batch_loss_and_grad(&batch, &params, cfg, exec)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss at epoch {} batch {}",
                    epoch + 1,
                    b + 1
                )));
            }
            adamw_step(&mut params, &grad, &mut state, lr, cfg.weight_decay)
                .map_err(|e| Error::Numeric(format!("epoch {} batch {}: {e}", epoch + 1, b + 1)))?;
            loss_sum += loss * chunk.len() as f64;
        }

        let train_eer = eer_of(&params, train_set, exec)?;
        let dev_eer = dev_set.map(|d| eer_of(&params, d, exec)).transpose()?;
        let record = EpochRecord {
            epoch: epoch + 1,
            lr,
            mean_loss: loss_sum / n as f64,
            train_eer,
            dev_eer,
        };
        log::info!(
            "epoch {} lr {:.3e} loss {:.6} train_eer {:.4}{}",
            record.epoch,
            lr,
            record.mean_loss,
            train_eer,
            dev_eer
                .map(|e| format!(" dev_eer {e:.4}"))
                .unwrap_or_default()
        );
        let key = dev_eer.unwrap_or(0.0);
        if best.as_ref().is_none_or(|(b, _, _)| key <= *b) {
            best = Some((key, epoch + 1, params.clone()));
        }
        history.push(record);
    }

    let (_, best_epoch, best) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        best,
        best_epoch,
        final_params: params,
        history,
    })
}
