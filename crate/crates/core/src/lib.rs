//! Downstream half of a singing-voice deepfake detector built on frozen
//! self-supervised speech backbones.
//!
//! A backbone (run elsewhere) turns each utterance into a stack of hidden
//! states, one `frames x dim` matrix per layer. This crate consumes those
//! stacks:
//!
//! * [`featstore`] reads and writes the `HSTK` stack format and trial
//!   manifests, and synthesizes fixtures so everything runs without a model.
//! * [`preprocess`] holds the fixed-length window rule the extractor applies
//!   to raw audio.
//! * [`slshead`] is the layer-gated classifier head with exact gradients.
//! * [`trainer`] fits the head with focal loss, AdamW and cosine annealing.
//! * [`ensemble`] fuses two systems' scores by larger magnitude.
//! * [`evalmetrics`] computes EER and per-attack / per-origin breakdowns.
//!
//! Data-parallel loops go through [`par::Execution`]; with the `parallel`
//! feature disabled everything runs sequentially and produces identical
//! results.

pub mod ensemble;
pub mod error;
pub mod evalmetrics;
pub mod featstore;
pub mod numfmt;
pub mod par;
pub mod preprocess;
pub mod rng;
pub mod slshead;
pub mod trainer;

pub use error::{Error, Result};
