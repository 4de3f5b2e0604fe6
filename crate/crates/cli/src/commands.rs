use std::fmt;
use std::path::Path;

use log::info;
use svdd_core::ensemble::{fuse_files, read_scores_file, write_scores_file, ScoreEntry};
use svdd_core::evalmetrics::{
    breakdown, join_scores, parse_results_csv, render_report, results_csv, BreakdownMode, ReportRow,
};
use svdd_core::featstore::{
    import_key as import_key_file, read_manifest_file, synth_fixture, write_manifest,
    FixtureParams, KeyColumnMap,
};
use svdd_core::par::Execution;
use svdd_core::preprocess::{golden_vectors, golden_vectors_tsv};
use svdd_core::rng::mix_seed;
use svdd_core::slshead::{
    layer_weights, layer_weights_csv, read_checkpoint_file, write_checkpoint_file, LayerWeightRow,
};
use svdd_core::trainer::{
    history_csv, score_features, train as train_head, FeatureSet, TrainConfig,
};
use svdd_core::Error;

use crate::{
    EvalArgs, FixturesArgs, FuseArgs, ImportKeyArgs, ReportArgs, ScoreArgs, TrainArgs, WeightsArgs,
    WindowGoldenArgs,
};

/// Stream index that derives the dev-split seed from `--seed`.
const DEV_SEED_STREAM: u64 = 0xde5;

/// Crop cases always present in the parity file: shorter than, equal to and
/// longer than the default window, plus seed extremes.
const GOLDEN_CASES: [(usize, u64); 7] = [
    (16_000, 0),
    (64_000, 0),
    (64_001, 0),
    (70_000, 42),
    (100_000, 7),
    (200_000, 123_456_789),
    (64_100, u64::MAX),
];

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core(Error::Numeric(_)) => 3,
            Failure::Core(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CmdResult = Result<(), Failure>;

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn fixtures(a: &FixturesArgs, exec: Execution) -> CmdResult {
    let mut splits = vec![("train", a.per_class, a.seed)];
    if a.dev_per_class > 0 {
        splits.push(("dev", a.dev_per_class, mix_seed(a.seed, DEV_SEED_STREAM)));
    }
    let mut readme = String::new();
    for (name, per_class, seed) in splits {
        let params = FixtureParams {
            per_class,
            layers: a.layers,
            frames: a.frames,
            dim: a.dim,
            delta: a.delta,
            seed,
            id_prefix: name.into(),
        };
        params
            .validate()
            .map_err(|e| Failure::Usage(e.to_string()))?;
        let split = synth_fixture(&params, exec)?;
        split.write_to(&a.out.join(name), exec)?;
        readme.push_str(&format!("[{name}]\n{}\n", params.describe()));
        info!(
            "{name}: {} utterances in {}",
            split.stacks.len(),
            a.out.join(name).display()
        );
    }
    write_text(&a.out.join("fixture.txt"), &readme)?;
    Ok(())
}

fn load_config(a: &TrainArgs) -> Result<TrainConfig, Failure> {
    let mut cfg = TrainConfig::default();
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        cfg.apply_text(&text, &path.display().to_string())
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    for item in &a.overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got {item:?}")))?;
        cfg.set(key.trim(), value.trim())
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

pub fn train(a: &TrainArgs, exec: Execution) -> CmdResult {
    let cfg = load_config(a)?;
    let manifest = read_manifest_file(&a.manifest)?;
    let train_set = FeatureSet::load(&manifest, &a.features, exec)?;
    let dev_set = match (&a.dev_manifest, &a.dev_features) {
        (Some(m), Some(f)) => Some(FeatureSet::load(&read_manifest_file(m)?, f, exec)?),
        _ => None,
    };
    info!(
        "training on {} utterances ({} dev), {} epochs",
        train_set.len(),
        dev_set.as_ref().map_or(0, |d| d.len()),
        cfg.epochs
    );
    let outcome = train_head(&train_set, dev_set.as_ref(), &cfg, exec)?;
    write_checkpoint_file(&outcome.best, &a.out)?;
    if let Some(last) = outcome.history.last() {
        info!(
            "final epoch {}: loss {:.6} train EER {:.4}; kept epoch {}",
            last.epoch, last.mean_loss, last.train_eer, outcome.best_epoch
        );
    }
    emit(a.history.as_deref(), &history_csv(&outcome.history))?;
    Ok(())
}

pub fn score(a: &ScoreArgs, exec: Execution) -> CmdResult {
    let params = read_checkpoint_file(&a.checkpoint)?;
    let manifest = read_manifest_file(&a.manifest)?;
    let features = FeatureSet::on_disk(&manifest, &a.features)?;
    let scores = score_features(&params, &features, exec)?;
    let entries: Vec<ScoreEntry> = features
        .ids()
        .iter()
        .zip(scores)
        .map(|(id, s)| ScoreEntry::new(id.clone(), s))
        .collect();
    write_scores_file(&entries, &a.out)?;
    info!("scored {} utterances", entries.len());
    Ok(())
}

pub fn fuse(a: &FuseArgs, exec: Execution) -> CmdResult {
    let fused = fuse_files(&a.scores_x, &a.scores_w, &a.out, exec)?;
    info!("fused {} scores", fused.len());
    Ok(())
}

pub fn eval(a: &EvalArgs, exec: Execution) -> CmdResult {
    let scores = read_scores_file(&a.scores)?;
    let manifest = read_manifest_file(&a.manifest)?;
    let trials = join_scores(&scores, &manifest)?;
    let mut modes = vec![BreakdownMode::Overall];
    if a.per_attack {
        modes.push(BreakdownMode::PerAttack);
    }
    if a.per_origin {
        modes.push(BreakdownMode::PerOrigin);
    }
    modes.extend(
        a.exclude_origin
            .iter()
            .cloned()
            .map(BreakdownMode::ExcludeOrigin),
    );
    let mut rows = Vec::new();
    for mode in &modes {
        rows.extend(breakdown(&trials, mode, exec)?.iter().map(ReportRow::from));
    }
    if let Some(path) = &a.out_csv {
        write_text(path, &results_csv(&rows))?;
    }
    emit(a.out.as_deref(), &render_report(&rows))?;
    Ok(())
}

pub fn report(a: &ReportArgs) -> CmdResult {
    let text = std::fs::read_to_string(&a.results).map_err(|e| Error::io(&a.results, e))?;
    let rows = parse_results_csv(&text, &a.results.display().to_string())?;
    emit(a.out.as_deref(), &render_report(&rows))?;
    Ok(())
}

pub fn weights(a: &WeightsArgs, exec: Execution) -> CmdResult {
    let params = read_checkpoint_file(&a.checkpoint)?;
    let manifest = read_manifest_file(&a.manifest)?;
    let features = FeatureSet::on_disk(&manifest, &a.features)?;
    let alphas = features.map_stacks(exec, |stack| layer_weights(stack, &params))?;
    let rows: Vec<LayerWeightRow> = features
        .ids()
        .iter()
        .zip(alphas)
        .map(|(id, alpha)| LayerWeightRow {
            utterance_id: id.clone(),
            alpha,
        })
        .collect();
    write_text(&a.out, &layer_weights_csv(&rows))?;
    Ok(())
}

fn parse_case(s: &str) -> Result<(usize, u64), Failure> {
    let bad = || Failure::Usage(format!("--case expects LENGTH:SEED, got {s:?}"));
    let (len, seed) = s.split_once(':').ok_or_else(bad)?;
    Ok((
        len.trim().parse().map_err(|_| bad())?,
        seed.trim().parse().map_err(|_| bad())?,
    ))
}

pub fn window_golden(a: &WindowGoldenArgs) -> CmdResult {
    if a.window == 0 {
        return Err(Failure::Usage("--window must be positive".into()));
    }
    let mut cases = GOLDEN_CASES.to_vec();
    for c in &a.cases {
        cases.push(parse_case(c)?);
    }
    emit(
        a.out.as_deref(),
        &golden_vectors_tsv(&golden_vectors(&cases, a.window)),
    )?;
    Ok(())
}

pub fn import_key(a: &ImportKeyArgs) -> CmdResult {
    let map = KeyColumnMap::parse(&a.map).map_err(|e| Failure::Usage(e.to_string()))?;
    let file = std::fs::File::open(&a.key).map_err(|e| Error::io(&a.key, e))?;
    let manifest = import_key_file(
        std::io::BufReader::new(file),
        &a.key.display().to_string(),
        &map,
    )?;
    let mut out = Vec::new();
    write_manifest(&manifest, &mut out).map_err(|e| Error::io(&a.out, e))?;
    std::fs::write(&a.out, out).map_err(|e| Error::io(&a.out, e))?;
    info!("wrote {} trials", manifest.len());
    Ok(())
}
