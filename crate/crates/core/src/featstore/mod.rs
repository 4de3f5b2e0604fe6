//! Hidden-state stacks, trial manifests and synthetic fixtures.

mod fixture;
mod hstk;
mod keymap;
mod manifest;

pub use fixture::{synth_fixture, FixtureParams, FixtureSplit, FIXTURE_ATTACKS, FIXTURE_ORIGINS};
pub use hstk::{
    read_hstk, read_hstk_file, write_hstk, write_hstk_file, HiddenStack, HSTK_FIXED_HEADER_LEN,
    HSTK_MAGIC, HSTK_VERSION,
};
pub use keymap::{import_key, KeyColumnMap};
pub use manifest::{
    read_manifest, read_manifest_file, write_manifest, Label, Manifest, TrialRecord, NO_ATTACK,
};

use std::path::{Path, PathBuf};

/// File holding the stack for `utterance_id` inside a feature directory.
pub fn feature_path(dir: &Path, utterance_id: &str) -> PathBuf {
    dir.join(format!("{utterance_id}.hstk"))
}

/// Checks the utterance-id rules shared by stacks and manifests: non-empty,
/// no whitespace, no control characters, no path separators.
pub fn validate_utterance_id(id: &str) -> Result<(), String> {
    if id.is_empty() {
        return Err("empty utterance id".into());
    }
    if let Some(c) = id
        .chars()
        .find(|c| c.is_whitespace() || c.is_control() || *c == '/' || *c == '\\')
    {
        return Err(format!(
            "utterance id {id:?} contains forbidden character {c:?}"
        ));
    }
    if id == "." || id == ".." {
        return Err(format!("utterance id {id:?} is a path component"));
    }
    Ok(())
}
