use std::borrow::Cow;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::featstore::{feature_path, read_hstk_file, HiddenStack, Label, Manifest};
use crate::par::Execution;

#[derive(Debug, Clone)]
enum Storage {
    Memory(Vec<HiddenStack>),
    /// Read from `dir` whenever needed; for sets that do not fit in memory.
    Disk(PathBuf),
}

/// Stacks paired with labels, in manifest order.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    ids: Vec<String>,
    labels: Vec<Label>,
    dim: usize,
    storage: Storage,
}

fn load_checked(dir: &Path, id: &str) -> Result<HiddenStack> {
    let stack = read_hstk_file(&feature_path(dir, id))?;
    if stack.utterance_id() != id {
        return Err(Error::Data(format!(
            "{}: file holds utterance {:?}, manifest expects {id:?}",
            feature_path(dir, id).display(),
            stack.utterance_id()
        )));
    }
    Ok(stack)
}

fn check_present(manifest: &Manifest, dir: &Path) -> Result<()> {
    for r in manifest.iter() {
        let path = feature_path(dir, &r.utterance_id);
        if !path.is_file() {
            return Err(Error::Data(format!(
                "missing features for utterance {:?} (expected {})",
                r.utterance_id,
                path.display()
            )));
        }
    }
    Ok(())
}

fn check_dims<'a>(stacks: impl Iterator<Item = &'a HiddenStack>) -> Result<usize> {
    let mut dim = None;
    for s in stacks {
        match dim {
            None => dim = Some(s.dim()),
            Some(d) if d != s.dim() => {
                return Err(Error::Data(format!(
                    "utterance {:?} has feature dim {}, others have {d}",
                    s.utterance_id(),
                    s.dim()
                )))
            }
            _ => {}
        }
    }
    dim.ok_or_else(|| Error::invalid("feature set", "no utterances"))
}

impl FeatureSet {
    /// Reads every stack named by `manifest` from `dir` up front.
    pub fn load(manifest: &Manifest, dir: &Path, exec: Execution) -> Result<Self> {
        check_present(manifest, dir)?;
        let stacks = exec.try_map(&manifest.records, |r| load_checked(dir, &r.utterance_id))?;
        let dim = check_dims(stacks.iter())?;
        Ok(Self {
            ids: manifest.iter().map(|r| r.utterance_id.clone()).collect(),
            labels: manifest.iter().map(|r| r.label).collect(),
            dim,
            storage: Storage::Memory(stacks),
        })
    }

    /// Checks that every file exists and reads only the first; stacks are
    /// loaded on demand afterwards.
    pub fn on_disk(manifest: &Manifest, dir: &Path) -> Result<Self> {
        check_present(manifest, dir)?;
        let first = manifest
            .records
            .first()
            .ok_or_else(|| Error::invalid("feature set", "no utterances"))?;
        let dim = load_checked(dir, &first.utterance_id)?.dim();
        Ok(Self {
            ids: manifest.iter().map(|r| r.utterance_id.clone()).collect(),
            labels: manifest.iter().map(|r| r.label).collect(),
            dim,
            storage: Storage::Disk(dir.to_path_buf()),
        })
    }

    pub fn from_stacks(stacks: Vec<HiddenStack>, labels: Vec<Label>) -> Result<Self> {
        if stacks.len() != labels.len() {
            return Err(Error::Dimension {
                what: "labels",
                expected: stacks.len(),
                got: labels.len(),
            });
        }
        let dim = check_dims(stacks.iter())?;
        Ok(Self {
            ids: stacks
                .iter()
                .map(|s| s.utterance_id().to_string())
                .collect(),
            labels,
            dim,
            storage: Storage::Memory(stacks),
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    fn get(&self, i: usize) -> Result<Cow<'_, HiddenStack>> {
        match &self.storage {
            Storage::Memory(stacks) => Ok(Cow::Borrowed(&stacks[i])),
            Storage::Disk(dir) => {
                let s = load_checked(dir, &self.ids[i])?;
                if s.dim() != self.dim {
                    return Err(Error::Data(format!(
                        "utterance {:?} has feature dim {}, others have {}",
                        self.ids[i],
                        s.dim(),
                        self.dim
                    )));
                }
                Ok(Cow::Owned(s))
            }
        }
    }

    /// Stacks at `indices`, in that order.
    pub fn fetch(&self, indices: &[usize], exec: Execution) -> Result<Vec<Cow<'_, HiddenStack>>> {
        match &self.storage {
            Storage::Memory(_) => indices.iter().map(|&i| self.get(i)).collect(),
            Storage::Disk(_) => exec.try_map(indices, |&i| self.get(i)),
        }
    }

    /// Applies `f` to every stack, results in manifest order.
    pub fn map_stacks<R, F>(&self, exec: Execution, f: F) -> Result<Vec<R>>
    where
        R: Send,
        F: Fn(&HiddenStack) -> Result<R> + Sync + Send,
    {
        match &self.storage {
            Storage::Memory(stacks) => exec.try_map(stacks, |s| f(s)),
            Storage::Disk(_) => exec
                .map_range(self.len(), |i| self.get(i).and_then(|s| f(&s)))
                .into_iter()
                .collect(),
        }
    }
}
