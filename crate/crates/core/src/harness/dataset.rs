use super::HarnessError;
use crate::image::io::probe_dimensions;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

const EXTENSIONS: [&str; 2] = ["png", "ppm"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// Sibling directories of inputs (`A` / `*_A`) and references
    /// (`C` / `*_C`, falling back to `B` / `*_B`) matched by file stem.
    #[default]
    PairedDirs,
    /// Flat directory of `<id>_in.<ext>` and `<id>_gt.<ext>` files.
    Suffix,
}

impl FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paired-dirs" => Ok(Self::PairedDirs),
            "suffix" => Ok(Self::Suffix),
            other => Err(format!("unknown layout `{other}` (expected paired-dirs or suffix)")),
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Self::PairedDirs => "paired-dirs",
            Self::Suffix => "suffix",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetPair {
    pub id: String,
    pub input_path: PathBuf,
    pub reference_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScanResult {
    pub pairs: Vec<DatasetPair>,
    pub skipped: Vec<SkippedPair>,
}

fn is_image(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Image files of a directory keyed by stem.
fn images_by_stem(dir: &Path) -> Result<ByStem, HarnessError> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if !is_image(&path) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            // Two files with one stem: keep the lexicographically smaller path.
            let slot = out.entry(stem.to_string()).or_insert_with(|| path.clone());
            if path < *slot {
                *slot = path;
            }
        }
    }
    Ok(out)
}

fn subdirs(root: &Path) -> Result<Vec<String>, HarnessError> {
    let mut names = Vec::new();
    for entry in fs::read_dir(root)? {
        let entry = entry?;
        if entry.file_type()?.is_dir() {
            if let Some(name) = entry.file_name().to_str() {
                names.push(name.to_string());
            }
        }
    }
    names.sort();
    Ok(names)
}

/// Input and reference directories of an ISTD-style root.
fn paired_dirs(root: &Path) -> Result<(PathBuf, PathBuf), HarnessError> {
    let names = subdirs(root)?;
    let prefix = if names.iter().any(|n| n == "A") {
        String::new()
    } else {
        let split: Vec<&String> = names.iter().filter(|n| n.ends_with("_A")).collect();
        match split.as_slice() {
            [one] => one[..one.len() - 1].to_string(),
            [] => {
                return Err(HarnessError::Layout(format!(
                    "no `A` or `*_A` directory under {}",
                    root.display()
                )))
            }
            many => {
                let list: Vec<&str> = many.iter().map(|s| s.as_str()).collect();
                return Err(HarnessError::Layout(format!(
                    "several input directories ({}); point --dataset at one split",
                    list.join(", ")
                )));
            }
        }
    };
    let reference = ["C", "B"]
        .iter()
        .map(|s| format!("{prefix}{s}"))
        .find(|n| names.contains(n))
        .ok_or_else(|| {
            HarnessError::Layout(format!("no `{prefix}C` or `{prefix}B` directory under {}", root.display()))
        })?;
    Ok((root.join(format!("{prefix}A")), root.join(reference)))
}

type ByStem = BTreeMap<String, PathBuf>;

fn suffix_files(root: &Path) -> Result<(ByStem, ByStem), HarnessError> {
    let mut inputs = BTreeMap::new();
    let mut refs = BTreeMap::new();
    for (stem, path) in images_by_stem(root)? {
        if let Some(id) = stem.strip_suffix("_in") {
            inputs.insert(id.to_string(), path);
        } else if let Some(id) = stem.strip_suffix("_gt") {
            refs.insert(id.to_string(), path);
        }
    }
    Ok((inputs, refs))
}

/// Pairs sorted by id. Missing counterparts and shape mismatches are skipped, not fatal.
pub fn scan_dataset(root: &Path, layout: Layout) -> Result<ScanResult, HarnessError> {
    if !root.is_dir() {
        return Err(HarnessError::DatasetNotFound(root.to_path_buf()));
    }
    let (inputs, refs) = match layout {
        Layout::PairedDirs => {
            let (a, b) = paired_dirs(root)?;
            (images_by_stem(&a)?, images_by_stem(&b)?)
        }
        Layout::Suffix => suffix_files(root)?,
    };
    if inputs.is_empty() {
        return Err(HarnessError::EmptyDataset(root.to_path_buf()));
    }
    let mut result = ScanResult::default();
    for (id, input_path) in inputs {
        let Some(reference_path) = refs.get(&id).cloned() else {
            log::warn!("pair {id}: missing counterpart for {}", input_path.display());
            result.skipped.push(SkippedPair {
                id,
                reason: "missing counterpart".into(),
            });
            continue;
        };
        let shapes = probe_dimensions(&input_path).and_then(|a| Ok((a, probe_dimensions(&reference_path)?)));
        match shapes {
            Ok((a, b)) if a == b => result.pairs.push(DatasetPair {
                id,
                input_path,
                reference_path,
            }),
            Ok((a, b)) => {
                log::warn!("pair {id}: dimension mismatch {a:?} vs {b:?}");
                result.skipped.push(SkippedPair {
                    id,
                    reason: format!("dimension mismatch {}x{} vs {}x{}", a.0, a.1, b.0, b.1),
                });
            }
            Err(e) => {
                log::warn!("pair {id}: {e}");
                result.skipped.push(SkippedPair {
                    id,
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(result)
}
