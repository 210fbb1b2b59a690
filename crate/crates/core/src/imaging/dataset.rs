//! Paired datasets stored as `pairs/<name>.clean.png` and
//! `pairs/<name>.degraded.png`.

use std::fs;
use std::path::{Path, PathBuf};

use super::io::{load_image, save_image};
use super::Image;
use crate::error::{Error, Result};

const CLEAN_SUFFIX: &str = ".clean.png";
const DEGRADED_SUFFIX: &str = ".degraded.png";

#[derive(Clone, Debug, PartialEq)]
pub struct Pair {
    pub name: String,
    pub clean: Image,
    pub degraded: Image,
}

/// Accepts either the dataset root or its `pairs` directory.
fn pairs_dir(root: &Path) -> PathBuf {
    let nested = root.join("pairs");
    if nested.is_dir() {
        nested
    } else {
        root.to_path_buf()
    }
}

/// Loads all pairs sorted by name. Errors when a clean image has no
/// degraded partner or the directory holds no pairs.
pub fn load_pairs(root: impl AsRef<Path>) -> Result<Vec<Pair>> {
    let dir = pairs_dir(root.as_ref());
    let entries = fs::read_dir(&dir).map_err(|e| Error::format(&dir, e.to_string()))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter_map(|f| f.strip_suffix(CLEAN_SUFFIX).map(str::to_string))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Error::invalid(format!("no image pairs found in {}", dir.display())));
    }
    names
        .into_iter()
        .map(|name| {
            let clean = load_image(dir.join(format!("{}{}", name, CLEAN_SUFFIX)))?;
            let degraded = load_image(dir.join(format!("{}{}", name, DEGRADED_SUFFIX)))?;
            if clean.shape() != degraded.shape() {
                return Err(Error::shape(format!(
                    "pair {}: clean {:?} vs degraded {:?}",
                    name,
                    clean.shape(),
                    degraded.shape()
                )));
            }
            Ok(Pair { name, clean, degraded })
        })
        .collect()
}

/// Writes one pair under `root/pairs`, creating the directory.
pub fn write_pair(root: impl AsRef<Path>, name: &str, clean: &Image, degraded: &Image) -> Result<()> {
    let dir = root.as_ref().join("pairs");
    fs::create_dir_all(&dir)?;
    save_image(clean, dir.join(format!("{}{}", name, CLEAN_SUFFIX)))?;
    save_image(degraded, dir.join(format!("{}{}", name, DEGRADED_SUFFIX)))
}
