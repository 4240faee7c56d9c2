//! The dataset manifest: a JSON document with stable field order so
//! rewrites are byte-identical and diffs stay readable.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::split::SplitAxis;
use crate::DatasetError;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileRecord {
    pub id: String,
    pub scene: String,
    /// Pixel origin in the source scene.
    pub x: u32,
    pub y: u32,
    pub split: String,
    /// Artifact kind -> file path (pseudo, mvd, label, ...).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub paths: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub tile_size: u32,
    pub stride: u32,
    pub split_axis: SplitAxis,
    pub split_ratios: Vec<u32>,
    pub tiles: Vec<TileRecord>,
    /// Per-split pixel counts per class.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub class_histogram: BTreeMap<String, Vec<u64>>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.version != MANIFEST_VERSION {
            return Err(DatasetError::BadVersion(self.version));
        }
        let mut seen = BTreeSet::new();
        for tile in &self.tiles {
            if !seen.insert(&tile.id) {
                return Err(DatasetError::DuplicateTileId(tile.id.clone()));
            }
        }
        Ok(())
    }

    pub fn split_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for tile in &self.tiles {
            *counts.entry(tile.split.clone()).or_insert(0) += 1;
        }
        counts
    }
}

pub fn write_manifest(path: &Path, manifest: &DatasetManifest) -> Result<(), DatasetError> {
    manifest.validate()?;
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| DatasetError::BadManifest(e.to_string()))?;
    fs::write(path, json + "\n")?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest, DatasetError> {
    let text = fs::read_to_string(path)?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| DatasetError::BadManifest(e.to_string()))?;
    manifest.validate()?;
    Ok(manifest)
}
