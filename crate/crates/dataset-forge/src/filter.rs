//! Class-balance filtering: drop tiles dominated by a single class
//! (pure-water removal in the source pipeline).

use std::collections::BTreeMap;

use crate::manifest::DatasetManifest;
use crate::DatasetError;

/// Full-scene label raster backing the per-tile purity checks.
#[derive(Clone, Debug)]
pub struct LabelScene {
    pub width: u32,
    pub height: u32,
    /// Row-major class bytes.
    pub data: Vec<u8>,
    pub classes: u8,
}

impl LabelScene {
    fn tile_fraction_of(&self, x: u32, y: u32, size: u32, class: u8) -> f64 {
        let mut hits = 0usize;
        for yy in y..y + size {
            let row = (yy as usize) * self.width as usize;
            for xx in x..x + size {
                if self.data[row + xx as usize] == class {
                    hits += 1;
                }
            }
        }
        hits as f64 / (size as u64 * size as u64) as f64
    }
}

/// Remove tiles whose fraction of `class` pixels reaches `purity`, and
/// recompute the class histogram over the retained tiles.
pub fn filter_pure_class(
    manifest: &DatasetManifest,
    labels: &BTreeMap<String, LabelScene>,
    class: u8,
    purity: f64,
) -> Result<DatasetManifest, DatasetError> {
    if !(purity > 0.0 && purity <= 1.0) {
        return Err(DatasetError::BadPurity(purity));
    }
    for scene in labels.values() {
        if class >= scene.classes {
            return Err(DatasetError::UnknownClass(class));
        }
    }
    let size = manifest.tile_size;
    let mut out = manifest.clone();
    out.tiles = Vec::with_capacity(manifest.tiles.len());
    for tile in &manifest.tiles {
        let scene = labels
            .get(&tile.scene)
            .ok_or_else(|| DatasetError::MissingLabels(tile.id.clone(), tile.scene.clone()))?;
        let fraction = scene.tile_fraction_of(tile.x, tile.y, size, class);
        if fraction < purity {
            out.tiles.push(tile.clone());
        }
    }
    out.class_histogram = compute_histogram(&out, labels)?;
    Ok(out)
}

/// Per-split pixel counts per class over the manifest's tiles.
pub fn compute_histogram(
    manifest: &DatasetManifest,
    labels: &BTreeMap<String, LabelScene>,
) -> Result<BTreeMap<String, Vec<u64>>, DatasetError> {
    let size = manifest.tile_size;
    let classes = labels.values().map(|s| s.classes as usize).max().unwrap_or(0);
    let mut hist: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for tile in &manifest.tiles {
        let scene = labels
            .get(&tile.scene)
            .ok_or_else(|| DatasetError::MissingLabels(tile.id.clone(), tile.scene.clone()))?;
        let counts = hist
            .entry(tile.split.clone())
            .or_insert_with(|| vec![0; classes]);
        for yy in tile.y..tile.y + size {
            let row = (yy as usize) * scene.width as usize;
            for xx in tile.x..tile.x + size {
                let c = scene.data[row + xx as usize] as usize;
                if c < counts.len() {
                    counts[c] += 1;
                }
            }
        }
    }
    Ok(hist)
}
