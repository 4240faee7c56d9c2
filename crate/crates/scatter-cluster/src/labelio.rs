//! Label-raster serialization: a JSON manifest naming the classes plus
//! a raw 8-bit index payload (one class byte per pixel, row-major,
//! 255 = invalid).

use std::fs;
use std::path::{Path, PathBuf};

use polsar_core::label::{LabelRaster, INVALID_LABEL};
use serde::{Deserialize, Serialize};

use crate::ClusterError;

pub const LABELS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LabelManifest {
    version: u32,
    width: usize,
    height: usize,
    classes: Vec<String>,
    /// Payload file name, relative to the manifest.
    payload: String,
}

/// Write `<base>.json` + `<base>.bin`. `class_names` must cover the
/// raster's declared class count.
pub fn write_labels(
    base: &Path,
    labels: &LabelRaster,
    class_names: &[String],
) -> Result<(), ClusterError> {
    if class_names.len() != labels.classes as usize {
        return Err(ClusterError::DimensionMismatch(format!(
            "{} class names for {} classes",
            class_names.len(),
            labels.classes
        )));
    }
    let bin = base.with_extension("bin");
    let manifest = LabelManifest {
        version: LABELS_VERSION,
        width: labels.width,
        height: labels.height,
        classes: class_names.to_vec(),
        payload: bin
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    fs::write(&bin, &labels.label).map_err(polsar_core::CoreError::Io)?;
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| ClusterError::BadModel(e.to_string()))?;
    fs::write(base.with_extension("json"), json + "\n").map_err(polsar_core::CoreError::Io)?;
    Ok(())
}

/// Read a manifest + payload pair written by [`write_labels`].
/// Returns the raster and the class names.
pub fn read_labels(manifest_path: &Path) -> Result<(LabelRaster, Vec<String>), ClusterError> {
    let text = fs::read_to_string(manifest_path).map_err(polsar_core::CoreError::Io)?;
    let manifest: LabelManifest =
        serde_json::from_str(&text).map_err(|e| ClusterError::BadModel(e.to_string()))?;
    if manifest.version != LABELS_VERSION {
        return Err(ClusterError::BadModel(format!(
            "unsupported label manifest version {}",
            manifest.version
        )));
    }
    let bin: PathBuf = manifest_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&manifest.payload);
    let label = fs::read(&bin).map_err(polsar_core::CoreError::Io)?;
    if label.len() != manifest.width * manifest.height {
        return Err(ClusterError::BadModel(format!(
            "payload holds {} bytes for a {}x{} raster",
            label.len(),
            manifest.width,
            manifest.height
        )));
    }
    let validity: Vec<bool> = label.iter().map(|&l| l != INVALID_LABEL).collect();
    let raster = LabelRaster::new(
        manifest.width,
        manifest.height,
        label,
        validity,
        manifest.classes.len() as u8,
    )?;
    Ok((raster, manifest.classes))
}
