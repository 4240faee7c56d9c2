//! Sidecar-manifest + raw payload serialization for multi-channel real
//! rasters and weight records: a JSON manifest names the channels, the
//! companion `.bin` file holds little-endian floats, channel-major
//! then row-major.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

pub const PAYLOAD_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PayloadManifest {
    pub version: u32,
    pub width: usize,
    pub height: usize,
    pub channels: Vec<String>,
    /// "f32le" or "f64le"
    pub dtype: String,
    /// Payload file name, relative to the manifest.
    pub payload: String,
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub extra: std::collections::BTreeMap<String, String>,
}

impl PayloadManifest {
    pub fn expected_len(&self) -> usize {
        self.width * self.height * self.channels.len()
    }
}

/// Write `manifest` to `<base>.json` and `data` to `<base>.bin` next to
/// it. `data` must be channel-major, `channels * width * height` long.
pub fn write_payload(
    base: &Path,
    mut manifest: PayloadManifest,
    data: &[f64],
) -> Result<(), CoreError> {
    if data.len() != manifest.expected_len() {
        return Err(CoreError::DimensionMismatch(format!(
            "payload expects {} samples, got {}",
            manifest.expected_len(),
            data.len()
        )));
    }
    let bin_path = base.with_extension("bin");
    manifest.payload = bin_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();

    let mut bytes = Vec::with_capacity(data.len() * 4);
    match manifest.dtype.as_str() {
        "f32le" => {
            for v in data {
                bytes.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
        "f64le" => {
            for v in data {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        other => {
            return Err(CoreError::BadManifest(format!("unknown dtype {other}")));
        }
    }
    fs::write(&bin_path, bytes)?;
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CoreError::BadManifest(e.to_string()))?;
    fs::write(base.with_extension("json"), json + "\n")?;
    Ok(())
}

/// Read a manifest + payload pair written by [`write_payload`].
pub fn read_payload(manifest_path: &Path) -> Result<(PayloadManifest, Vec<f64>), CoreError> {
    let text = fs::read_to_string(manifest_path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CoreError::Missing(manifest_path.to_path_buf())
        } else {
            CoreError::Io(e)
        }
    })?;
    let manifest: PayloadManifest =
        serde_json::from_str(&text).map_err(|e| CoreError::BadManifest(e.to_string()))?;
    if manifest.version != PAYLOAD_VERSION {
        return Err(CoreError::BadManifest(format!(
            "unsupported payload version {}",
            manifest.version
        )));
    }
    let bin_path: PathBuf = manifest_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&manifest.payload);
    let bytes = fs::read(&bin_path)?;
    let data = match manifest.dtype.as_str() {
        "f32le" => {
            if bytes.len() != manifest.expected_len() * 4 {
                return Err(CoreError::SizeMismatch {
                    expected: (manifest.expected_len() * 4) as u64,
                    found: bytes.len() as u64,
                });
            }
            bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect()
        }
        "f64le" => {
            if bytes.len() != manifest.expected_len() * 8 {
                return Err(CoreError::SizeMismatch {
                    expected: (manifest.expected_len() * 8) as u64,
                    found: bytes.len() as u64,
                });
            }
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
                .collect()
        }
        other => return Err(CoreError::BadManifest(format!("unknown dtype {other}"))),
    };
    Ok((manifest, data))
}
