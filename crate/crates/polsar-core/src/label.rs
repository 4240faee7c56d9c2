//! Per-pixel class labels with a validity mask.

use crate::error::CoreError;

/// Sentinel id carried by invalid pixels.
pub const INVALID_LABEL: u8 = 255;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelRaster {
    pub width: usize,
    pub height: usize,
    /// Class id per pixel; invalid pixels carry [`INVALID_LABEL`].
    pub label: Vec<u8>,
    pub validity: Vec<bool>,
    /// Declared class count; valid labels are < `classes`.
    pub classes: u8,
}

impl LabelRaster {
    pub fn new(
        width: usize,
        height: usize,
        label: Vec<u8>,
        validity: Vec<bool>,
        classes: u8,
    ) -> Result<Self, CoreError> {
        let n = width * height;
        if label.len() != n || validity.len() != n {
            return Err(CoreError::DimensionMismatch(format!(
                "label raster buffers must hold {n} pixels"
            )));
        }
        for (i, (&l, &v)) in label.iter().zip(&validity).enumerate() {
            if v && l >= classes {
                return Err(CoreError::InvalidField(format!(
                    "pixel {i} carries label {l} >= class count {classes}"
                )));
            }
            if !v && l != INVALID_LABEL {
                return Err(CoreError::InvalidField(format!(
                    "invalid pixel {i} must carry the sentinel id"
                )));
            }
        }
        Ok(LabelRaster {
            width,
            height,
            label,
            validity,
            classes,
        })
    }

    /// All-valid raster filled with class 0.
    pub fn filled(width: usize, height: usize, classes: u8) -> Self {
        LabelRaster {
            width,
            height,
            label: vec![0; width * height],
            validity: vec![true; width * height],
            classes,
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn valid_count(&self) -> usize {
        self.validity.iter().filter(|v| **v).count()
    }
}
