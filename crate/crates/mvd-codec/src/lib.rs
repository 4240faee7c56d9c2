//! Microwave Vision Data (MVD) encoding.
//!
//! Re-clusters the 11 scattering classes into MVD classes (three
//! primary hues plus mixed and other), encodes palette rasters and
//! one-hot tensors, and emits legend documents. Hue encodes the
//! scattering mechanism, lightness the SPAN tier; 'mixed' marks
//! near-ambiguous Wishart assignments, 'other' the invalid pixels.

pub mod format;
pub mod onehot;
pub mod palette;
pub mod raster;

use thiserror::Error;

pub use format::{read_mvd1, write_indexed_png, write_mvd1, MVD1_MAGIC};
pub use onehot::{one_hot, OneHot};
pub use palette::{palette_color, rgb_lightness};
pub use raster::{
    recluster, render_legend, LegendEntry, MvdRaster, ReclusterOptions, MIXED_NAME, OTHER_NAME,
};

use polsar_core::ErrorClass;

#[derive(Debug, Error)]
pub enum MvdError {
    #[error("class count {0} does not fit the indexed container")]
    TooManyClasses(usize),
    #[error("merge map references unknown source class {0}")]
    UnknownSourceClass(u8),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not an MVD1 container")]
    BadMagic,
    #[error("malformed MVD1 container: {0}")]
    BadContainer(String),
    #[error(transparent)]
    Core(#[from] polsar_core::CoreError),
}

impl MvdError {
    pub fn class(&self) -> ErrorClass {
        match self {
            MvdError::Core(e) => e.class(),
            _ => ErrorClass::Validation,
        }
    }
}
