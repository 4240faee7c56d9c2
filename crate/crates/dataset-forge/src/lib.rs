//! Dataset assembly: tiling aligned rasters into fixed-size samples,
//! geographic train/val/test splits, class-balance filtering, and a
//! diff-stable JSON manifest.

pub mod filter;
pub mod manifest;
pub mod split;
pub mod tiling;

use thiserror::Error;

pub use filter::{compute_histogram, filter_pure_class, LabelScene};
pub use manifest::{read_manifest, write_manifest, DatasetManifest, TileRecord, MANIFEST_VERSION};
pub use split::{split_bands, split_geographic, split_names, SplitAxis};
pub use tiling::tile_grid;

use polsar_core::ErrorClass;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("tile size must be >= 1 and fit the scene, got size {size} for {width}x{height}")]
    BadTileSize {
        size: u32,
        width: u32,
        height: u32,
    },
    #[error("stride must be >= 1")]
    BadStride,
    #[error("rasters are misaligned: {0}")]
    Misaligned(String),
    #[error("split ratios must be positive")]
    BadRatios,
    #[error("{columns} grid bands cannot carry {splits} splits")]
    TooFewColumns { columns: usize, splits: usize },
    #[error("unknown class id {0}")]
    UnknownClass(u8),
    #[error("purity must lie in (0, 1], got {0}")]
    BadPurity(f64),
    #[error("tile {0} references scene {1} with no label raster")]
    MissingLabels(String, String),
    #[error("duplicate tile id {0}")]
    DuplicateTileId(String),
    #[error("manifest version {0} is not supported")]
    BadVersion(u32),
    #[error("malformed manifest: {0}")]
    BadManifest(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl DatasetError {
    pub fn class(&self) -> ErrorClass {
        match self {
            DatasetError::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }
}
