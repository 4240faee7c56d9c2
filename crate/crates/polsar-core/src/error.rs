use std::path::PathBuf;
use thiserror::Error;

/// Coarse failure classes shared by the whole workspace. The CLI maps
/// them onto distinct process exit codes (I/O = 2, validation = 3,
/// numeric = 4).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Io,
    Validation,
    Numeric,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Io => 2,
            ErrorClass::Validation => 3,
            ErrorClass::Numeric => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("file not found: {0}")]
    Missing(PathBuf),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not an SLC container (bad magic)")]
    BadMagic,
    #[error("unsupported SLC container version `{0}` (expected PSLC1)")]
    UnsupportedVersion(String),
    #[error("malformed SLC header: {0}")]
    BadHeader(String),
    #[error("payload size mismatch: header declares {expected} bytes of channel data, found {found}")]
    SizeMismatch { expected: u64, found: u64 },
    #[error("multilook window must be odd and >= 1, got {0}")]
    BadWindow(usize),
    #[error("multilook window {window} exceeds the {width}x{height} image extent")]
    WindowTooLarge {
        window: usize,
        width: usize,
        height: usize,
    },
    #[error("degenerate percentiles: lo {lo} must be < hi {hi}, both within [0, 100]")]
    BadPercentiles { lo: f64, hi: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("malformed payload manifest: {0}")]
    BadManifest(String),
}

impl CoreError {
    pub fn class(&self) -> ErrorClass {
        match self {
            CoreError::Missing(_) | CoreError::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }
}
