//! CLI error funnel; each class maps to a distinct exit code
//! (I/O = 2, validation = 3, numeric = 4).

use polsar_core::ErrorClass;

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Validation(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => ErrorClass::Io.exit_code(),
            CliError::Validation(_) => ErrorClass::Validation.exit_code(),
            CliError::Numeric(_) => ErrorClass::Numeric.exit_code(),
        }
    }

    fn from_class(class: ErrorClass, message: String) -> Self {
        match class {
            ErrorClass::Io => CliError::Io(message),
            ErrorClass::Validation => CliError::Validation(message),
            ErrorClass::Numeric => CliError::Numeric(message),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<polsar_core::CoreError> for CliError {
    fn from(e: polsar_core::CoreError) -> Self {
        CliError::from_class(e.class(), e.to_string())
    }
}

impl From<eigen_decomp::EigenError> for CliError {
    fn from(e: eigen_decomp::EigenError) -> Self {
        CliError::from_class(e.class(), e.to_string())
    }
}

impl From<scatter_cluster::ClusterError> for CliError {
    fn from(e: scatter_cluster::ClusterError) -> Self {
        CliError::from_class(e.class(), e.to_string())
    }
}

impl From<mvd_codec::MvdError> for CliError {
    fn from(e: mvd_codec::MvdError) -> Self {
        CliError::from_class(e.class(), e.to_string())
    }
}

impl From<dataset_forge::DatasetError> for CliError {
    fn from(e: dataset_forge::DatasetError) -> Self {
        CliError::from_class(e.class(), e.to_string())
    }
}

impl From<fusion_kernel::FusionError> for CliError {
    fn from(e: fusion_kernel::FusionError) -> Self {
        CliError::from_class(e.class(), e.to_string())
    }
}

impl From<seg_metrics::MetricsError> for CliError {
    fn from(e: seg_metrics::MetricsError) -> Self {
        CliError::from_class(e.class(), e.to_string())
    }
}
