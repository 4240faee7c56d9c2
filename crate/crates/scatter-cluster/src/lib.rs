//! Unsupervised scattering-mechanism classification.
//!
//! Pipeline: the H/alpha plane seeds eight zones, complex-Wishart
//! k-means refines them, converged clusters get a primary scattering
//! type from their mean alpha angle, and odd/volume groups are split
//! into SPAN quantile tiers.

pub mod labelio;
pub mod subclass;
pub mod wishart;
pub mod zones;

use thiserror::Error;

pub use labelio::{read_labels, write_labels};
pub use subclass::{subclass_by_span, SubclassInfo, SubclassLayout};
pub use wishart::{
    ambiguity_ratio, classify_primary, wishart_distance, wishart_iterate, ClusterModel,
    IterateOptions, PrimaryType,
};
pub use zones::{h_alpha_zone, init_zones, ZONE_COUNT};

use polsar_core::ErrorClass;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("all pixels are invalid; nothing to cluster")]
    AllInvalid,
    #[error("cluster center {0} is singular beyond regularization")]
    SingularCenter(usize),
    #[error("cluster {0} has no members")]
    EmptyCluster(usize),
    #[error("sub-class count must be >= 1, got {0}")]
    BadSubclassCount(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("primary types have not been assigned")]
    MissingPrimaryTypes,
    #[error("malformed cluster model: {0}")]
    BadModel(String),
    #[error(transparent)]
    Eigen(#[from] eigen_decomp::EigenError),
    #[error(transparent)]
    Core(#[from] polsar_core::CoreError),
}

impl ClusterError {
    pub fn class(&self) -> ErrorClass {
        match self {
            ClusterError::SingularCenter(_) => ErrorClass::Numeric,
            ClusterError::Eigen(e) => e.class(),
            ClusterError::Core(e) => e.class(),
            _ => ErrorClass::Validation,
        }
    }
}
