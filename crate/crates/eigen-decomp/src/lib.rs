//! Eigen-analysis of multilooked coherency fields.
//!
//! Per-pixel closed-form eigendecomposition of the 3x3 Hermitian
//! coherency matrix, the derived entropy / anisotropy / mean alpha
//! features, and exportable multi-channel feature stacks.

// Dense index arithmetic reads clearer than iterator chains here.
#![allow(clippy::needless_range_loop)]

pub mod eigen3;
pub mod features;
pub mod reference;
pub mod stack;

use thiserror::Error;

pub use eigen3::{eigen_hermitian3, Eigen3};
pub use features::{analyze, h_a_alpha, EigenFeatures, PixelFeatures};
pub use stack::{feature_stack, FeatureStack, StackKind};

use polsar_core::ErrorClass;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("input is not Hermitian: max deviation {deviation:e} exceeds tolerance {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },
    #[error("eigensolver failed to converge: {0}")]
    NoConvergence(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Core(#[from] polsar_core::CoreError),
}

impl EigenError {
    pub fn class(&self) -> ErrorClass {
        match self {
            EigenError::NotHermitian { .. } | EigenError::DimensionMismatch(_) => {
                ErrorClass::Validation
            }
            EigenError::NoConvergence(_) => ErrorClass::Numeric,
            EigenError::Core(e) => e.class(),
        }
    }
}
