//! Base layer of the PolSAR processing workspace.
//!
//! Holds the per-pixel domain types (scattering fields, Pauli vectors,
//! multilooked coherency matrices, SPAN), the bit-exact SLC container
//! format, Pauli pseudo-color rendering, and small shared utilities
//! (3x3 complex matrices, PNG writers, raw float payloads, seeded RNG)
//! that the downstream crates build on.

// Dense index arithmetic reads clearer than iterator chains here.
#![allow(clippy::needless_range_loop)]

pub mod cmat3;
pub mod error;
pub mod field;
pub mod label;
pub mod payload;
pub mod pngio;
pub mod render;
pub mod rng;
pub mod slc;

pub use cmat3::{CMat3, C64};
pub use error::{CoreError, ErrorClass};
pub use field::{coherency, pauli_vector, span};
pub use field::{CoherencyField, PauliField, ScatteringField, SpanField};
pub use label::LabelRaster;
pub use render::{pauli_rgb, Rgb8Raster};
pub use slc::{load_slc, write_slc};
