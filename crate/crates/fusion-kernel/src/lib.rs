//! Desk-scale reference implementation of the fusion-prompt
//! mathematics: the feature-level fusion prompt, feature embedders,
//! the progressive semantic-level fusion prompt, segmentation losses,
//! a deterministic toy encoder and a minimal decoder, all with
//! analytic gradients verified against central differences.

// Dense index arithmetic reads clearer than iterator chains here.
#![allow(clippy::needless_range_loop)]

pub mod gradcheck;
pub mod graph;
pub mod loss;
pub mod ops;
pub mod reference;
pub mod tensor;
pub mod visualize;
pub mod weights;

use thiserror::Error;

pub use gradcheck::{grad_check, GradCheckReport, OpKind};
pub use loss::{ce_loss, focal_loss};
pub use ops::{
    channel_split, cross_attention, cross_attention_with_attn, feature_embed_1, feature_embed_2,
    ffp, ffp_softmax, minimal_decoder, sfp, sfp_progressive, toy_encoder, AttnModule, PromptPair,
};
pub use tensor::Tensor;
pub use visualize::{normalize_unit, to_gray_bytes, visualize_prompts, PromptVisuals};
pub use weights::{KernelConfig, KernelWeights};

use polsar_core::ErrorClass;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("bad probabilities: {0}")]
    BadProbabilities(String),
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("malformed weights: {0}")]
    BadWeights(String),
    #[error(transparent)]
    Core(#[from] polsar_core::CoreError),
}

impl FusionError {
    pub fn class(&self) -> ErrorClass {
        match self {
            FusionError::NonFiniteGradient => ErrorClass::Numeric,
            FusionError::Core(e) => e.class(),
            _ => ErrorClass::Validation,
        }
    }
}
