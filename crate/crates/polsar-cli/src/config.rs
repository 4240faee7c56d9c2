//! Pipeline configuration: JSON file plus full CLI-flag override.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Input SLC scene.
    pub input: Option<PathBuf>,
    /// Output directory.
    pub out: PathBuf,
    /// Seed for every randomized stage; runs are byte-reproducible
    /// for a fixed seed.
    pub seed: Option<u64>,
    pub threads: Option<usize>,

    // decomposition
    pub window: usize,
    pub clip_lo: f64,
    pub clip_hi: f64,
    pub stacks: Vec<String>,

    // clustering
    pub k: Option<usize>,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub mixed_threshold: f64,
    pub n_sub: usize,

    // dataset
    pub tile_size: u32,
    pub stride: Option<u32>,
    pub ratios: Vec<u32>,
    pub split_axis: String,
    pub purity_class: Option<u8>,
    pub purity: f64,

    // fusion kernel
    pub channels: usize,
    pub sparse: usize,
    pub feat: usize,

    // synthetic scenes
    pub scene_width: usize,
    pub scene_height: usize,
    pub snr_db: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            out: PathBuf::from("out"),
            seed: None,
            threads: None,
            window: 3,
            clip_lo: 2.0,
            clip_hi: 98.0,
            stacks: vec!["haat12".into()],
            k: None,
            max_iter: 30,
            rel_tol: 1e-6,
            mixed_threshold: 0.98,
            n_sub: 5,
            tile_size: 512,
            stride: None,
            ratios: vec![6, 2, 2],
            split_axis: "x".into(),
            purity_class: None,
            purity: 1.0,
            channels: 32,
            sparse: 6,
            feat: 16,
            scene_width: 128,
            scene_height: 128,
            snr_db: 20.0,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(CliError::Validation(format!(
                "window must be odd and >= 1, got {}",
                self.window
            )));
        }
        if !(0.0..=100.0).contains(&self.clip_lo)
            || !(0.0..=100.0).contains(&self.clip_hi)
            || self.clip_lo >= self.clip_hi
        {
            return Err(CliError::Validation(format!(
                "percentiles must satisfy 0 <= lo < hi <= 100, got {} / {}",
                self.clip_lo, self.clip_hi
            )));
        }
        if self.rel_tol <= 0.0 {
            return Err(CliError::Validation("rel_tol must be positive".into()));
        }
        if !(self.purity > 0.0 && self.purity <= 1.0) {
            return Err(CliError::Validation(format!(
                "purity must lie in (0, 1], got {}",
                self.purity
            )));
        }
        if self.n_sub == 0 {
            return Err(CliError::Validation("n_sub must be >= 1".into()));
        }
        if let Some(k) = self.k {
            if k == 0 || k > 8 {
                return Err(CliError::Validation(format!(
                    "k must lie in 1..=8 (zone-merged initialization), got {k}"
                )));
            }
        }
        if self.mixed_threshold <= 0.0 {
            return Err(CliError::Validation(
                "mixed_threshold must be positive".into(),
            ));
        }
        if self.ratios.is_empty() || self.ratios.contains(&0) {
            return Err(CliError::Validation("ratios must be positive".into()));
        }
        if self.split_axis != "x" && self.split_axis != "y" {
            return Err(CliError::Validation(format!(
                "split axis must be x or y, got {}",
                self.split_axis
            )));
        }
        if self.channels < 2 || !self.channels.is_multiple_of(2) {
            return Err(CliError::Validation(format!(
                "channels must be even and >= 2, got {}",
                self.channels
            )));
        }
        if self.sparse == 0 || self.feat == 0 {
            return Err(CliError::Validation(
                "sparse prompt count and feature size must be >= 1".into(),
            ));
        }
        if self.scene_width < 4 || self.scene_height < 4 {
            return Err(CliError::Validation("scene must be at least 4x4".into()));
        }
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| {
            CliError::Validation("this command needs --seed for reproducible output".into())
        })
    }

    pub fn require_input(&self) -> Result<&Path, CliError> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::Validation("no input scene given (--input)".into()))
    }
}
