//! Synthetic scene generation: rectangular regions of pure scattering
//! mechanisms plus circular complex Gaussian speckle, with ground
//! truth. Odd and double regions carry Pauli-basis-aligned vectors
//! (per-pixel alpha exactly 0 / 90 degrees in the noiseless limit);
//! the volume region is a random-dipole ensemble, whose mean alpha
//! sits at 45 degrees, matching the primary-type thresholds.

use std::fs;
use std::path::{Path, PathBuf};

use polsar_core::cmat3::C64;
use polsar_core::rng::SplitMix64;
use polsar_core::{write_slc, ScatteringField};
use serde::{Deserialize, Serialize};

use mvd_codec::raster::LegendEntry;
use mvd_codec::{palette_color, write_mvd1, MvdRaster};
use scatter_cluster::PrimaryType;

use crate::config::PipelineConfig;
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Odd,
    Double,
    Volume,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Region {
    pub mechanism: Mechanism,
    /// Pixel bounds, half-open: x0 <= x < x1, y0 <= y < y1.
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SceneManifest {
    pub version: u32,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub snr_db: f64,
    pub regions: Vec<Region>,
}

impl SceneManifest {
    pub fn mechanism_at(&self, x: usize, y: usize) -> Mechanism {
        for r in &self.regions {
            if x >= r.x0 && x < r.x1 && y >= r.y0 && y < r.y1 {
                return r.mechanism;
            }
        }
        Mechanism::Odd
    }

    /// True when (x, y) sits at least `margin` pixels away from every
    /// region boundary.
    pub fn is_interior(&self, x: usize, y: usize, margin: usize) -> bool {
        for r in &self.regions {
            if x >= r.x0 && x < r.x1 && y >= r.y0 && y < r.y1 {
                return x >= r.x0 + margin
                    && x + margin < r.x1
                    && y >= r.y0 + margin
                    && y + margin < r.y1;
            }
        }
        false
    }
}

/// Three vertical stripes: odd | double | volume.
fn default_regions(width: usize, height: usize) -> Vec<Region> {
    let third = width / 3;
    vec![
        Region {
            mechanism: Mechanism::Odd,
            x0: 0,
            y0: 0,
            x1: third,
            y1: height,
        },
        Region {
            mechanism: Mechanism::Double,
            x0: third,
            y0: 0,
            x1: 2 * third,
            y1: height,
        },
        Region {
            mechanism: Mechanism::Volume,
            x0: 2 * third,
            y0: 0,
            x1: width,
            y1: height,
        },
    ]
}

/// Quantize through f32 so the in-memory field matches the container
/// bit for bit.
fn q(v: f64) -> f64 {
    v as f32 as f64
}

pub fn generate(
    manifest: &SceneManifest,
) -> Result<(ScatteringField, Vec<u8>), CliError> {
    let (w, h) = (manifest.width, manifest.height);
    let mut field = ScatteringField::zeros(w, h);
    let mut truth = vec![0u8; w * h];
    let mut rng = SplitMix64::new(manifest.seed);
    let sigma = 10f64.powf(-manifest.snr_db / 20.0);
    let amplitude = 1.0f64;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let mech = manifest.mechanism_at(x, y);
            let (hh, hv, vv) = match mech {
                Mechanism::Odd => (amplitude / std::f64::consts::SQRT_2, 0.0, {
                    amplitude / std::f64::consts::SQRT_2
                }),
                Mechanism::Double => (
                    amplitude / std::f64::consts::SQRT_2,
                    0.0,
                    -amplitude / std::f64::consts::SQRT_2,
                ),
                Mechanism::Volume => {
                    // random dipole orientation per pixel
                    let theta = rng.uniform(0.0, std::f64::consts::PI);
                    let (c, s) = (theta.cos(), theta.sin());
                    (amplitude * c * c, amplitude * s * c, amplitude * s * s)
                }
            };
            truth[i] = match mech {
                Mechanism::Odd => 0,
                Mechanism::Double => 1,
                Mechanism::Volume => 2,
            };
            let (n_hh_re, n_hh_im) = rng.next_circular_complex(sigma);
            let (n_hv_re, n_hv_im) = rng.next_circular_complex(sigma);
            let (n_vv_re, n_vv_im) = rng.next_circular_complex(sigma);
            field.s_hh[i] = C64::new(q(hh + n_hh_re), q(n_hh_im));
            field.s_hv[i] = C64::new(q(hv + n_hv_re), q(n_hv_im));
            field.s_vv[i] = C64::new(q(vv + n_vv_re), q(n_vv_im));
        }
    }
    Ok((field, truth))
}

/// Ground truth as an indexed raster with the three primary-type hues.
pub fn truth_raster(width: usize, height: usize, truth: Vec<u8>) -> MvdRaster {
    let entries = [
        ("odd", PrimaryType::Odd),
        ("double", PrimaryType::Double),
        ("volume", PrimaryType::Volume),
    ];
    let legend: Vec<LegendEntry> = entries
        .iter()
        .enumerate()
        .map(|(i, (name, primary))| LegendEntry {
            index: i as u8,
            name: (*name).into(),
            primary: (*name).into(),
            tier: None,
            rgb: palette_color(*primary, Some(2), 5),
        })
        .collect();
    MvdRaster {
        width,
        height,
        class_index: truth,
        palette: legend.iter().map(|e| e.rgb).collect(),
        legend,
    }
}

pub struct SynthPaths {
    pub scene: PathBuf,
    pub truth: PathBuf,
    pub manifest: PathBuf,
}

pub fn output_paths(out: &Path) -> SynthPaths {
    SynthPaths {
        scene: out.join("scene.slc"),
        truth: out.join("truth.mvd"),
        manifest: out.join("synth.json"),
    }
}

pub fn run(config: &PipelineConfig) -> Result<(), CliError> {
    let seed = config.require_seed()?;
    let (w, h) = (config.scene_width, config.scene_height);
    let manifest = SceneManifest {
        version: 1,
        width: w,
        height: h,
        seed,
        snr_db: config.snr_db,
        regions: default_regions(w, h),
    };
    let (field, truth) = generate(&manifest)?;
    fs::create_dir_all(&config.out)?;
    let paths = output_paths(&config.out);
    write_slc(&paths.scene, &field)?;
    write_mvd1(&paths.truth, &truth_raster(w, h, truth))?;
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    fs::write(&paths.manifest, json + "\n")?;
    println!(
        "synth: {}x{} scene with {} regions -> {}",
        w,
        h,
        manifest.regions.len(),
        config.out.display()
    );
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<SceneManifest, CliError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(e.to_string()))
}
