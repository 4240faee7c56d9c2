//! Named parameter records for every fusion module, with seeded
//! initialization (uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)],
//! normalization gains 1 and biases 0) and manifest + raw payload
//! serialization.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use polsar_core::rng::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::graph::{Graph, NodeId};
use crate::tensor::Tensor;
use crate::FusionError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Embedding width C.
    pub channels: usize,
    /// Sparse prompt count N.
    pub sparse: usize,
    /// One-hot input channels (MVD class count).
    pub mvd_classes: usize,
    /// Feature-map height and width (inputs are 4x larger).
    pub feat_h: usize,
    pub feat_w: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            channels: 32,
            sparse: 6,
            mvd_classes: 13,
            feat_h: 16,
            feat_w: 16,
        }
    }
}

impl KernelConfig {
    pub fn latent(&self) -> usize {
        self.channels / 2
    }

    pub fn seq_len(&self) -> usize {
        self.feat_h * self.feat_w
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        if self.channels < 2 || !self.channels.is_multiple_of(2) {
            return Err(FusionError::BadConfig(format!(
                "channels must be even and >= 2, got {}",
                self.channels
            )));
        }
        if self.sparse == 0 || self.mvd_classes == 0 || self.feat_h == 0 || self.feat_w == 0 {
            return Err(FusionError::BadConfig("zero-sized dimension".into()));
        }
        Ok(())
    }
}

enum Init {
    /// Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)].
    FanIn(usize),
    One,
    Zero,
}

/// Parameter inventory in creation order; the order fixes the RNG
/// stream, so it is part of the determinism contract.
fn parameter_specs(cfg: &KernelConfig) -> Vec<(String, Vec<usize>, Init)> {
    let c = cfg.channels;
    let lat = cfg.latent();
    let n = cfg.sparse;
    let cm = cfg.mvd_classes;
    let hw = cfg.seq_len();
    let mut specs: Vec<(String, Vec<usize>, Init)> = Vec::new();
    let conv = |name: &str, cout: usize, cin: usize, k: usize, specs: &mut Vec<_>| {
        specs.push((
            format!("{name}_w"),
            vec![cout, cin, k, k],
            Init::FanIn(cin * k * k),
        ));
        specs.push((format!("{name}_b"), vec![cout], Init::FanIn(cin * k * k)));
    };
    let linear = |name: &str, input: usize, output: usize, specs: &mut Vec<_>| {
        specs.push((format!("{name}_w"), vec![input, output], Init::FanIn(input)));
        specs.push((format!("{name}_b"), vec![output], Init::FanIn(input)));
    };
    let norm = |name: &str, width: usize, specs: &mut Vec<_>| {
        specs.push((format!("{name}_g"), vec![width], Init::One));
        specs.push((format!("{name}_b"), vec![width], Init::Zero));
    };
    let attn = |name: &str, specs: &mut Vec<_>| {
        for proj in ["q", "k", "v"] {
            specs.push((format!("{name}_w{proj}"), vec![c, c], Init::FanIn(c)));
            specs.push((format!("{name}_b{proj}"), vec![c], Init::FanIn(c)));
        }
    };

    // feature-level fusion prompt
    conv("g1", lat, c, 1, &mut specs);
    conv("g2", lat, c, 1, &mut specs);
    conv("g3", c, lat, 1, &mut specs);
    // feature embedders
    conv("fe1", c, 3, 3, &mut specs);
    conv("fe2_c1", 2 * c, cm, 2, &mut specs);
    norm("fe2_n1", 2 * c, &mut specs);
    conv("fe2_c2", c, 2 * c, 2, &mut specs);
    norm("fe2_n2", c, &mut specs);
    conv("fe2_c3", c, c, 1, &mut specs);
    // channel splits, one per SFP input slot
    for slot in 0..3 {
        linear(&format!("split{slot}"), c, 2 * c, &mut specs);
    }
    // bidirectional cross-attention
    attn("attn_m", &mut specs);
    attn("attn_n", &mut specs);
    // prompt heads
    specs.push(("lin1_w".into(), vec![n, hw], Init::FanIn(hw)));
    specs.push(("lin1_b".into(), vec![n], Init::FanIn(hw)));
    linear("lin2", 2 * c, c, &mut specs);
    norm("norm_s", c, &mut specs);
    norm("norm_d", c, &mut specs);
    // toy encoder
    conv("enc_proj", c, 3 * c, 1, &mut specs);
    for blk in 0..2 {
        attn(&format!("enc{blk}"), &mut specs);
        norm(&format!("enc{blk}_norm"), c, &mut specs);
    }
    // minimal decoder
    attn("dec_t2i", &mut specs);
    norm("dec_tok_norm", c, &mut specs);
    attn("dec_i2t", &mut specs);
    norm("dec_img_norm", c, &mut specs);
    specs
}

#[derive(Clone, Debug)]
pub struct KernelWeights {
    pub config: KernelConfig,
    params: BTreeMap<String, Tensor>,
    /// Creation order, for serialization and enumeration.
    order: Vec<String>,
}

impl KernelWeights {
    /// Deterministic seeded initialization.
    pub fn seeded(config: KernelConfig, seed: u64) -> Result<Self, FusionError> {
        config.validate()?;
        let mut rng = SplitMix64::new(seed);
        let mut params = BTreeMap::new();
        let mut order = Vec::new();
        for (name, shape, init) in parameter_specs(&config) {
            let tensor = match init {
                Init::FanIn(fan_in) => {
                    let bound = 1.0 / (fan_in as f64).sqrt();
                    Tensor::random(&shape, &mut rng, -bound, bound)
                }
                Init::One => Tensor::filled(&shape, 1.0),
                Init::Zero => Tensor::zeros(&shape),
            };
            order.push(name.clone());
            params.insert(name, tensor);
        }
        Ok(KernelWeights {
            config,
            params,
            order,
        })
    }

    pub fn get(&self, name: &str) -> &Tensor {
        self.params
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Tensor {
        self.params
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn names(&self) -> &[String] {
        &self.order
    }

    pub fn save(&self, base: &Path) -> Result<(), FusionError> {
        let entries: Vec<WeightEntry> = self
            .order
            .iter()
            .map(|name| WeightEntry {
                name: name.clone(),
                shape: self.get(name).shape.clone(),
            })
            .collect();
        let manifest = WeightsManifest {
            version: 1,
            dtype: "f64le".into(),
            payload: base
                .with_extension("bin")
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            config: self.config,
            entries,
        };
        let mut bytes = Vec::new();
        for name in &self.order {
            for v in &self.get(name).data {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        fs::write(base.with_extension("bin"), bytes).map_err(io_err)?;
        let json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| FusionError::BadWeights(e.to_string()))?;
        fs::write(base.with_extension("json"), json + "\n").map_err(io_err)?;
        Ok(())
    }

    pub fn load(manifest_path: &Path) -> Result<Self, FusionError> {
        let text = fs::read_to_string(manifest_path).map_err(io_err)?;
        let manifest: WeightsManifest =
            serde_json::from_str(&text).map_err(|e| FusionError::BadWeights(e.to_string()))?;
        if manifest.version != 1 || manifest.dtype != "f64le" {
            return Err(FusionError::BadWeights(format!(
                "unsupported weights manifest (version {}, dtype {})",
                manifest.version, manifest.dtype
            )));
        }
        let bin_path = manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&manifest.payload);
        let bytes = fs::read(bin_path).map_err(io_err)?;
        let mut params = BTreeMap::new();
        let mut order = Vec::new();
        let mut offset = 0usize;
        for entry in &manifest.entries {
            let count: usize = entry.shape.iter().product();
            let end = offset + count * 8;
            if end > bytes.len() {
                return Err(FusionError::BadWeights("payload too short".into()));
            }
            let data: Vec<f64> = bytes[offset..end]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
                .collect();
            offset = end;
            order.push(entry.name.clone());
            params.insert(entry.name.clone(), Tensor::from_vec(&entry.shape, data));
        }
        if offset != bytes.len() {
            return Err(FusionError::BadWeights("payload too long".into()));
        }
        Ok(KernelWeights {
            config: manifest.config,
            params,
            order,
        })
    }
}

fn io_err(e: std::io::Error) -> FusionError {
    FusionError::Core(polsar_core::CoreError::Io(e))
}

#[derive(Serialize, Deserialize)]
struct WeightEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct WeightsManifest {
    version: u32,
    dtype: String,
    payload: String,
    config: KernelConfig,
    entries: Vec<WeightEntry>,
}

/// Registers parameters as graph leaves on demand and remembers which
/// ones an op touched (gradient checking pairs names with leaf ids).
pub struct Binder<'w> {
    weights: &'w KernelWeights,
    requires_grad: bool,
    pub bound: Vec<(String, NodeId)>,
}

impl<'w> Binder<'w> {
    pub fn new(weights: &'w KernelWeights, requires_grad: bool) -> Self {
        Binder {
            weights,
            requires_grad,
            bound: Vec::new(),
        }
    }

    pub fn config(&self) -> &KernelConfig {
        &self.weights.config
    }

    pub fn param(&mut self, g: &mut Graph, name: &str) -> NodeId {
        if let Some((_, id)) = self.bound.iter().find(|(n, _)| n == name) {
            return *id;
        }
        let id = g.leaf(self.weights.get(name).clone(), self.requires_grad);
        self.bound.push((name.to_string(), id));
        id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_weights_are_reproducible() {
        let a = KernelWeights::seeded(KernelConfig::default(), 7).unwrap();
        let b = KernelWeights::seeded(KernelConfig::default(), 7).unwrap();
        for name in a.names() {
            assert_eq!(a.get(name).data, b.get(name).data, "{name}");
        }
        let c = KernelWeights::seeded(KernelConfig::default(), 8).unwrap();
        assert_ne!(a.get("g1_w").data, c.get("g1_w").data);
    }

    #[test]
    fn fan_in_bounds_respected() {
        let w = KernelWeights::seeded(KernelConfig::default(), 1).unwrap();
        let g1 = w.get("g1_w");
        let bound = 1.0 / (32.0f64).sqrt();
        assert!(g1.data.iter().all(|v| v.abs() <= bound));
        assert!(w.get("norm_s_g").data.iter().all(|&v| v == 1.0));
        assert!(w.get("norm_s_b").data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn save_load_roundtrip() {
        let w = KernelWeights::seeded(KernelConfig::default(), 99).unwrap();
        let mut base = std::env::temp_dir();
        base.push(format!("weights-test-{}", std::process::id()));
        w.save(&base).unwrap();
        let back = KernelWeights::load(&base.with_extension("json")).unwrap();
        assert_eq!(back.config, w.config);
        for name in w.names() {
            assert_eq!(w.get(name).data, back.get(name).data);
        }
        std::fs::remove_file(base.with_extension("json")).ok();
        std::fs::remove_file(base.with_extension("bin")).ok();
    }

    #[test]
    fn odd_channel_count_rejected() {
        let cfg = KernelConfig {
            channels: 7,
            ..KernelConfig::default()
        };
        assert!(KernelWeights::seeded(cfg, 0).is_err());
    }
}
