//! Multi-channel real feature stacks exported for downstream
//! consumers. Channel layouts:
//!
//!   HAa3:   [H, A, alpha/90]
//!   T6:     [T11, T22, T33, Re T12, Re T13, Re T23]
//!   T9:     [T11, T22, T33, Re T12, Im T12, Re T13, Im T13, Re T23, Im T23]
//!   HAaT12: HAa3 ++ T9
//!
//! H and A are already in [0, 1]; alpha is normalized by 90 so every
//! HAa channel stays in [0, 1]. T channels carry raw linear power.

use std::path::Path;
use std::str::FromStr;

use polsar_core::payload::{read_payload, write_payload, PayloadManifest, PAYLOAD_VERSION};
use polsar_core::CoherencyField;

use crate::features::EigenFeatures;
use crate::EigenError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StackKind {
    HAa3,
    T6,
    T9,
    HAaT12,
}

impl StackKind {
    pub fn channel_names(self) -> Vec<&'static str> {
        let haa = ["H", "A", "alpha_norm"];
        let t6 = ["T11", "T22", "T33", "ReT12", "ReT13", "ReT23"];
        let t9 = [
            "T11", "T22", "T33", "ReT12", "ImT12", "ReT13", "ImT13", "ReT23", "ImT23",
        ];
        match self {
            StackKind::HAa3 => haa.to_vec(),
            StackKind::T6 => t6.to_vec(),
            StackKind::T9 => t9.to_vec(),
            StackKind::HAaT12 => haa.iter().chain(t9.iter()).copied().collect(),
        }
    }

    pub fn channel_count(self) -> usize {
        self.channel_names().len()
    }

    pub fn tag(self) -> &'static str {
        match self {
            StackKind::HAa3 => "haa3",
            StackKind::T6 => "t6",
            StackKind::T9 => "t9",
            StackKind::HAaT12 => "haat12",
        }
    }
}

impl FromStr for StackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "haa3" => Ok(StackKind::HAa3),
            "t6" => Ok(StackKind::T6),
            "t9" => Ok(StackKind::T9),
            "haat12" => Ok(StackKind::HAaT12),
            other => Err(format!(
                "unknown stack kind `{other}` (expected haa3|t6|t9|haat12)"
            )),
        }
    }
}

/// Channel-major real raster plus its channel descriptors.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStack {
    pub width: usize,
    pub height: usize,
    pub names: Vec<String>,
    /// Channel-major, then row-major; length = names.len() * width * height.
    pub data: Vec<f64>,
}

impl FeatureStack {
    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }
}

pub fn feature_stack(
    coh: &CoherencyField,
    eig: &EigenFeatures,
    kind: StackKind,
) -> Result<FeatureStack, EigenError> {
    if coh.width != eig.width || coh.height != eig.height {
        return Err(EigenError::DimensionMismatch(format!(
            "coherency is {}x{}, eigen features are {}x{}",
            coh.width, coh.height, eig.width, eig.height
        )));
    }
    let n = coh.len();
    let names: Vec<String> = kind.channel_names().iter().map(|s| s.to_string()).collect();
    let channels = names.len();
    let mut data = vec![0.0f64; channels * n];

    let mut write_channel = |c: usize, f: &mut dyn FnMut(usize) -> f64| {
        let slice = &mut data[c * n..(c + 1) * n];
        for (i, out) in slice.iter_mut().enumerate() {
            *out = f(i);
        }
    };

    let haa_offset = match kind {
        StackKind::HAa3 | StackKind::HAaT12 => {
            write_channel(0, &mut |i| eig.entropy[i]);
            write_channel(1, &mut |i| eig.anisotropy[i]);
            write_channel(2, &mut |i| eig.alpha[i] / 90.0);
            3
        }
        _ => 0,
    };

    match kind {
        StackKind::HAa3 => {}
        StackKind::T6 => {
            write_channel(0, &mut |i| coh.t[i].m[0][0].re);
            write_channel(1, &mut |i| coh.t[i].m[1][1].re);
            write_channel(2, &mut |i| coh.t[i].m[2][2].re);
            write_channel(3, &mut |i| coh.t[i].m[0][1].re);
            write_channel(4, &mut |i| coh.t[i].m[0][2].re);
            write_channel(5, &mut |i| coh.t[i].m[1][2].re);
        }
        StackKind::T9 | StackKind::HAaT12 => {
            let o = haa_offset;
            write_channel(o, &mut |i| coh.t[i].m[0][0].re);
            write_channel(o + 1, &mut |i| coh.t[i].m[1][1].re);
            write_channel(o + 2, &mut |i| coh.t[i].m[2][2].re);
            write_channel(o + 3, &mut |i| coh.t[i].m[0][1].re);
            write_channel(o + 4, &mut |i| coh.t[i].m[0][1].im);
            write_channel(o + 5, &mut |i| coh.t[i].m[0][2].re);
            write_channel(o + 6, &mut |i| coh.t[i].m[0][2].im);
            write_channel(o + 7, &mut |i| coh.t[i].m[1][2].re);
            write_channel(o + 8, &mut |i| coh.t[i].m[1][2].im);
        }
    }

    Ok(FeatureStack {
        width: coh.width,
        height: coh.height,
        names,
        data,
    })
}

/// Serialize as manifest + f32le payload (per the export contract).
pub fn write_stack(base: &Path, stack: &FeatureStack) -> Result<(), EigenError> {
    let manifest = PayloadManifest {
        version: PAYLOAD_VERSION,
        width: stack.width,
        height: stack.height,
        channels: stack.names.clone(),
        dtype: "f32le".into(),
        payload: String::new(),
        extra: Default::default(),
    };
    write_payload(base, manifest, &stack.data)?;
    Ok(())
}

pub fn read_stack(manifest_path: &Path) -> Result<FeatureStack, EigenError> {
    let (manifest, data) = read_payload(manifest_path)?;
    Ok(FeatureStack {
        width: manifest.width,
        height: manifest.height,
        names: manifest.channels,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::analyze;
    use polsar_core::cmat3::CMat3;

    fn coh_of(mats: Vec<CMat3>, w: usize, h: usize) -> CoherencyField {
        CoherencyField {
            width: w,
            height: h,
            t: mats,
            looks: 1,
        }
    }

    #[test]
    fn t6_of_rank_one_diag() {
        let coh = coh_of(vec![CMat3::diag([2.0, 0.0, 0.0])], 1, 1);
        let eig = analyze(&coh).unwrap();
        let stack = feature_stack(&coh, &eig, StackKind::T6).unwrap();
        let values: Vec<f64> = (0..6).map(|c| stack.channel(c)[0]).collect();
        assert_eq!(values, vec![2.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn twelve_channel_count() {
        let coh = coh_of(vec![CMat3::identity()], 1, 1);
        let eig = analyze(&coh).unwrap();
        let stack = feature_stack(&coh, &eig, StackKind::HAaT12).unwrap();
        assert_eq!(stack.names.len(), 12);
    }

    #[test]
    fn t9_reassembles_matrix_exactly() {
        let mut rng = polsar_core::rng::SplitMix64::new(31);
        let mut mats = Vec::new();
        for _ in 0..6 {
            let mut t = CMat3::zeros();
            for _ in 0..3 {
                let k = [
                    polsar_core::cmat3::C64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                    polsar_core::cmat3::C64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                    polsar_core::cmat3::C64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                ];
                t.add_assign(&CMat3::outer(&k));
            }
            mats.push(t.hermitize());
        }
        let coh = coh_of(mats.clone(), 3, 2);
        let eig = analyze(&coh).unwrap();
        let stack = feature_stack(&coh, &eig, StackKind::T9).unwrap();
        // reassembly oracle: rebuild T from the channel layout
        for (i, original) in mats.iter().enumerate() {
            let g = |c: usize| stack.channel(c)[i];
            let mut t = CMat3::zeros();
            t.m[0][0] = polsar_core::cmat3::C64::new(g(0), 0.0);
            t.m[1][1] = polsar_core::cmat3::C64::new(g(1), 0.0);
            t.m[2][2] = polsar_core::cmat3::C64::new(g(2), 0.0);
            t.m[0][1] = polsar_core::cmat3::C64::new(g(3), g(4));
            t.m[1][0] = t.m[0][1].conj();
            t.m[0][2] = polsar_core::cmat3::C64::new(g(5), g(6));
            t.m[2][0] = t.m[0][2].conj();
            t.m[1][2] = polsar_core::cmat3::C64::new(g(7), g(8));
            t.m[2][1] = t.m[1][2].conj();
            // diagonal imaginary parts are zero after hermitize, so the
            // reassembly is exact
            assert!(t.sub(original).frob_norm() <= 1e-12 * original.frob_norm().max(1e-30));
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let coh = coh_of(vec![CMat3::identity()], 1, 1);
        let coh_big = coh_of(vec![CMat3::identity(); 4], 2, 2);
        let eig = analyze(&coh_big).unwrap();
        assert!(matches!(
            feature_stack(&coh, &eig, StackKind::T6),
            Err(EigenError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn stack_io_roundtrip() {
        let coh = coh_of(vec![CMat3::diag([1.0, 0.5, 0.25]); 4], 2, 2);
        let eig = analyze(&coh).unwrap();
        let stack = feature_stack(&coh, &eig, StackKind::HAa3).unwrap();
        let mut base = std::env::temp_dir();
        base.push(format!("stack-test-{}", std::process::id()));
        write_stack(&base, &stack).unwrap();
        let back = read_stack(&base.with_extension("json")).unwrap();
        assert_eq!(back.names, stack.names);
        // f32 payload: compare at f32 precision
        for (a, b) in stack.data.iter().zip(&back.data) {
            assert_eq!(*a as f32, *b as f32);
        }
        std::fs::remove_file(base.with_extension("json")).ok();
        std::fs::remove_file(base.with_extension("bin")).ok();
    }
}
