//! Pauli pseudo-color rendering: dB scaling, percentile clipping and
//! 8-bit quantization of the Pauli component magnitudes.
//!
//! Channel assignment follows the conventional mapping
//! R = |k2| (double-bounce), G = |k3| (volume), B = |k1| (odd-bounce).

use crate::error::CoreError;
use crate::field::PauliField;

pub const DB_EPSILON: f64 = 1e-10;

/// Interleaved 8-bit RGB raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rgb8Raster {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Rgb8Raster {
    pub fn new(width: usize, height: usize) -> Self {
        Rgb8Raster {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

/// Percentile with linear interpolation between closest ranks.
/// `sorted` must be ascending and non-empty; `p` in [0, 100].
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        return sorted[lo];
    }
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// dB-scale one channel of magnitudes, clip at the given percentiles
/// and quantize linearly to 0..=255.
fn quantize_channel(mags: &[f64], clip_lo: f64, clip_hi: f64) -> Vec<u8> {
    let db: Vec<f64> = mags.iter().map(|m| 20.0 * (m + DB_EPSILON).log10()).collect();
    let mut sorted = db.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = percentile(&sorted, clip_lo);
    let hi = percentile(&sorted, clip_hi);
    if hi <= lo {
        // flat channel (e.g. all-zero field): everything maps to 0
        return vec![0; mags.len()];
    }
    let scale = 255.0 / (hi - lo);
    db.iter()
        .map(|v| (((v.clamp(lo, hi)) - lo) * scale).round() as u8)
        .collect()
}

/// Render the Pauli components to an 8-bit RGB raster.
pub fn pauli_rgb(
    pauli: &PauliField,
    clip_lo: f64,
    clip_hi: f64,
) -> Result<Rgb8Raster, CoreError> {
    if !(0.0..=100.0).contains(&clip_lo) || !(0.0..=100.0).contains(&clip_hi) || clip_lo >= clip_hi
    {
        return Err(CoreError::BadPercentiles {
            lo: clip_lo,
            hi: clip_hi,
        });
    }
    let mag = |ch: &[crate::cmat3::C64]| ch.iter().map(|v| v.norm()).collect::<Vec<_>>();
    let r = quantize_channel(&mag(&pauli.k2), clip_lo, clip_hi);
    let g = quantize_channel(&mag(&pauli.k3), clip_lo, clip_hi);
    let b = quantize_channel(&mag(&pauli.k1), clip_lo, clip_hi);
    let mut out = Rgb8Raster::new(pauli.width, pauli.height);
    for i in 0..pauli.len() {
        out.data[i * 3] = r[i];
        out.data[i * 3 + 1] = g[i];
        out.data[i * 3 + 2] = b[i];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmat3::C64;
    use crate::field::{pauli_vector, ScatteringField};

    #[test]
    fn all_zero_field_quantizes_to_zero() {
        let p = pauli_vector(&ScatteringField::zeros(4, 4));
        let rgb = pauli_rgb(&p, 2.0, 98.0).unwrap();
        assert!(rgb.data.iter().all(|&v| v == 0));
    }

    #[test]
    fn only_k1_lights_blue_channel() {
        // hh = vv => k2 = 0, hv = 0 => k3 = 0
        let mut f = ScatteringField::zeros(2, 2);
        f.s_hh[0] = C64::new(1.0, 0.0);
        f.s_vv[0] = C64::new(1.0, 0.0);
        f.s_hh[3] = C64::new(0.1, 0.0);
        f.s_vv[3] = C64::new(0.1, 0.0);
        let p = pauli_vector(&f);
        let rgb = pauli_rgb(&p, 0.0, 100.0).unwrap();
        for y in 0..2 {
            for x in 0..2 {
                let [r, g, _b] = rgb.pixel(x, y);
                assert_eq!(r, 0);
                assert_eq!(g, 0);
            }
        }
        assert!(rgb.pixel(0, 0)[2] > 0);
    }

    #[test]
    fn degenerate_percentiles_rejected() {
        let p = pauli_vector(&ScatteringField::zeros(2, 2));
        assert!(matches!(
            pauli_rgb(&p, 98.0, 2.0),
            Err(CoreError::BadPercentiles { .. })
        ));
        assert!(matches!(
            pauli_rgb(&p, 50.0, 50.0),
            Err(CoreError::BadPercentiles { .. })
        ));
    }

    /// Scalar reference for the full quantization path, kept
    /// independent of the implementation above.
    fn reference_quantize(mags: &[f64], lo_p: f64, hi_p: f64) -> Vec<u8> {
        let db: Vec<f64> = mags.iter().map(|m| 20.0 * (m + 1e-10).log10()).collect();
        let mut sorted = db.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pct = |p: f64| -> f64 {
            let rank = p / 100.0 * (sorted.len() - 1) as f64;
            let lo = rank.floor() as usize;
            let frac = rank - lo as f64;
            if lo + 1 < sorted.len() && frac > 0.0 {
                sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
            } else {
                sorted[lo]
            }
        };
        let (lo, hi) = (pct(lo_p), pct(hi_p));
        db.iter()
            .map(|v| {
                let c = v.clamp(lo, hi);
                ((c - lo) / (hi - lo) * 255.0).round() as u8
            })
            .collect()
    }

    #[test]
    fn four_pixel_field_matches_scalar_reference() {
        let mut f = ScatteringField::zeros(2, 2);
        f.s_hh = vec![
            C64::new(0.8, 0.1),
            C64::new(0.02, -0.3),
            C64::new(1.5, 0.0),
            C64::new(0.0, 0.9),
        ];
        f.s_hv = vec![
            C64::new(0.05, 0.0),
            C64::new(0.4, 0.4),
            C64::new(0.0, 0.01),
            C64::new(0.25, -0.25),
        ];
        f.s_vv = vec![
            C64::new(-0.6, 0.2),
            C64::new(0.3, 0.0),
            C64::new(0.9, -0.5),
            C64::new(0.0, -0.1),
        ];
        let p = pauli_vector(&f);
        let rgb = pauli_rgb(&p, 2.0, 98.0).unwrap();
        let expect_r = reference_quantize(&p.k2.iter().map(|v| v.norm()).collect::<Vec<_>>(), 2.0, 98.0);
        let expect_g = reference_quantize(&p.k3.iter().map(|v| v.norm()).collect::<Vec<_>>(), 2.0, 98.0);
        let expect_b = reference_quantize(&p.k1.iter().map(|v| v.norm()).collect::<Vec<_>>(), 2.0, 98.0);
        for i in 0..4 {
            assert_eq!(rgb.data[i * 3], expect_r[i]);
            assert_eq!(rgb.data[i * 3 + 1], expect_g[i]);
            assert_eq!(rgb.data[i * 3 + 2], expect_b[i]);
        }
    }
}
