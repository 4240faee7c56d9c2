//! Deterministic MVD palette.
//!
//! Hue 210 (blue family) for odd-bounce, 0 (red) for double-bounce,
//! 120 (green) for volume; lightness steps 35/45/55/65/75% across the
//! five SPAN tiers so lighter shades mean higher SPAN. Mixed is 50%
//! gray, other is black.

use scatter_cluster::PrimaryType;

const SATURATION: f64 = 0.65;
const TIER_LIGHTNESS: [f64; 5] = [0.35, 0.45, 0.55, 0.65, 0.75];

pub fn primary_hue(primary: PrimaryType) -> f64 {
    match primary {
        PrimaryType::Odd => 210.0,
        PrimaryType::Double => 0.0,
        PrimaryType::Volume => 120.0,
    }
}

/// Lightness for a SPAN tier; tier counts beyond five interpolate the
/// same 35..75% ramp.
pub fn tier_lightness(tier: usize, n_tiers: usize) -> f64 {
    if n_tiers <= TIER_LIGHTNESS.len() && n_tiers > 0 {
        TIER_LIGHTNESS[tier.min(n_tiers - 1) + (TIER_LIGHTNESS.len() - n_tiers) / 2]
    } else {
        let span = 0.75 - 0.35;
        0.35 + span * tier as f64 / (n_tiers.max(2) - 1) as f64
    }
}

pub fn palette_color(primary: PrimaryType, tier: Option<u8>, n_tiers: usize) -> [u8; 3] {
    let hue = primary_hue(primary);
    let lightness = match tier {
        Some(t) => tier_lightness(t as usize, n_tiers),
        // the single double-bounce class sits at the middle step
        None => 0.55,
    };
    hsl_to_rgb8(hue, SATURATION, lightness)
}

pub const MIXED_RGB: [u8; 3] = [128, 128, 128];
pub const OTHER_RGB: [u8; 3] = [0, 0, 0];

/// Standard HSL to RGB with round-half-up quantization.
pub fn hsl_to_rgb8(h: f64, s: f64, l: f64) -> [u8; 3] {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = (h.rem_euclid(360.0)) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let q = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    [q(r1), q(g1), q(b1)]
}

/// Perceived lightness proxy (max+min)/2 of the byte triple, used to
/// verify tier ordering.
pub fn rgb_lightness(rgb: [u8; 3]) -> f64 {
    let max = rgb.iter().copied().max().unwrap() as f64;
    let min = rgb.iter().copied().min().unwrap() as f64;
    (max + min) / (2.0 * 255.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_and_black_anchors() {
        assert_eq!(hsl_to_rgb8(0.0, 0.0, 0.5), MIXED_RGB);
        assert_eq!(hsl_to_rgb8(0.0, 0.0, 0.0), OTHER_RGB);
    }

    #[test]
    fn lightness_strictly_increases_per_hue() {
        for primary in [PrimaryType::Odd, PrimaryType::Double, PrimaryType::Volume] {
            let mut last = -1.0;
            for tier in 0..5 {
                let l = rgb_lightness(palette_color(primary, Some(tier), 5));
                assert!(l > last, "{primary:?} tier {tier}: {l} <= {last}");
                last = l;
            }
        }
    }

    #[test]
    fn families_have_distinct_hues() {
        let odd = palette_color(PrimaryType::Odd, Some(2), 5);
        let dbl = palette_color(PrimaryType::Double, None, 5);
        let vol = palette_color(PrimaryType::Volume, Some(2), 5);
        // dominant channel identifies the family
        assert!(odd[2] > odd[0] && odd[2] > odd[1]);
        assert!(dbl[0] > dbl[1] && dbl[0] > dbl[2]);
        assert!(vol[1] > vol[0] && vol[1] > vol[2]);
    }
}
