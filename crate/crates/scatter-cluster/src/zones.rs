//! Eight-zone H/alpha plane seeding.
//!
//! Boundary table: H splits at 0.5 and 0.9; alpha splits at
//! 42.5deg/47.5deg for H < 0.5, 40deg/50deg for 0.5 <= H < 0.9, and
//! 55deg for H >= 0.9 (the high-entropy surface zone is infeasible, so
//! eight zones remain). Alpha comparisons are inclusive on the lower
//! zone.

use eigen_decomp::EigenFeatures;
use polsar_core::label::{LabelRaster, INVALID_LABEL};

pub const ZONE_COUNT: u8 = 8;

/// Zone ids, ordered low-entropy to high-entropy:
/// 0 low-H surface, 1 low-H dipole, 2 low-H double,
/// 3 mid-H surface,  4 mid-H dipole, 5 mid-H double,
/// 6 high-H vegetation, 7 high-H double.
pub fn h_alpha_zone(h: f64, alpha: f64) -> u8 {
    if h < 0.5 {
        if alpha <= 42.5 {
            0
        } else if alpha <= 47.5 {
            1
        } else {
            2
        }
    } else if h < 0.9 {
        if alpha <= 40.0 {
            3
        } else if alpha <= 50.0 {
            4
        } else {
            5
        }
    } else if alpha <= 55.0 {
        6
    } else {
        7
    }
}

/// Assign every valid pixel to its H/alpha zone.
pub fn init_zones(eig: &EigenFeatures) -> LabelRaster {
    let n = eig.len();
    let mut label = vec![INVALID_LABEL; n];
    let mut validity = vec![false; n];
    for i in 0..n {
        if eig.valid[i] {
            label[i] = h_alpha_zone(eig.entropy[i], eig.alpha[i]);
            validity[i] = true;
        }
    }
    LabelRaster {
        width: eig.width,
        height: eig.height,
        label,
        validity,
        classes: ZONE_COUNT,
    }
}
