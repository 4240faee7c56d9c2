//! Entropy / anisotropy / mean-alpha features from the per-pixel
//! eigendecomposition:
//!
//!   H = -sum p_i log3(p_i),  p_i = lambda_i / sum(lambda)
//!   alpha_i = arccos(|e_i[0]|) in degrees,  alpha = sum p_i alpha_i
//!   A = (lambda2 - lambda3) / (lambda2 + lambda3)
//!
//! Zero-power pixels are flagged invalid and emit zeros instead of
//! propagating NaN into clustering.

use polsar_core::cmat3::C64;
use polsar_core::CoherencyField;
use rayon::prelude::*;

use crate::eigen3::{eigen_hermitian3, Eigen3};
use crate::EigenError;

/// Total power below which a pixel is treated as empty.
pub const ZERO_POWER_FLOOR: f64 = 1e-30;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelFeatures {
    pub p: [f64; 3],
    pub entropy: f64,
    pub anisotropy: f64,
    /// Mean alpha angle, degrees in [0, 90].
    pub alpha: f64,
    pub alpha_i: [f64; 3],
    pub valid: bool,
}

/// Per-pixel eigen output and derived features for a whole field.
#[derive(Clone, Debug)]
pub struct EigenFeatures {
    pub width: usize,
    pub height: usize,
    pub lambda: Vec<[f64; 3]>,
    pub evec: Vec<[[C64; 3]; 3]>,
    pub p: Vec<[f64; 3]>,
    pub entropy: Vec<f64>,
    pub anisotropy: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_i: Vec<[f64; 3]>,
    pub valid: Vec<bool>,
}

impl EigenFeatures {
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn log3(x: f64) -> f64 {
    x.ln() / 3.0f64.ln()
}

/// Features of a single eigendecomposition (total via the zero-power
/// and 0 log 0 conventions).
pub fn h_a_alpha(eig: &Eigen3) -> PixelFeatures {
    let sum: f64 = eig.values.iter().map(|v| v.max(0.0)).sum();
    let alpha_i = {
        let mut a = [0.0; 3];
        for i in 0..3 {
            a[i] = eig.vectors[i][0].norm().clamp(0.0, 1.0).acos().to_degrees();
        }
        a
    };
    if sum <= ZERO_POWER_FLOOR {
        return PixelFeatures {
            p: [0.0; 3],
            entropy: 0.0,
            anisotropy: 0.0,
            alpha: 0.0,
            alpha_i,
            valid: false,
        };
    }
    let mut p = [0.0; 3];
    for i in 0..3 {
        p[i] = eig.values[i].max(0.0) / sum;
    }
    let mut entropy = 0.0;
    for pi in p {
        if pi > 0.0 {
            entropy -= pi * log3(pi);
        }
    }
    let entropy = entropy.clamp(0.0, 1.0);
    let denom = eig.values[1] + eig.values[2];
    let anisotropy = if denom.abs() <= ZERO_POWER_FLOOR {
        0.0
    } else {
        ((eig.values[1] - eig.values[2]) / denom).clamp(0.0, 1.0)
    };
    let alpha = (p[0] * alpha_i[0] + p[1] * alpha_i[1] + p[2] * alpha_i[2]).clamp(0.0, 90.0);
    PixelFeatures {
        p,
        entropy,
        anisotropy,
        alpha,
        alpha_i,
        valid: true,
    }
}

/// Run the eigensolver and feature extraction over every pixel.
pub fn analyze(coh: &CoherencyField) -> Result<EigenFeatures, EigenError> {
    let n = coh.len();
    let per_pixel: Result<Vec<(Eigen3, PixelFeatures)>, EigenError> = coh
        .t
        .par_iter()
        .map(|t| {
            let eig = eigen_hermitian3(t)?;
            let feats = h_a_alpha(&eig);
            Ok((eig, feats))
        })
        .collect();
    let per_pixel = per_pixel?;

    let mut out = EigenFeatures {
        width: coh.width,
        height: coh.height,
        lambda: Vec::with_capacity(n),
        evec: Vec::with_capacity(n),
        p: Vec::with_capacity(n),
        entropy: Vec::with_capacity(n),
        anisotropy: Vec::with_capacity(n),
        alpha: Vec::with_capacity(n),
        alpha_i: Vec::with_capacity(n),
        valid: Vec::with_capacity(n),
    };
    for (eig, f) in per_pixel {
        out.lambda.push(eig.values);
        out.evec.push(eig.vectors);
        out.p.push(f.p);
        out.entropy.push(f.entropy);
        out.anisotropy.push(f.anisotropy);
        out.alpha.push(f.alpha);
        out.alpha_i.push(f.alpha_i);
        out.valid.push(f.valid);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use polsar_core::cmat3::CMat3;

    fn features_of(t: CMat3) -> PixelFeatures {
        h_a_alpha(&eigen_hermitian3(&t).unwrap())
    }

    #[test]
    fn single_dominant_mechanism() {
        let f = features_of(CMat3::diag([1.0, 0.0, 0.0]));
        assert!(f.valid);
        assert!(f.entropy.abs() < 1e-12);
        assert!(f.alpha.abs() < 1e-12);
        assert!(f.anisotropy.abs() < 1e-12);
    }

    #[test]
    fn maximum_entropy() {
        let f = features_of(CMat3::identity().scale(1.0 / 3.0));
        assert!((f.entropy - 1.0).abs() < 1e-12);
        // canonical basis convention: alpha_i = (0, 90, 90) degrees
        assert!((f.alpha - 60.0).abs() < 1e-9);
        assert!(f.anisotropy.abs() < 1e-12);
    }

    #[test]
    fn two_equal_mechanisms() {
        let f = features_of(CMat3::diag([0.5, 0.5, 0.0]));
        let expected_h = 2.0f64.ln() / 3.0f64.ln();
        assert!((f.entropy - expected_h).abs() < 1e-12);
        assert!((f.alpha - 45.0).abs() < 1e-9);
        assert!((f.anisotropy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_power_pixel_flagged() {
        let f = features_of(CMat3::zeros());
        assert!(!f.valid);
        assert_eq!(f.p, [0.0; 3]);
        assert_eq!(f.entropy, 0.0);
        assert_eq!(f.anisotropy, 0.0);
        assert_eq!(f.alpha, 0.0);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = polsar_core::rng::SplitMix64::new(5);
        for _ in 0..100 {
            let mut t = CMat3::zeros();
            for _ in 0..4 {
                let k = [
                    C64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                    C64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                    C64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                ];
                t.add_assign(&CMat3::outer(&k));
            }
            let f = features_of(t.hermitize());
            assert!((f.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&f.entropy));
            assert!((0.0..=1.0).contains(&f.anisotropy));
            assert!((0.0..=90.0).contains(&f.alpha));
        }
    }
}
