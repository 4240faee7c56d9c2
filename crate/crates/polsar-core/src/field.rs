//! Per-pixel field types and the decomposition operations on them.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::cmat3::{CMat3, C64};
use crate::error::CoreError;

/// Per-pixel complex scattering amplitudes of a single-look-complex
/// scene. Reciprocity is assumed, so only one cross-pol channel is
/// stored (S_HV = S_VH).
#[derive(Clone, Debug)]
pub struct ScatteringField {
    pub width: usize,
    pub height: usize,
    pub s_hh: Vec<C64>,
    pub s_hv: Vec<C64>,
    pub s_vv: Vec<C64>,
    /// Free-form annotations (band, resolution, ...). Not persisted by
    /// the SLC container.
    pub metadata: BTreeMap<String, String>,
}

impl ScatteringField {
    pub fn new(
        width: usize,
        height: usize,
        s_hh: Vec<C64>,
        s_hv: Vec<C64>,
        s_vv: Vec<C64>,
    ) -> Result<Self, CoreError> {
        let n = width * height;
        if s_hh.len() != n || s_hv.len() != n || s_vv.len() != n {
            return Err(CoreError::InvalidField(format!(
                "channel buffers must hold {}x{} = {} samples (got {}, {}, {})",
                width,
                height,
                n,
                s_hh.len(),
                s_hv.len(),
                s_vv.len()
            )));
        }
        Ok(ScatteringField {
            width,
            height,
            s_hh,
            s_hv,
            s_vv,
            metadata: BTreeMap::new(),
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); width * height];
        ScatteringField {
            width,
            height,
            s_hh: z.clone(),
            s_hv: z.clone(),
            s_vv: z,
            metadata: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Pauli scattering vectors k_P = (1/sqrt 2) [S_HH+S_VV, S_HH-S_VV, 2 S_HV].
#[derive(Clone, Debug)]
pub struct PauliField {
    pub width: usize,
    pub height: usize,
    pub k1: Vec<C64>,
    pub k2: Vec<C64>,
    pub k3: Vec<C64>,
}

impl PauliField {
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn k_at(&self, idx: usize) -> [C64; 3] {
        [self.k1[idx], self.k2[idx], self.k3[idx]]
    }
}

/// Multilooked 3x3 Hermitian coherency matrices.
#[derive(Clone, Debug)]
pub struct CoherencyField {
    pub width: usize,
    pub height: usize,
    pub t: Vec<CMat3>,
    /// Side length of the boxcar window used for averaging.
    pub looks: usize,
}

impl CoherencyField {
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-pixel total backscattered power, trace(T).
#[derive(Clone, Debug)]
pub struct SpanField {
    pub width: usize,
    pub height: usize,
    pub span: Vec<f64>,
}

/// Project the scattering matrix onto the Pauli basis. Total function:
/// every input pixel maps to k_P by the closed formula, and
/// |k_P|^2 = |S_HH|^2 + |S_VV|^2 + 2|S_HV|^2 holds per pixel.
pub fn pauli_vector(field: &ScatteringField) -> PauliField {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let n = field.len();
    let mut k1 = vec![C64::new(0.0, 0.0); n];
    let mut k2 = vec![C64::new(0.0, 0.0); n];
    let mut k3 = vec![C64::new(0.0, 0.0); n];
    k1.par_iter_mut()
        .zip(k2.par_iter_mut())
        .zip(k3.par_iter_mut())
        .enumerate()
        .for_each(|(i, ((a, b), c))| {
            let hh = field.s_hh[i];
            let hv = field.s_hv[i];
            let vv = field.s_vv[i];
            *a = (hh + vv) * inv_sqrt2;
            *b = (hh - vv) * inv_sqrt2;
            *c = hv * 2.0 * inv_sqrt2;
        });
    PauliField {
        width: field.width,
        height: field.height,
        k1,
        k2,
        k3,
    }
}

/// Boxcar-multilooked coherency T(x, y) = mean over the window of
/// k_P k_P^H. The window is clamped at image edges, so output
/// dimensions match the input and edge estimates average fewer
/// samples.
pub fn coherency(pauli: &PauliField, window: usize) -> Result<CoherencyField, CoreError> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(CoreError::BadWindow(window));
    }
    if window > pauli.width.min(pauli.height) {
        return Err(CoreError::WindowTooLarge {
            window,
            width: pauli.width,
            height: pauli.height,
        });
    }
    let (w, h) = (pauli.width, pauli.height);
    let r = window / 2;
    let mut t = vec![CMat3::zeros(); w * h];
    t.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r).min(h - 1);
        for (x, out) in row.iter_mut().enumerate() {
            let x0 = x.saturating_sub(r);
            let x1 = (x + r).min(w - 1);
            let mut acc = CMat3::zeros();
            let mut count = 0usize;
            for yy in y0..=y1 {
                for xx in x0..=x1 {
                    let k = pauli.k_at(yy * w + xx);
                    acc.add_assign(&CMat3::outer(&k));
                    count += 1;
                }
            }
            *out = acc.scale(1.0 / count as f64).hermitize();
        }
    });
    Ok(CoherencyField {
        width: w,
        height: h,
        t,
        looks: window,
    })
}

/// SPAN = T11 + T22 + T33 per pixel.
pub fn span(coh: &CoherencyField) -> SpanField {
    let span = coh.t.iter().map(|m| m.trace_re()).collect();
    SpanField {
        width: coh.width,
        height: coh.height,
        span,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn single_pixel(hh: C64, hv: C64, vv: C64) -> ScatteringField {
        ScatteringField::new(1, 1, vec![hh], vec![hv], vec![vv]).unwrap()
    }

    #[test]
    fn pauli_pure_odd_bounce() {
        let f = single_pixel(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        let p = pauli_vector(&f);
        assert!((p.k1[0] - c(std::f64::consts::SQRT_2, 0.0)).norm() < 1e-15);
        assert_eq!(p.k2[0], c(0.0, 0.0));
        assert_eq!(p.k3[0], c(0.0, 0.0));
    }

    #[test]
    fn pauli_pure_double_bounce() {
        let f = single_pixel(c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0));
        let p = pauli_vector(&f);
        assert_eq!(p.k1[0], c(0.0, 0.0));
        assert!((p.k2[0] - c(std::f64::consts::SQRT_2, 0.0)).norm() < 1e-15);
        assert_eq!(p.k3[0], c(0.0, 0.0));
    }

    #[test]
    fn pauli_pure_cross_pol() {
        let f = single_pixel(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
        let p = pauli_vector(&f);
        assert_eq!(p.k1[0], c(0.0, 0.0));
        assert_eq!(p.k2[0], c(0.0, 0.0));
        assert!((p.k3[0] - c(std::f64::consts::SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn coherency_window_one_is_outer_product() {
        let f = single_pixel(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        let p = pauli_vector(&f);
        let coh = coherency(&p, 1).unwrap();
        let expected = CMat3::diag([2.0, 0.0, 0.0]);
        assert!(coh.t[0].sub(&expected).frob_norm() < 1e-12);
        // trace(T) = |k_P|^2 for a single-look outer product
        let k_norm: f64 = p.k_at(0).iter().map(|v| v.norm_sqr()).sum();
        assert!((coh.t[0].trace_re() - k_norm).abs() < 1e-12);
    }

    #[test]
    fn coherency_constant_field_equals_single_pixel() {
        let mut f = ScatteringField::zeros(3, 3);
        for i in 0..9 {
            f.s_hh[i] = c(0.7, -0.2);
            f.s_hv[i] = c(0.1, 0.4);
            f.s_vv[i] = c(-0.3, 0.6);
        }
        let p = pauli_vector(&f);
        let one = coherency(&p, 1).unwrap();
        let three = coherency(&p, 3).unwrap();
        for i in 0..9 {
            assert!(three.t[i].sub(&one.t[4]).frob_norm() < 1e-12);
        }
    }

    #[test]
    fn coherency_rejects_even_or_zero_window() {
        let p = pauli_vector(&ScatteringField::zeros(4, 4));
        assert!(matches!(coherency(&p, 0), Err(CoreError::BadWindow(0))));
        assert!(matches!(coherency(&p, 2), Err(CoreError::BadWindow(2))));
        assert!(matches!(
            coherency(&p, 5),
            Err(CoreError::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn span_matches_trace() {
        let f = single_pixel(c(1.0, 0.0), c(0.5, 0.5), c(-0.25, 0.1));
        let p = pauli_vector(&f);
        let coh = coherency(&p, 1).unwrap();
        let s = span(&coh);
        assert_eq!(s.span[0], coh.t[0].trace_re());
    }

    #[test]
    fn span_of_scaled_identity() {
        let coh = CoherencyField {
            width: 1,
            height: 1,
            t: vec![CMat3::identity().scale(1.0 / 3.0)],
            looks: 1,
        };
        assert!((span(&coh).span[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_buffers_rejected() {
        let err = ScatteringField::new(2, 2, vec![c(0.0, 0.0); 3], vec![c(0.0, 0.0); 4], vec![
            c(0.0, 0.0);
            4
        ]);
        assert!(matches!(err, Err(CoreError::InvalidField(_))));
    }
}
