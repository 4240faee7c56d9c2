//! Property checks for the decomposition layer.

use num_complex::Complex;
use polsar_core::{coherency, pauli_vector, span, CMat3, ScatteringField};
use proptest::prelude::*;

type C64 = Complex<f64>;

fn complex_strategy() -> impl Strategy<Value = C64> {
    (-10.0f64..10.0, -10.0f64..10.0).prop_map(|(re, im)| C64::new(re, im))
}

fn field_strategy(max_side: usize) -> impl Strategy<Value = ScatteringField> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        let n = w * h;
        (
            prop::collection::vec(complex_strategy(), n),
            prop::collection::vec(complex_strategy(), n),
            prop::collection::vec(complex_strategy(), n),
        )
            .prop_map(move |(hh, hv, vv)| ScatteringField::new(w, h, hh, hv, vv).unwrap())
    })
}

proptest! {
    /// |k_P|^2 = |S_HH|^2 + |S_VV|^2 + 2|S_HV|^2 per pixel.
    #[test]
    fn pauli_energy_preserved(field in field_strategy(6)) {
        let p = pauli_vector(&field);
        for i in 0..field.len() {
            let lhs = p.k1[i].norm_sqr() + p.k2[i].norm_sqr() + p.k3[i].norm_sqr();
            let rhs = field.s_hh[i].norm_sqr()
                + field.s_vv[i].norm_sqr()
                + 2.0 * field.s_hv[i].norm_sqr();
            let tol = 1e-9 * rhs.max(1e-30);
            prop_assert!((lhs - rhs).abs() <= tol, "pixel {}: {} vs {}", i, lhs, rhs);
        }
    }

    /// Multilooked T stays Hermitian with non-negative real diagonal.
    #[test]
    fn coherency_hermitian_psd_diagonal(field in field_strategy(7)) {
        let p = pauli_vector(&field);
        let window = if field.width.min(field.height) >= 3 { 3 } else { 1 };
        let coh = coherency(&p, window).unwrap();
        for t in &coh.t {
            let tr = t.trace_re();
            prop_assert!(t.herm_deviation() <= 1e-12 * tr.max(1e-30));
            for i in 0..3 {
                prop_assert!(t.m[i][i].im.abs() <= 1e-12 * tr.max(1e-30));
                prop_assert!(t.m[i][i].re >= -1e-12 * tr.max(1e-30));
            }
            prop_assert!(tr >= -1e-12);
        }
    }

    /// Window 1 is the identity on per-pixel outer products.
    #[test]
    fn window_one_is_identity(field in field_strategy(5)) {
        let p = pauli_vector(&field);
        let coh = coherency(&p, 1).unwrap();
        for i in 0..p.len() {
            let outer = CMat3::outer(&p.k_at(i)).hermitize();
            prop_assert!(coh.t[i].sub(&outer).frob_norm() <= 1e-12 * outer.frob_norm().max(1e-30));
        }
    }

    /// span equals trace(T) along the same arithmetic path.
    #[test]
    fn span_equals_trace(field in field_strategy(5)) {
        let p = pauli_vector(&field);
        let coh = coherency(&p, 1).unwrap();
        let s = span(&coh);
        for i in 0..coh.len() {
            prop_assert_eq!(s.span[i], coh.t[i].trace_re());
        }
    }
}
