//! Slow-but-sure cross-checks for the eigensolver, kept on a separate
//! code path: eigenvalues as bisection roots of the characteristic
//! polynomial.

use polsar_core::cmat3::CMat3;

use crate::eigen3::charpoly_coeffs;

/// Eigenvalues of a 3x3 Hermitian matrix found by bisecting the
/// characteristic polynomial between its critical points, sorted
/// descending. Intended as a test oracle; cost is irrelevant.
pub fn eigenvalues_bisect(t: &CMat3) -> [f64; 3] {
    let a = t.hermitize();
    let (c2, c1, c0) = charpoly_coeffs(&a);
    let p = |x: f64| ((x - c2) * x + c1) * x - c0;

    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..3 {
        let center = a.m[i][i].re;
        let mut radius = 0.0;
        for j in 0..3 {
            if j != i {
                radius += a.m[i][j].norm();
            }
        }
        lo = lo.min(center - radius);
        hi = hi.max(center + radius);
    }
    let pad = 1e-9 * (hi - lo).abs().max(1.0);
    lo -= pad;
    hi += pad;

    // critical points of the cubic
    let disc = c2 * c2 - 3.0 * c1;
    if disc <= 0.0 {
        // numerically scalar matrix: triple root at c2 / 3
        let r = c2 / 3.0;
        return [r, r, r];
    }
    let sq = disc.sqrt();
    let t1 = (c2 - sq) / 3.0;
    let t2 = (c2 + sq) / 3.0;

    let r1 = bisect_root(&p, lo, t1);
    let r2 = bisect_root(&p, t1, t2);
    let r3 = bisect_root(&p, t2, hi);
    let mut roots = [r1, r2, r3];
    roots.sort_by(|x, y| y.partial_cmp(x).unwrap());
    roots
}

fn bisect_root(p: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let (fa, fb) = (p(a), p(b));
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    if fa.signum() == fb.signum() {
        // no sign change: a (near-)double root sits at the endpoint
        // where |p| is smaller
        return if fa.abs() < fb.abs() { a } else { b };
    }
    let mut fa = fa;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = p(mid);
        if fm == 0.0 || (b - a).abs() < 1e-15 * (1.0 + mid.abs()) {
            return mid;
        }
        if fa.signum() == fm.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}
