//! Closed-form eigendecomposition of 3x3 Hermitian matrices.
//!
//! Eigenvalues come from the trigonometric solution of the
//! characteristic cubic, tightened by one Newton step. Eigenvectors
//! come from cross products of the shifted rows, with inverse
//! iteration when the rows are near-parallel and a deterministic
//! canonical-basis Gram-Schmidt construction for degenerate
//! eigenvalues, so repeated runs produce identical bases.

use polsar_core::cmat3::{CMat3, C64};

use crate::EigenError;

/// Relative spread below which two eigenvalues are treated as equal.
pub const DEGENERACY_REL_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Eigen3 {
    /// Eigenvalues sorted descending.
    pub values: [f64; 3],
    /// `vectors[i]` is the unit eigenvector paired with `values[i]`.
    pub vectors: [[C64; 3]; 3],
}

impl Eigen3 {
    /// Frobenius norm of T - V diag(lambda) V^H.
    pub fn reconstruction_error(&self, t: &CMat3) -> f64 {
        let mut rec = CMat3::zeros();
        for k in 0..3 {
            let mut outer = CMat3::outer(&self.vectors[k]);
            outer = outer.scale(1.0);
            for i in 0..3 {
                for j in 0..3 {
                    rec.m[i][j] += outer.m[i][j] * self.values[k];
                }
            }
        }
        t.sub(&rec).frob_norm()
    }
}

const CANONICAL: [[C64; 3]; 3] = {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    [[one, zero, zero], [zero, one, zero], [zero, zero, one]]
};

pub fn eigen_hermitian3(t: &CMat3) -> Result<Eigen3, EigenError> {
    let trace = t.trace_re();
    let tolerance = 1e-9 * trace.abs().max(f64::MIN_POSITIVE);
    let deviation = t.herm_deviation();
    if deviation > tolerance {
        return Err(EigenError::NotHermitian {
            deviation,
            tolerance,
        });
    }
    let a = t.hermitize();

    let scale = max_abs_entry(&a);
    if scale == 0.0 {
        return Ok(Eigen3 {
            values: [0.0; 3],
            vectors: CANONICAL,
        });
    }
    let b = a.scale(1.0 / scale);

    let p1 = b.m[0][1].norm_sqr() + b.m[0][2].norm_sqr() + b.m[1][2].norm_sqr();
    if p1 <= 1e-30 {
        // diagonal input: the entries are the eigenvalues exactly and
        // the canonical basis (permuted to descending order, ties keep
        // the lower canonical index first) is the eigenbasis
        let d = [a.m[0][0].re, a.m[1][1].re, a.m[2][2].re];
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap().then(i.cmp(&j)));
        let mut vectors = CANONICAL;
        let mut values = [0.0; 3];
        for (slot, &src) in order.iter().enumerate() {
            values[slot] = d[src];
            vectors[slot] = CANONICAL[src];
        }
        return Ok(Eigen3 { values, vectors });
    }

    let (values, vectors) = eigen_core(&b, 0)?;

    Ok(Eigen3 {
        values: [values[0] * scale, values[1] * scale, values[2] * scale],
        vectors,
    })
}

fn eigen_core(b: &CMat3, depth: usize) -> Result<([f64; 3], [[C64; 3]; 3]), EigenError> {
    let mut values = eigenvalues_trig(b);
    newton_polish(b, &mut values);
    values.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eigenvectors(b, values, depth)
}

fn max_abs_entry(a: &CMat3) -> f64 {
    let mut s = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            s = s.max(a.m[i][j].re.abs()).max(a.m[i][j].im.abs());
        }
    }
    s
}

/// Trigonometric solution of det(B - lambda I) = 0 for Hermitian B.
fn eigenvalues_trig(b: &CMat3) -> [f64; 3] {
    let p1 = b.m[0][1].norm_sqr() + b.m[0][2].norm_sqr() + b.m[1][2].norm_sqr();
    let d = [b.m[0][0].re, b.m[1][1].re, b.m[2][2].re];
    if p1 == 0.0 {
        let mut vals = d;
        vals.sort_by(|x, y| y.partial_cmp(x).unwrap());
        return vals;
    }
    let q = (d[0] + d[1] + d[2]) / 3.0;
    let p2 = (d[0] - q).powi(2) + (d[1] - q).powi(2) + (d[2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut m = CMat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            m.m[i][j] = b.m[i][j];
        }
        m.m[i][i] -= C64::new(q, 0.0);
    }
    let m = m.scale(1.0 / p);
    let r = (m.det().re / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let two_pi_3 = 2.0 * std::f64::consts::PI / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + two_pi_3).cos();
    let l2 = 3.0 * q - l1 - l3;
    [l1, l2, l3]
}

/// Coefficients of the monic characteristic polynomial
/// p(x) = x^3 - c2 x^2 + c1 x - c0 (real for Hermitian input).
pub(crate) fn charpoly_coeffs(b: &CMat3) -> (f64, f64, f64) {
    let d = [b.m[0][0].re, b.m[1][1].re, b.m[2][2].re];
    let c2 = d[0] + d[1] + d[2];
    let c1 = d[0] * d[1] - b.m[0][1].norm_sqr() + d[0] * d[2] - b.m[0][2].norm_sqr()
        + d[1] * d[2]
        - b.m[1][2].norm_sqr();
    let c0 = b.det().re;
    (c2, c1, c0)
}

fn newton_polish(b: &CMat3, values: &mut [f64; 3]) {
    let (c2, c1, c0) = charpoly_coeffs(b);
    for v in values.iter_mut() {
        let p = ((*v - c2) * *v + c1) * *v - c0;
        let dp = (3.0 * *v - 2.0 * c2) * *v + c1;
        // near-degenerate roots have dp ~ 0; the trig value is kept
        if dp.abs() > 1e-8 {
            *v -= p / dp;
        }
    }
}

fn shifted(b: &CMat3, lambda: f64) -> CMat3 {
    let mut m = *b;
    for i in 0..3 {
        m.m[i][i] -= C64::new(lambda, 0.0);
    }
    m
}

fn cross(a: &[C64; 3], b: &[C64; 3]) -> [C64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn inner(u: &[C64; 3], v: &[C64; 3]) -> C64 {
    u[0] * v[0].conj() + u[1] * v[1].conj() + u[2] * v[2].conj()
}

fn norm(v: &[C64; 3]) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr()).sqrt()
}

fn normalize(v: &mut [C64; 3]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

fn residual(b: &CMat3, lambda: f64, v: &[C64; 3]) -> f64 {
    let mv = shifted(b, lambda).mul_vec(v);
    norm(&mv)
}

/// Best cross product of two rows of (B - lambda I); the null-space
/// direction when the eigenvalue is simple.
fn cross_product_vector(b: &CMat3, lambda: f64) -> ([C64; 3], f64) {
    let m = shifted(b, lambda);
    let rows = [m.m[0], m.m[1], m.m[2]];
    let mut best = [C64::new(0.0, 0.0); 3];
    let mut best_norm = -1.0;
    for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let c = cross(&rows[i], &rows[j]);
        let n = norm(&c);
        if n > best_norm {
            best_norm = n;
            best = c;
        }
    }
    (best, best_norm)
}

fn inverse_iteration(b: &CMat3, lambda: f64, start: &[C64; 3]) -> Option<[C64; 3]> {
    // small shift keeps the matrix invertible near exact eigenvalues
    let shift = 1e-11 * (1.0 + lambda.abs());
    let m = shifted(b, lambda + shift);
    let inv = m.inverse()?;
    let mut v = *start;
    for _ in 0..3 {
        v = inv.mul_vec(&v);
        if normalize(&mut v) == 0.0 {
            return None;
        }
    }
    Some(v)
}

/// Deterministic unit vector orthogonal to all of `against`, built by
/// Gram-Schmidt over the canonical basis.
fn canonical_orthogonal(against: &[[C64; 3]]) -> [C64; 3] {
    for e in &CANONICAL {
        let mut w = *e;
        for u in against {
            let proj = inner(&w, u);
            for i in 0..3 {
                w[i] -= proj * u[i];
            }
        }
        if normalize(&mut w) > 0.35 {
            return w;
        }
    }
    // unreachable for <= 2 constraints in C^3
    CANONICAL[0]
}

fn fix_phase(v: &mut [C64; 3]) {
    let mut jmax = 0;
    let mut best = -1.0;
    for (j, x) in v.iter().enumerate() {
        let n = x.norm();
        if n > best + 1e-15 {
            best = n;
            jmax = j;
        }
    }
    if best > 0.0 {
        let phase = v[jmax].conj() / best;
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

/// Relative gap below which a pair of roots is routed through the 2x2
/// subspace refinement: double roots of the characteristic cubic are
/// only determined to sqrt(machine epsilon) by the coefficients, so
/// near-degenerate pairs must be re-derived from the matrix itself.
const PAIR_GAP_REL: f64 = 1e-6;

fn eigenvectors(
    b: &CMat3,
    mut values: [f64; 3],
    depth: usize,
) -> Result<([f64; 3], [[C64; 3]; 3]), EigenError> {
    let spread: f64 = values.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let tau = DEGENERACY_REL_TOL * spread;
    let pair_gap = PAIR_GAP_REL * spread;
    let g01 = values[0] - values[1];
    let g12 = values[1] - values[2];

    let mut vectors = CANONICAL;

    if g01 <= pair_gap && g12 <= pair_gap {
        if values[0] - values[2] <= tau || depth >= 2 {
            // numerically scalar: canonical convention
            return Ok((values, CANONICAL));
        }
        // near-scalar: recurse on the scaled deviator, whose relative
        // gaps are O(1)
        let q = (b.m[0][0].re + b.m[1][1].re + b.m[2][2].re) / 3.0;
        let mut dev = *b;
        for i in 0..3 {
            dev.m[i][i] -= C64::new(q, 0.0);
        }
        let dev_scale = max_abs_entry(&dev);
        if dev_scale <= 1e-15 {
            return Ok((values, CANONICAL));
        }
        let (dev_values, dev_vectors) = eigen_core(&dev.scale(1.0 / dev_scale), depth + 1)?;
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = q + dev_scale * dev_values[i];
        }
        return Ok((out, dev_vectors));
    }

    if g01 <= pair_gap || g12 <= pair_gap {
        // one close pair and one isolated eigenvalue
        let (da, db, simple) = if g01 <= pair_gap { (0, 1, 2) } else { (1, 2, 0) };
        let vs = simple_eigenvector(b, values[simple])?;
        let va = canonical_orthogonal(&[vs]);
        let mut vb = cross(&va, &vs);
        for x in vb.iter_mut() {
            *x = x.conj();
        }
        if normalize(&mut vb) < 0.5 {
            vb = canonical_orthogonal(&[vs, va]);
        }
        // Rayleigh-Ritz on span{va, vb}: exact pair eigenvalues and an
        // in-subspace rotation, replacing the sqrt(eps)-accurate roots
        let (mu_hi, mu_lo, rot) = restrict_2x2(b, &va, &vb, tau);
        let (hi_vec, lo_vec) = rot.apply(&va, &vb);
        values[simple] = rayleigh(b, &vs);
        values[da] = mu_hi;
        values[db] = mu_lo;
        vectors[simple] = vs;
        vectors[da] = hi_vec;
        vectors[db] = lo_vec;
    } else {
        for slot in 0..3 {
            vectors[slot] = simple_eigenvector(b, values[slot])?;
        }
    }

    // modified Gram-Schmidt pass tightens orthogonality, then a fixed
    // phase convention (largest component real, non-negative) keeps
    // output reproducible
    for k in 0..3 {
        for m in 0..k {
            let proj = inner(&vectors[k], &vectors[m]);
            for i in 0..3 {
                vectors[k][i] -= proj * vectors[m][i];
            }
        }
        if normalize(&mut vectors[k]) == 0.0 {
            return Err(EigenError::NoConvergence(
                "eigenvector collapsed during orthogonalization".into(),
            ));
        }
        fix_phase(&mut vectors[k]);
    }

    // refinement may nudge near-equal values past each other
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap().then(i.cmp(&j)));
    let sorted_values = [values[order[0]], values[order[1]], values[order[2]]];
    let sorted_vectors = [vectors[order[0]], vectors[order[1]], vectors[order[2]]];
    Ok((sorted_values, sorted_vectors))
}

fn rayleigh(b: &CMat3, v: &[C64; 3]) -> f64 {
    let bv = b.mul_vec(v);
    inner(&bv, v).re
}

/// Unitary 2x2 rotation expressed in a {va, vb} basis.
struct Rot2 {
    x1: C64,
    y1: C64,
    x2: C64,
    y2: C64,
}

impl Rot2 {
    fn apply(&self, va: &[C64; 3], vb: &[C64; 3]) -> ([C64; 3], [C64; 3]) {
        let mut hi = [C64::new(0.0, 0.0); 3];
        let mut lo = [C64::new(0.0, 0.0); 3];
        for i in 0..3 {
            hi[i] = self.x1 * va[i] + self.y1 * vb[i];
            lo[i] = self.x2 * va[i] + self.y2 * vb[i];
        }
        (hi, lo)
    }
}

/// Eigen-solve the restriction of Hermitian `b` onto span{va, vb}.
/// Returns (mu_hi, mu_lo, rotation). For an (numerically) exactly
/// degenerate restriction the rotation is the identity, preserving the
/// deterministic canonical construction of the inputs.
fn restrict_2x2(b: &CMat3, va: &[C64; 3], vb: &[C64; 3], tau: f64) -> (f64, f64, Rot2) {
    let bva = b.mul_vec(va);
    let bvb = b.mul_vec(vb);
    let m11 = inner(&bva, va).re;
    let m22 = inner(&bvb, vb).re;
    let m12 = inner(&bvb, va); // va^H B vb
    let identity = Rot2 {
        x1: C64::new(1.0, 0.0),
        y1: C64::new(0.0, 0.0),
        x2: C64::new(0.0, 0.0),
        y2: C64::new(1.0, 0.0),
    };
    let swap = Rot2 {
        x1: C64::new(0.0, 0.0),
        y1: C64::new(1.0, 0.0),
        x2: C64::new(1.0, 0.0),
        y2: C64::new(0.0, 0.0),
    };
    let mid = 0.5 * (m11 + m22);
    let delta = 0.5 * (m11 - m22);
    let r = (delta * delta + m12.norm_sqr()).sqrt();
    let (mu_hi, mu_lo) = (mid + r, mid - r);
    if m12.norm() <= tau.max(1e-15 * (m11.abs() + m22.abs())) {
        // diagonal restriction: keep the canonical basis vectors
        return if m11 >= m22 {
            (m11, m22, identity)
        } else {
            (m22, m11, swap)
        };
    }
    // eigenvector of [[m11, m12], [m12*, m22]] for mu_hi: (m12, mu_hi - m11)
    let mut x1 = m12;
    let mut y1 = C64::new(mu_hi - m11, 0.0);
    let n = (x1.norm_sqr() + y1.norm_sqr()).sqrt();
    x1 /= n;
    y1 /= n;
    // orthogonal completion
    let x2 = -y1.conj();
    let y2 = x1.conj();
    (mu_hi, mu_lo, Rot2 { x1, y1, x2, y2 })
}

fn simple_eigenvector(b: &CMat3, lambda: f64) -> Result<[C64; 3], EigenError> {
    let (mut v, cross_norm) = cross_product_vector(b, lambda);
    let row_scale = max_abs_entry(&shifted(b, lambda)).max(f64::MIN_POSITIVE);
    if cross_norm > 1e-12 * row_scale * row_scale {
        normalize(&mut v);
    } else {
        // rows near-parallel: fall back to inverse iteration
        v = inverse_iteration(b, lambda, &CANONICAL[0])
            .or_else(|| inverse_iteration(b, lambda, &CANONICAL[1]))
            .ok_or_else(|| {
                EigenError::NoConvergence(format!(
                    "inverse iteration failed at lambda = {lambda}"
                ))
            })?;
    }
    // polish when the residual is loose for an isolated eigenvalue
    if residual(b, lambda, &v) > 1e-11 {
        if let Some(better) = inverse_iteration(b, lambda, &v) {
            if residual(b, lambda, &better) < residual(b, lambda, &v) {
                v = better;
            }
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn diagonal_matrix() {
        let e = eigen_hermitian3(&CMat3::diag([3.0, 2.0, 1.0])).unwrap();
        assert_eq!(e.values, [3.0, 2.0, 1.0]);
        assert_eq!(e.vectors, CANONICAL);
    }

    #[test]
    fn diagonal_needs_permutation() {
        let e = eigen_hermitian3(&CMat3::diag([1.0, 3.0, 2.0])).unwrap();
        assert_eq!(e.values, [3.0, 2.0, 1.0]);
        assert_eq!(e.vectors[0], CANONICAL[1]);
        assert_eq!(e.vectors[1], CANONICAL[2]);
        assert_eq!(e.vectors[2], CANONICAL[0]);
    }

    #[test]
    fn scaled_identity_uses_canonical_convention() {
        let e = eigen_hermitian3(&CMat3::identity().scale(1.0 / 3.0)).unwrap();
        for v in e.values {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(e.vectors, CANONICAL);
    }

    #[test]
    fn zero_matrix() {
        let e = eigen_hermitian3(&CMat3::zeros()).unwrap();
        assert_eq!(e.values, [0.0; 3]);
        assert_eq!(e.vectors, CANONICAL);
    }

    #[test]
    fn rank_one_outer_product() {
        let k = [c(1.0, 0.5), c(-0.25, 0.75), c(0.5, -1.0)];
        let t = CMat3::outer(&k).hermitize();
        let e = eigen_hermitian3(&t).unwrap();
        let k_sqr: f64 = k.iter().map(|x| x.norm_sqr()).sum();
        assert!((e.values[0] - k_sqr).abs() < 1e-12 * k_sqr);
        assert!(e.values[1].abs() < 1e-12 * k_sqr);
        assert!(e.values[2].abs() < 1e-12 * k_sqr);
        assert!(e.reconstruction_error(&t) < 1e-10 * t.frob_norm());
    }

    #[test]
    fn double_degenerate_pair() {
        // U diag(1, 1, 0) U^H for a nontrivial unitary rotation
        let u = std::f64::consts::FRAC_1_SQRT_2;
        let v1 = [c(u, 0.0), c(0.0, u), c(0.0, 0.0)];
        let v2 = [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let mut t = CMat3::outer(&v1);
        t.add_assign(&CMat3::outer(&v2));
        let t = t.hermitize();
        let e = eigen_hermitian3(&t).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        assert!(e.values[2].abs() < 1e-12);
        assert!(e.reconstruction_error(&t) < 1e-10);
        for i in 0..3 {
            for j in 0..i {
                assert!(inner(&e.vectors[i], &e.vectors[j]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut t = CMat3::diag([1.0, 1.0, 1.0]);
        t.m[0][1] = c(0.5, 0.0);
        t.m[1][0] = c(0.0, 0.0);
        assert!(matches!(
            eigen_hermitian3(&t),
            Err(EigenError::NotHermitian { .. })
        ));
    }

    #[test]
    fn orthonormality_and_reconstruction_on_random_psd() {
        let mut rng = polsar_core::rng::SplitMix64::new(2024);
        for _ in 0..200 {
            let mut t = CMat3::zeros();
            for _ in 0..3 {
                let k = [
                    c(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                    c(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                    c(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                ];
                t.add_assign(&CMat3::outer(&k));
            }
            let t = t.hermitize();
            let e = eigen_hermitian3(&t).unwrap();
            assert!(e.values[0] >= e.values[1] && e.values[1] >= e.values[2]);
            assert!(e.values[2] >= -1e-10 * t.trace_re());
            for i in 0..3 {
                assert!((norm(&e.vectors[i]) - 1.0).abs() < 1e-10);
                for j in 0..i {
                    assert!(inner(&e.vectors[i], &e.vectors[j]).norm() < 1e-10);
                }
            }
            assert!(e.reconstruction_error(&t) <= 1e-9 * t.frob_norm());
        }
    }
}
