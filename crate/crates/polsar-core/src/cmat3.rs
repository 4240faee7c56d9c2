//! Dense 3x3 complex matrices, the workhorse of coherency processing.

use num_complex::Complex;

pub type C64 = Complex<f64>;

/// Row-major 3x3 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CMat3 {
    pub m: [[C64; 3]; 3],
}

impl CMat3 {
    pub fn zeros() -> Self {
        CMat3 {
            m: [[C64::new(0.0, 0.0); 3]; 3],
        }
    }

    pub fn identity() -> Self {
        let mut a = Self::zeros();
        for i in 0..3 {
            a.m[i][i] = C64::new(1.0, 0.0);
        }
        a
    }

    pub fn diag(d: [f64; 3]) -> Self {
        let mut a = Self::zeros();
        for i in 0..3 {
            a.m[i][i] = C64::new(d[i], 0.0);
        }
        a
    }

    /// Outer product k k^H of a Pauli scattering vector.
    pub fn outer(k: &[C64; 3]) -> Self {
        let mut a = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                a.m[i][j] = k[i] * k[j].conj();
            }
        }
        a
    }

    pub fn add(&self, other: &CMat3) -> CMat3 {
        let mut a = *self;
        for i in 0..3 {
            for j in 0..3 {
                a.m[i][j] += other.m[i][j];
            }
        }
        a
    }

    pub fn add_assign(&mut self, other: &CMat3) {
        for i in 0..3 {
            for j in 0..3 {
                self.m[i][j] += other.m[i][j];
            }
        }
    }

    pub fn sub(&self, other: &CMat3) -> CMat3 {
        let mut a = *self;
        for i in 0..3 {
            for j in 0..3 {
                a.m[i][j] -= other.m[i][j];
            }
        }
        a
    }

    pub fn scale(&self, s: f64) -> CMat3 {
        let mut a = *self;
        for i in 0..3 {
            for j in 0..3 {
                a.m[i][j] *= s;
            }
        }
        a
    }

    /// Conjugate transpose.
    pub fn herm(&self) -> CMat3 {
        let mut a = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                a.m[i][j] = self.m[j][i].conj();
            }
        }
        a
    }

    /// (A + A^H) / 2, the nearest Hermitian matrix.
    pub fn hermitize(&self) -> CMat3 {
        self.add(&self.herm()).scale(0.5)
    }

    pub fn mul(&self, other: &CMat3) -> CMat3 {
        let mut a = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..3 {
                    s += self.m[i][k] * other.m[k][j];
                }
                a.m[i][j] = s;
            }
        }
        a
    }

    pub fn mul_vec(&self, v: &[C64; 3]) -> [C64; 3] {
        let mut out = [C64::new(0.0, 0.0); 3];
        for i in 0..3 {
            for k in 0..3 {
                out[i] += self.m[i][k] * v[k];
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    /// Real part of the trace; the trace itself for Hermitian input.
    pub fn trace_re(&self) -> f64 {
        self.trace().re
    }

    pub fn det(&self) -> C64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse via the adjugate. Returns `None` when |det| is not
    /// usable at f64 scale.
    pub fn inverse(&self) -> Option<CMat3> {
        let d = self.det();
        if d.norm() < 1e-300 || !d.norm().is_finite() {
            return None;
        }
        let m = &self.m;
        let mut adj = CMat3::zeros();
        // adjugate = transposed cofactor matrix
        adj.m[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
        adj.m[0][1] = m[0][2] * m[2][1] - m[0][1] * m[2][2];
        adj.m[0][2] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
        adj.m[1][0] = m[1][2] * m[2][0] - m[1][0] * m[2][2];
        adj.m[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
        adj.m[1][2] = m[0][2] * m[1][0] - m[0][0] * m[1][2];
        adj.m[2][0] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
        adj.m[2][1] = m[0][1] * m[2][0] - m[0][0] * m[2][1];
        adj.m[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let inv_d = C64::new(1.0, 0.0) / d;
        let mut out = adj;
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] *= inv_d;
            }
        }
        Some(out)
    }

    pub fn frob_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.m[i][j].norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Largest |a_ij - conj(a_ji)| over all entries.
    pub fn herm_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let dev = (self.m[i][j] - self.m[j][i].conj()).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.herm_deviation() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_identity() {
        let inv = CMat3::identity().inverse().unwrap();
        assert!(inv.sub(&CMat3::identity()).frob_norm() < 1e-14);
    }

    #[test]
    fn inverse_roundtrip() {
        let mut a = CMat3::diag([2.0, 1.0, 0.5]);
        a.m[0][1] = C64::new(0.3, 0.2);
        a.m[1][0] = C64::new(0.3, -0.2);
        a.m[1][2] = C64::new(-0.1, 0.4);
        a.m[2][1] = C64::new(-0.1, -0.4);
        let inv = a.inverse().unwrap();
        let prod = a.mul(&inv);
        assert!(prod.sub(&CMat3::identity()).frob_norm() < 1e-12);
    }

    #[test]
    fn singular_has_no_inverse() {
        let a = CMat3::diag([1.0, 1.0, 0.0]);
        assert!(a.inverse().is_none());
    }

    #[test]
    fn outer_is_rank_one_hermitian() {
        let k = [C64::new(1.0, 2.0), C64::new(0.0, -1.0), C64::new(3.0, 0.5)];
        let t = CMat3::outer(&k);
        assert!(t.is_hermitian(1e-15));
        let norm_sqr: f64 = k.iter().map(|c| c.norm_sqr()).sum();
        assert!((t.trace_re() - norm_sqr).abs() < 1e-12);
        assert!(t.det().norm() < 1e-12);
    }
}
