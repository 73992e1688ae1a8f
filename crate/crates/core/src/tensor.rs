//! Algebra of symmetric traceless 3×3 matrices.
//!
//! Tensors are stored as five coefficients in the fixed orthonormal basis
//!
//! ```text
//! B1 = (e1e1 - e2e2)/√2          B2 = (2e3e3 - e1e1 - e2e2)/√6
//! B3 = (e1e2 + e2e1)/√2          B4 = (e1e3 + e3e1)/√2
//! B5 = (e2e3 + e3e2)/√2
//! ```
//!
//! so that `Bi:Bj = δij`. Symmetry and tracelessness hold by construction, and
//! the Frobenius product of two tensors is the dot product of their coefficients.
//! Checkpoints record this basis as [`BASIS_ID`].

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Identifier of the coefficient basis written into checkpoints.
pub const BASIS_ID: u32 = 1;

const S2: f64 = std::f64::consts::SQRT_2;
// 1/√6 and 2/√6
const INV_S6: f64 = 0.408_248_290_463_863_f64;
const TWO_INV_S6: f64 = 0.816_496_580_927_726_f64;

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Mat3(rows)
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Mat3([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn matmul(&self, other: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = (0..3).map(|k| self.0[i][k] * other.0[k][j]).sum();
            }
        }
        Mat3(out)
    }

    /// `R M Rᵀ`.
    pub fn conjugate_by(&self, r: &Mat3) -> Mat3 {
        r.matmul(self).matmul(&r.transpose())
    }

    /// Frobenius product `A:B = Σ Aij Bij`.
    pub fn frobenius(&self, other: &Mat3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.0[i][j] * other.0[i][j];
            }
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.frobenius(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }
}

/// A symmetric traceless 3×3 matrix in the orthonormal coefficient basis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TracelessSymTensor(pub [f64; 5]);

impl TracelessSymTensor {
    pub const ZERO: Self = TracelessSymTensor([0.0; 5]);

    pub fn new(c: [f64; 5]) -> Self {
        TracelessSymTensor(c)
    }

    /// The `i`-th basis element (0-based).
    pub fn basis(i: usize) -> Self {
        let mut c = [0.0; 5];
        c[i] = 1.0;
        TracelessSymTensor(c)
    }

    pub fn coeffs(&self) -> &[f64; 5] {
        &self.0
    }

    /// Symmetric traceless part of `m`, without the finiteness check.
    pub fn project(m: &Mat3) -> Self {
        let m = &m.0;
        TracelessSymTensor([
            (m[0][0] - m[1][1]) / S2,
            (2.0 * m[2][2] - m[0][0] - m[1][1]) * INV_S6,
            (m[0][1] + m[1][0]) / S2,
            (m[0][2] + m[2][0]) / S2,
            (m[1][2] + m[2][1]) / S2,
        ])
    }

    pub fn to_matrix(&self) -> Mat3 {
        let [c1, c2, c3, c4, c5] = self.0;
        let d = c2 * INV_S6;
        let (o3, o4, o5) = (c3 / S2, c4 / S2, c5 / S2);
        Mat3([
            [c1 / S2 - d, o3, o4],
            [o3, -c1 / S2 - d, o5],
            [o4, o5, c2 * TWO_INV_S6],
        ])
    }

    pub fn norm_sq(&self) -> f64 {
        frobenius_inner(self, self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }
}

/// `(M + Mᵀ)/2 − tr(M)/3 · I` in basis coefficients.
pub fn project_traceless_symmetric(m: &Mat3) -> Result<TracelessSymTensor> {
    if !m.is_finite() {
        return Err(Error::InvalidInput(format!(
            "matrix has non-finite entries: {m:?}"
        )));
    }
    Ok(TracelessSymTensor::project(m))
}

/// `A:B = tr(AB)`.
pub fn frobenius_inner(a: &TracelessSymTensor, b: &TracelessSymTensor) -> f64 {
    a.0.iter().zip(b.0.iter()).map(|(x, y)| x * y).sum()
}

/// `Q² − tr(Q²)/3 · I`.
pub fn traceless_square(q: &TracelessSymTensor) -> TracelessSymTensor {
    let m = q.to_matrix();
    TracelessSymTensor::project(&m.matmul(&m))
}

pub fn tr_q3(q: &TracelessSymTensor) -> f64 {
    let m = q.to_matrix();
    m.matmul(&m).frobenius(&m)
}

impl Add for TracelessSymTensor {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for TracelessSymTensor {
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Sub for TracelessSymTensor {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        self
    }
}

impl Neg for TracelessSymTensor {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl Mul<f64> for TracelessSymTensor {
    type Output = Self;
    fn mul(mut self, s: f64) -> Self {
        for a in &mut self.0 {
            *a *= s;
        }
        self
    }
}

impl Index<usize> for TracelessSymTensor {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for TracelessSymTensor {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}
