use rustfft::num_complex::Complex64;

use super::Grid;
use crate::error::{Error, Result};
use crate::tensor::TracelessSymTensor;

/// Real grid field with `C` components per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<const C: usize> {
    grid: Grid,
    comps: [Vec<f64>; C],
}

pub type ScalarField = Field<1>;
pub type VectorField = Field<3>;
/// Q-tensor field in the five-coefficient basis of [`crate::tensor`].
pub type QTensorField = Field<5>;

/// Fourier coefficients of a [`Field`], normalized so the zero mode is the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<const C: usize> {
    grid: Grid,
    comps: [Vec<Complex64>; C],
}

impl<const C: usize> Field<C> {
    pub fn zeros(grid: Grid) -> Self {
        let len = grid.len();
        Field {
            grid,
            comps: std::array::from_fn(|_| vec![0.0; len]),
        }
    }

    pub fn from_components(grid: Grid, comps: [Vec<f64>; C]) -> Result<Self> {
        if let Some(bad) = comps.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch(format!(
                "component of length {} on a grid of {} points",
                bad.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, comps })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> [f64; C]) -> Self {
        let mut out = Self::zeros(grid);
        for idx in 0..grid.len() {
            let vals = f(grid.point(idx));
            for (c, v) in vals.into_iter().enumerate() {
                out.comps[c][idx] = v;
            }
        }
        out
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<f64>; C] {
        &self.comps
    }

    pub fn into_components(self) -> [Vec<f64>; C] {
        self.comps
    }

    pub fn at(&self, idx: usize) -> [f64; C] {
        std::array::from_fn(|c| self.comps[c][idx])
    }

    pub fn set(&mut self, idx: usize, vals: [f64; C]) {
        for (c, v) in vals.into_iter().enumerate() {
            self.comps[c][idx] = v;
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (dst, src) in self.comps.iter_mut().zip(other.comps.iter()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += a * s;
            }
        }
    }

    pub fn scale(&mut self, a: f64) {
        for x in self.comps.iter_mut().flatten() {
            *x *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Largest absolute component value.
    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flatten()
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Largest pointwise Euclidean norm over the components.
    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.comps.iter().map(|c| c[i] * c[i]).sum::<f64>())
            .fold(0.0_f64, f64::max)
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|x| x.is_finite())
    }

    /// Pointwise sum of squares of the components.
    pub fn norm_sq_density(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.comps.iter().map(|c| c[i] * c[i]).sum())
            .collect()
    }

    /// Pointwise `Σ_c self_c · other_c`.
    pub fn dot_density(&self, other: &Self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| {
                self.comps
                    .iter()
                    .zip(other.comps.iter())
                    .map(|(a, b)| a[i] * b[i])
                    .sum()
            })
            .collect()
    }
}

impl QTensorField {
    pub fn tensor_at(&self, idx: usize) -> TracelessSymTensor {
        TracelessSymTensor(self.at(idx))
    }

    pub fn set_tensor(&mut self, idx: usize, t: TracelessSymTensor) {
        self.set(idx, t.0);
    }

    /// Largest `|tr M|` of the reconstructed matrices.
    pub fn max_trace(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.tensor_at(i).to_matrix().trace().abs())
            .fold(0.0, f64::max)
    }
}

impl<const C: usize> SpectralField<C> {
    pub fn zeros(grid: Grid) -> Self {
        let len = grid.len();
        SpectralField {
            grid,
            comps: std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); len]),
        }
    }

    pub fn from_components(grid: Grid, comps: [Vec<Complex64>; C]) -> Result<Self> {
        if let Some(bad) = comps.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch(format!(
                "spectral component of length {} on a grid of {} points",
                bad.len(),
                grid.len()
            )));
        }
        Ok(SpectralField { grid, comps })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn comp(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>; C] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [Vec<Complex64>; C] {
        &mut self.comps
    }

    pub fn into_components(self) -> [Vec<Complex64>; C] {
        self.comps
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flatten()
            .fold(0.0_f64, |m, z| m.max(z.norm()))
    }
}
