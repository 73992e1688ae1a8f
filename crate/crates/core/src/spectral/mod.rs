//! Periodic fields on the torus and their Fourier-space operators.
//!
//! Forward transforms divide by the number of grid points, so the zero mode
//! is the grid mean and Parseval reads `mean(f²) = Σ|f̂|²`. Multi-axis
//! transforms run one axis at a time on contiguous rows, rotating the layout
//! between passes; rows are independent so the result does not depend on
//! the number of worker threads. All reductions go through [`pairwise_sum`].

mod field;
mod grid;

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub use field::{Field, QTensorField, ScalarField, SpectralField, VectorField};
pub use grid::Grid;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const PAIRWISE_BLOCK: usize = 64;

/// Sum in a fixed pairwise order; bit-identical across runs and thread counts.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        let mut s = 0.0;
        for x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Transform plans and wavenumber tables for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    kd: Vec<f64>,
    kint: Vec<i64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.n();
        Spectral {
            grid,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            kd: (0..n).map(|i| grid.derivative_wavenumber(i)).collect(),
            kint: (0..n).map(|i| grid.wavenumber(i)).collect(),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Derivative wavenumber vector of a flat spectral index.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let [ix, iy, iz] = self.grid.unravel(idx);
        let kz = if self.grid.dims() == 3 { self.kd[iz] } else { 0.0 };
        [self.kd[ix], self.kd[iy], kz]
    }

    /// Integer wavenumbers of a flat spectral index (Nyquist as `n/2`).
    #[inline]
    pub fn integer_wavevector(&self, idx: usize) -> [i64; 3] {
        let [ix, iy, iz] = self.grid.unravel(idx);
        let kz = if self.grid.dims() == 3 { self.kint[iz] } else { 0 };
        [self.kint[ix], self.kint[iy], kz]
    }

    fn rotate(&self, src: &[Complex64], dst: &mut [Complex64]) {
        let n = self.grid.n();
        if self.grid.dims() == 2 {
            dst.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                for (j, out) in row.iter_mut().enumerate() {
                    *out = src[i + n * j];
                }
            });
        } else {
            let nn = n * n;
            dst.par_chunks_mut(n).enumerate().for_each(|(r, row)| {
                let (i, k) = (r / n, r % n);
                for (j, out) in row.iter_mut().enumerate() {
                    *out = src[i + n * j + nn * k];
                }
            });
        }
    }

    fn transform(&self, data: &mut Vec<Complex64>, inverse: bool) {
        let plan = if inverse { &self.inv } else { &self.fwd };
        let scratch_len = plan.get_inplace_scratch_len();
        let mut tmp = vec![ZERO; data.len()];
        for _ in self.grid.axes() {
            data.par_chunks_mut(self.grid.n()).for_each_init(
                || vec![ZERO; scratch_len],
                |scratch, row| plan.process_with_scratch(row, scratch),
            );
            self.rotate(data, &mut tmp);
            std::mem::swap(data, &mut tmp);
        }
    }

    /// Forward transform; panics if `f` does not live on this grid.
    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        assert_eq!(f.len(), self.grid.len(), "field does not match grid");
        let mut data: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform(&mut data, false);
        let scale = 1.0 / self.grid.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
        data
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse(&self, fh: &[Complex64]) -> Vec<f64> {
        assert_eq!(fh.len(), self.grid.len(), "spectrum does not match grid");
        let mut data = fh.to_vec();
        self.transform(&mut data, true);
        data.into_iter().map(|z| z.re).collect()
    }

    /// Checked forward transform.
    pub fn transform_forward(&self, f: &[f64]) -> Result<Vec<Complex64>> {
        self.check_len(f.len())?;
        Ok(self.forward(f))
    }

    /// Checked inverse transform.
    pub fn transform_inverse(&self, fh: &[Complex64]) -> Result<Vec<f64>> {
        self.check_len(fh.len())?;
        Ok(self.inverse(fh))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values for a {}^{} grid, got {len}",
                self.grid.len(),
                self.grid.n(),
                self.grid.dims()
            )));
        }
        Ok(())
    }

    fn check_grid(&self, grid: Grid) {
        assert_eq!(grid, self.grid, "field grid does not match transform grid");
    }

    pub fn forward_field<const C: usize>(&self, f: &Field<C>) -> SpectralField<C> {
        self.check_grid(f.grid());
        let comps = std::array::from_fn(|c| self.forward(f.comp(c)));
        SpectralField::from_components(self.grid, comps).expect("lengths checked")
    }

    pub fn inverse_field<const C: usize>(&self, fh: &SpectralField<C>) -> Field<C> {
        self.check_grid(fh.grid());
        let comps = std::array::from_fn(|c| self.inverse(fh.comp(c)));
        Field::from_components(self.grid, comps).expect("lengths checked")
    }

    /// Multiplies each mode by `i k_axis`. In 2D the z-derivative is zero.
    pub fn derivative_spectral(&self, fh: &[Complex64], axis: usize) -> Vec<Complex64> {
        if axis >= self.grid.dims() {
            return vec![ZERO; fh.len()];
        }
        fh.iter()
            .enumerate()
            .map(|(idx, &z)| {
                let k = self.wavevector(idx)[axis];
                Complex64::new(-k * z.im, k * z.re)
            })
            .collect()
    }

    pub fn derivative(&self, f: &[f64], axis: usize) -> Vec<f64> {
        if axis >= self.grid.dims() {
            return vec![0.0; f.len()];
        }
        self.inverse(&self.derivative_spectral(&self.forward(f), axis))
    }

    /// Physical gradient components from a spectrum; `z` is zero in 2D.
    pub fn gradient(&self, fh: &[Complex64]) -> [Vec<f64>; 3] {
        std::array::from_fn(|axis| {
            if axis < self.grid.dims() {
                self.inverse(&self.derivative_spectral(fh, axis))
            } else {
                vec![0.0; fh.len()]
            }
        })
    }

    pub fn laplacian_spectral(&self, fh: &[Complex64]) -> Vec<Complex64> {
        fh.iter()
            .enumerate()
            .map(|(idx, &z)| {
                let [kx, ky, kz] = self.wavevector(idx);
                z * -(kx * kx + ky * ky + kz * kz)
            })
            .collect()
    }

    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        self.inverse(&self.laplacian_spectral(&self.forward(f)))
    }

    /// True when the mode survives the two-thirds rule.
    #[inline]
    pub fn is_resolved(&self, idx: usize) -> bool {
        let n = self.grid.n() as i64;
        self.integer_wavevector(idx)
            .iter()
            .all(|k| 3 * k.abs() <= n)
    }

    /// Zeroes every mode with some `|k_axis| > n/3`.
    pub fn dealias(&self, fh: &mut [Complex64]) {
        for (idx, z) in fh.iter_mut().enumerate() {
            if !self.is_resolved(idx) {
                *z = ZERO;
            }
        }
    }

    pub fn dealias_field<const C: usize>(&self, fh: &mut SpectralField<C>) {
        for c in 0..C {
            self.dealias(fh.comp_mut(c));
        }
    }

    /// Transform of a pointwise product with the aliased modes removed.
    pub fn dealiased_forward(&self, f: &[f64]) -> Vec<Complex64> {
        let mut fh = self.forward(f);
        self.dealias(&mut fh);
        fh
    }

    /// Applies `I − kkᵀ/|k|²` to every nonzero mode; the mean is kept.
    pub fn leray(&self, vh: &mut SpectralField<3>) {
        self.check_grid(vh.grid());
        let [vx, vy, vz] = vh.components_mut();
        for idx in 0..self.grid.len() {
            let k = self.wavevector(idx);
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if k2 == 0.0 {
                continue;
            }
            let kv = (vx[idx] * k[0] + vy[idx] * k[1] + vz[idx] * k[2]) / k2;
            vx[idx] -= kv * k[0];
            vy[idx] -= kv * k[1];
            vz[idx] -= kv * k[2];
        }
    }

    pub fn leray_project(&self, v: &VectorField) -> VectorField {
        let mut vh = self.forward_field(v);
        self.leray(&mut vh);
        self.inverse_field(&vh)
    }

    /// Spectrum of `∇·v`.
    pub fn divergence_spectral(&self, vh: &SpectralField<3>) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.grid.len()];
        for axis in self.grid.axes() {
            for (o, d) in out
                .iter_mut()
                .zip(self.derivative_spectral(vh.comp(axis), axis))
            {
                *o += d;
            }
        }
        out
    }

    /// `(max_k |k·v̂(k)|, max_k |v̂(k)|)`.
    pub fn solenoidal_defect(&self, v: &VectorField) -> (f64, f64) {
        let vh = self.forward_field(v);
        let div = self.divergence_spectral(&vh);
        let max_div = div.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        (max_div, vh.max_abs())
    }

    pub fn curl_spectral(&self, vh: &SpectralField<3>) -> SpectralField<3> {
        let d = |c: usize, axis: usize| self.derivative_spectral(vh.comp(c), axis);
        let sub = |a: Vec<Complex64>, b: Vec<Complex64>| -> Vec<Complex64> {
            a.into_iter().zip(b).map(|(x, y)| x - y).collect()
        };
        let comps = [
            sub(d(2, 1), d(1, 2)),
            sub(d(0, 2), d(2, 0)),
            sub(d(1, 0), d(0, 1)),
        ];
        SpectralField::from_components(self.grid, comps).expect("lengths checked")
    }

    /// Rectangle-rule integral over the torus.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        assert_eq!(f.len(), self.grid.len(), "integrand does not match grid");
        pairwise_sum(f) * self.grid.cell_volume()
    }

    /// Exact trigonometric interpolation of several spectra at arbitrary points.
    ///
    /// Only modes with every `|k_axis| ≤ band` enter the sum; pass `None` for
    /// the full spectrum. The result is indexed `[point][component]`.
    pub fn evaluate_many(
        &self,
        spectra: &[&[Complex64]],
        pts: &[[f64; 3]],
        band: Option<usize>,
    ) -> Vec<Vec<f64>> {
        let n = self.grid.n();
        let dims = self.grid.dims();
        let band = band.unwrap_or(n / 2) as i64;
        let active: Vec<usize> = (0..n).filter(|&i| self.kint[i].abs() <= band).collect();
        let z_active: Vec<usize> = if dims == 3 { active.clone() } else { vec![0] };

        pts.par_iter()
            .map(|p| {
                let factors: Vec<Vec<Complex64>> = (0..dims)
                    .map(|a| {
                        let xi = p[a] + PI;
                        active
                            .iter()
                            .map(|&i| {
                                if i == n / 2 {
                                    Complex64::new((self.kint[i] as f64 * xi).cos(), 0.0)
                                } else {
                                    Complex64::from_polar(1.0, self.kint[i] as f64 * xi)
                                }
                            })
                            .collect()
                    })
                    .collect();
                let mut sums = vec![ZERO; spectra.len()];
                for (zi, &iz) in z_active.iter().enumerate() {
                    let ez = if dims == 3 {
                        factors[2][zi]
                    } else {
                        Complex64::new(1.0, 0.0)
                    };
                    for (yi, &iy) in active.iter().enumerate() {
                        let eyz = ez * factors[1][yi];
                        let row = n * (iy + n * iz);
                        for (s, spec) in sums.iter_mut().zip(spectra) {
                            let mut acc = ZERO;
                            for (xi, &ix) in active.iter().enumerate() {
                                acc += spec[row + ix] * factors[0][xi];
                            }
                            *s += acc * eyz;
                        }
                    }
                }
                sums.into_iter().map(|z| z.re).collect()
            })
            .collect()
    }

    pub fn evaluate_at_points(
        &self,
        fh: &[Complex64],
        pts: &[[f64; 3]],
        band: Option<usize>,
    ) -> Vec<f64> {
        self.evaluate_many(&[fh], pts, band)
            .into_iter()
            .map(|v| v[0])
            .collect()
    }

    /// Fraction of `Σ|f̂|²` carried by modes with `max_axis |k| > threshold`.
    pub fn tail_energy(&self, fh: &[Complex64], threshold: usize) -> (f64, f64) {
        let t = threshold as i64;
        let mut tail = Vec::with_capacity(fh.len());
        let mut total = Vec::with_capacity(fh.len());
        for (idx, z) in fh.iter().enumerate() {
            let e = z.norm_sqr();
            total.push(e);
            let kmax = self
                .integer_wavevector(idx)
                .iter()
                .map(|k| k.abs())
                .max()
                .unwrap_or(0);
            tail.push(if kmax > t { e } else { 0.0 });
        }
        (pairwise_sum(&tail), pairwise_sum(&total))
    }
}
