use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform periodic grid on the torus `[-π, π]^dims`.
///
/// With `dims == 2` fields are independent of `z` but keep all of their
/// vector and tensor components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    n: usize,
    dims: usize,
}

impl Grid {
    pub fn new(n: usize, dims: usize) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "grid resolution must be even and at least 8, got {n}"
            )));
        }
        if dims != 2 && dims != 3 {
            return Err(Error::InvalidInput(format!(
                "grid dims must be 2 or 3, got {dims}"
            )));
        }
        Ok(Grid { n, dims })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Total number of grid points, `n^dims`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(2π)^dims`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dims as i32)
    }

    /// Rectangle-rule weight of one grid point.
    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.len() as f64
    }

    /// Two-thirds-rule cutoff: modes with any `|k_axis| > n/3` are removed.
    pub fn dealias_cutoff(&self) -> usize {
        self.n / 3
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -PI + 2.0 * PI * i as f64 / self.n as f64
    }

    /// Axis indices `[ix, iy, iz]` of a flat index (x fastest).
    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        let iz = if self.dims == 3 { idx / (n * n) } else { 0 };
        [idx % n, (idx / n) % n, iz]
    }

    #[inline]
    pub fn ravel(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n * (iy + self.n * iz)
    }

    /// Physical coordinates of a flat index; `z = 0` in 2D.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let [ix, iy, iz] = self.unravel(idx);
        let z = if self.dims == 3 { self.coordinate(iz) } else { 0.0 };
        [self.coordinate(ix), self.coordinate(iy), z]
    }

    /// Signed integer wavenumber of an axis index; the Nyquist index maps to `n/2`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i <= n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Wavenumber used by derivative operators: the Nyquist mode has no
    /// conjugate partner on the grid and is differentiated to zero.
    #[inline]
    pub fn derivative_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i) as f64
        }
    }

    /// Axis index holding wavenumber `k`.
    pub fn index_of_wavenumber(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Number of active axes as a slice bound.
    pub fn axes(&self) -> std::ops::Range<usize> {
        0..self.dims
    }
}
