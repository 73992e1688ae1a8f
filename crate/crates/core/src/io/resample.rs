//! Spectral restriction and prolongation between resolutions.
//!
//! Both operators keep exactly the modes with every `|k_axis| < M/2`, where
//! `M` is the coarser resolution, so they are adjoint in the torus `L²`
//! product and `prolong ∘ restrict` is the identity on that band.

use rustfft::num_complex::Complex64;

use crate::dynamics::SpectralState;
use crate::error::{Error, Result};
use crate::spectral::{Field, Grid, Spectral};

fn transfer(from: &Spectral, to: &Spectral, f: &[f64]) -> Vec<f64> {
    let (gf, gt) = (from.grid(), to.grid());
    let m = gf.n().min(gt.n()) as i64;
    let fh = from.forward(f);
    let mut out = vec![Complex64::new(0.0, 0.0); gt.len()];
    for (idx, z) in fh.iter().enumerate() {
        let k = from.integer_wavevector(idx);
        if k.iter().any(|k| 2 * k.abs() >= m) {
            continue;
        }
        let [ix, iy, iz] = [0, 1, 2].map(|a| gt.index_of_wavenumber(k[a]));
        let iz = if gt.dims() == 3 { iz } else { 0 };
        out[gt.ravel(ix, iy, iz)] = *z;
    }
    to.inverse(&out)
}

fn check_pair(from: Grid, to: Grid, coarsen: bool) -> Result<()> {
    if from.dims() != to.dims() {
        return Err(Error::GridMismatch(format!(
            "cannot resample between {}D and {}D grids",
            from.dims(),
            to.dims()
        )));
    }
    let ordered = if coarsen { to.n() < from.n() } else { to.n() > from.n() };
    if !ordered {
        let what = if coarsen { "restrict" } else { "prolong" };
        return Err(Error::InvalidInput(format!(
            "{what} from n = {} to n = {} violates the resolution ordering",
            from.n(),
            to.n()
        )));
    }
    Ok(())
}

fn map_field<const C: usize>(from: &Spectral, to: &Spectral, f: &Field<C>) -> Field<C> {
    let comps = std::array::from_fn(|c| transfer(from, to, f.comp(c)));
    Field::from_components(to.grid(), comps).expect("lengths match grid")
}

pub fn restrict_field<const C: usize>(f: &Field<C>, target: Grid) -> Result<Field<C>> {
    check_pair(f.grid(), target, true)?;
    Ok(map_field(&Spectral::new(f.grid()), &Spectral::new(target), f))
}

pub fn prolong_field<const C: usize>(f: &Field<C>, target: Grid) -> Result<Field<C>> {
    check_pair(f.grid(), target, false)?;
    Ok(map_field(&Spectral::new(f.grid()), &Spectral::new(target), f))
}

fn map_state(s: &SpectralState, target: Grid) -> SpectralState {
    let (from, to) = (Spectral::new(s.grid()), Spectral::new(target));
    SpectralState {
        t: s.t,
        v: map_field(&from, &to, &s.v),
        q: map_field(&from, &to, &s.q),
        p: map_field(&from, &to, &s.p),
        params: s.params,
    }
}

pub fn restrict_state(s: &SpectralState, target: Grid) -> Result<SpectralState> {
    check_pair(s.grid(), target, true)?;
    Ok(map_state(s, target))
}

pub fn prolong_state(s: &SpectralState, target: Grid) -> Result<SpectralState> {
    check_pair(s.grid(), target, false)?;
    Ok(map_state(s, target))
}

/// Restricts, prolongs or copies, whichever moves `s` onto `target`.
pub fn resample_state(s: &SpectralState, target: Grid) -> Result<SpectralState> {
    if s.grid() == target {
        return Ok(s.clone());
    }
    if s.grid().n() > target.n() {
        restrict_state(s, target)
    } else {
        prolong_state(s, target)
    }
}
