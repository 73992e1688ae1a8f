use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::vorticity::circulation_spectrum;
use crate::dynamics::{Dynamics, Trajectory};
use crate::error::{Error, Result};
use crate::spectral::{Spectral, SpectralField};

const SUBSTEPS: usize = 8;
const SPACING_LIMIT: f64 = 50.0;

/// Marker loop carried through a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopHistory {
    pub times: Vec<f64>,
    /// Unwrapped marker positions at each snapshot.
    pub positions: Vec<Vec<[f64; 3]>>,
    pub circulation: Vec<f64>,
    /// Largest over smallest marker spacing at each snapshot.
    pub spacing_ratio: Vec<f64>,
    /// Set when the spacing ratio grew more than fifty-fold.
    pub under_resolved: bool,
}

/// `m` equally spaced markers on a circle in the plane spanned by `e1`, `e2`.
pub fn circle_loop(m: usize, center: [f64; 3], radius: f64, e1: [f64; 3], e2: [f64; 3]) -> Vec<[f64; 3]> {
    (0..m)
        .map(|j| {
            let th = 2.0 * PI * j as f64 / m as f64;
            let (c, s) = (th.cos(), th.sin());
            std::array::from_fn(|i| center[i] + radius * (c * e1[i] + s * e2[i]))
        })
        .collect()
}

fn normalized_loop(loop0: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
    let mut pts = loop0.to_vec();
    if pts.len() >= 2 && pts.first() == pts.last() {
        pts.pop();
    }
    if pts.len() < 16 {
        return Err(Error::InvalidInput(format!(
            "a loop needs at least 16 markers, got {}",
            pts.len()
        )));
    }
    if pts.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("loop markers must be finite".into()));
    }
    Ok(pts)
}

/// Largest wavenumber band that holds all of the spectra, if narrower than the grid.
fn band_of(sp: &Spectral, spectra: &[&[Complex64]]) -> Option<usize> {
    let cut = sp.grid().dealias_cutoff();
    let scale = spectra
        .iter()
        .flat_map(|s| s.iter())
        .fold(0.0_f64, |m, z| m.max(z.norm()));
    let outside = spectra.iter().all(|s| {
        s.iter().enumerate().all(|(idx, z)| {
            sp.integer_wavevector(idx).iter().all(|k| k.unsigned_abs() as usize <= cut)
                || z.norm() <= 1e-14 * scale
        })
    });
    outside.then_some(cut)
}

/// Spectral derivative of periodic samples with respect to `θ ∈ [0, 2π)`.
fn periodic_derivative(samples: &[f64]) -> Vec<f64> {
    let m = samples.len();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    planner.plan_fft_forward(m).process(&mut buf);
    for (i, z) in buf.iter_mut().enumerate() {
        let k = if 2 * i < m {
            i as f64
        } else if 2 * i == m {
            0.0
        } else {
            i as f64 - m as f64
        };
        *z = Complex64::new(-k * z.im, k * z.re) / m as f64;
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    buf.into_iter().map(|z| z.re).collect()
}

fn spacing_ratio(pts: &[[f64; 3]]) -> f64 {
    let m = pts.len();
    let d: Vec<f64> = (0..m)
        .map(|j| {
            let (a, b) = (pts[j], pts[(j + 1) % m]);
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
        })
        .collect();
    let max = d.iter().cloned().fold(0.0, f64::max);
    let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

fn circulation_from_spectrum(sp: &Spectral, ch: &SpectralField<3>, pts: &[[f64; 3]]) -> f64 {
    let comps: Vec<&[Complex64]> = (0..3).map(|c| ch.comp(c)).collect();
    let band = band_of(sp, &comps);
    let vals = sp.evaluate_many(&comps, pts, band);
    let m = pts.len();
    let tangents: Vec<Vec<f64>> = (0..3)
        .map(|i| periodic_derivative(&pts.iter().map(|p| p[i]).collect::<Vec<_>>()))
        .collect();
    let terms: Vec<f64> = (0..m)
        .map(|j| (0..3).map(|i| vals[j][i] * tangents[i][j]).sum())
        .collect();
    crate::spectral::pairwise_sum(&terms) * 2.0 * PI / m as f64
}

/// `∮ C · dl` over a closed marker loop, by the spectral rule in the loop parameter.
pub fn loop_circulation(sp: &Spectral, state: &crate::dynamics::SpectralState, loop_pts: &[[f64; 3]]) -> Result<f64> {
    let pts = normalized_loop(loop_pts)?;
    Ok(circulation_from_spectrum(sp, &circulation_spectrum(sp, state), &pts))
}

/// Advects markers with the flow of a stored trajectory.
///
/// Between snapshots the velocity is the cubic Hermite interpolant built
/// from `v` and `∂t v` at both ends; markers take RK4 substeps in time.
pub fn advect_loop(dynamics: &Dynamics, traj: &Trajectory, loop0: &[[f64; 3]]) -> Result<LoopHistory> {
    let mut pts = normalized_loop(loop0)?;
    let sp = dynamics.spectral();
    let vel: Vec<SpectralField<3>> = traj.snapshots.iter().map(|s| sp.forward_field(&s.v)).collect();
    let acc: Vec<SpectralField<3>> = traj
        .snapshots
        .iter()
        .map(|s| dynamics.tendency(s).map(|t| sp.forward_field(&t.v)))
        .collect::<Result<_>>()?;

    let first_ratio = spacing_ratio(&pts);
    let mut hist = LoopHistory {
        times: vec![traj.snapshots[0].t],
        positions: vec![pts.clone()],
        circulation: vec![circulation_from_spectrum(
            sp,
            &circulation_spectrum(sp, &traj.snapshots[0]),
            &pts,
        )],
        spacing_ratio: vec![first_ratio],
        under_resolved: false,
    };

    for k in 0..traj.len().saturating_sub(1) {
        let (t0, t1) = (traj.snapshots[k].t, traj.snapshots[k + 1].t);
        let span = t1 - t0;
        let spectra: Vec<&[Complex64]> = (0..3)
            .flat_map(|c| [vel[k].comp(c), acc[k].comp(c), vel[k + 1].comp(c), acc[k + 1].comp(c)])
            .collect();
        let band = band_of(sp, &spectra);
        let velocity = |x: &[[f64; 3]], s: f64| -> Vec<[f64; 3]> {
            let (s2, s3) = (s * s, s * s * s);
            let w = [
                2.0 * s3 - 3.0 * s2 + 1.0,
                span * (s3 - 2.0 * s2 + s),
                -2.0 * s3 + 3.0 * s2,
                span * (s3 - s2),
            ];
            sp.evaluate_many(&spectra, x, band)
                .into_iter()
                .map(|v| std::array::from_fn(|c| (0..4).map(|i| w[i] * v[4 * c + i]).sum()))
                .collect()
        };
        let h = 1.0 / SUBSTEPS as f64;
        let shift = |x: &[[f64; 3]], d: &[[f64; 3]], a: f64| -> Vec<[f64; 3]> {
            x.iter()
                .zip(d)
                .map(|(p, v)| std::array::from_fn(|i| p[i] + a * v[i]))
                .collect()
        };
        for j in 0..SUBSTEPS {
            let s = j as f64 * h;
            let dt = h * span;
            let k1 = velocity(&pts, s);
            let k2 = velocity(&shift(&pts, &k1, dt / 2.0), s + h / 2.0);
            let k3 = velocity(&shift(&pts, &k2, dt / 2.0), s + h / 2.0);
            let k4 = velocity(&shift(&pts, &k3, dt), s + h);
            for (m, p) in pts.iter_mut().enumerate() {
                for i in 0..3 {
                    p[i] += dt / 6.0 * (k1[m][i] + 2.0 * k2[m][i] + 2.0 * k3[m][i] + k4[m][i]);
                }
            }
        }
        let ratio = spacing_ratio(&pts);
        if ratio > SPACING_LIMIT * first_ratio {
            hist.under_resolved = true;
        }
        hist.times.push(t1);
        hist.circulation.push(circulation_from_spectrum(
            sp,
            &circulation_spectrum(sp, &traj.snapshots[k + 1]),
            &pts,
        ));
        hist.positions.push(pts.clone());
        hist.spacing_ratio.push(ratio);
    }
    Ok(hist)
}
