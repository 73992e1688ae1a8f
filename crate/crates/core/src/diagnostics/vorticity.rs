use crate::dynamics::{SpectralState, Trajectory};
use crate::error::{Error, Result};
use crate::spectral::{pairwise_sum, Spectral, SpectralField, VectorField};

/// Spectrum of `C = v + P_ij ∇Q_ij`, with the product dealiased.
pub(crate) fn circulation_spectrum(sp: &Spectral, s: &SpectralState) -> SpectralField<3> {
    let grid = sp.grid();
    let mut ch = sp.forward_field(&s.v);
    let mut prod: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; grid.len()]);
    for a in 0..5 {
        let grad = sp.gradient(&sp.forward(s.q.comp(a)));
        let p = s.p.comp(a);
        for (c, g) in grad.iter().enumerate().take(grid.dims()) {
            for ((o, pi), gi) in prod[c].iter_mut().zip(p).zip(g) {
                *o += pi * gi;
            }
        }
    }
    for (c, f) in prod.iter().enumerate() {
        for (o, z) in ch.comp_mut(c).iter_mut().zip(sp.dealiased_forward(f)) {
            *o += z;
        }
    }
    ch
}

pub fn extended_circulation_field(sp: &Spectral, s: &SpectralState) -> VectorField {
    sp.inverse_field(&circulation_spectrum(sp, s))
}

/// `ω̄ = ∇ × C`.
pub fn extended_vorticity(sp: &Spectral, s: &SpectralState) -> VectorField {
    sp.inverse_field(&sp.curl_spectral(&circulation_spectrum(sp, s)))
}

/// `∫ C · ω̄`.
pub fn helicity(sp: &Spectral, s: &SpectralState) -> f64 {
    let ch = circulation_spectrum(sp, s);
    let c = sp.inverse_field(&ch);
    let w = sp.inverse_field(&sp.curl_spectral(&ch));
    sp.integrate(&c.dot_density(&w))
}

/// `L²` norm of `∂tω̄ + sign·∇×(v×ω̄)` at each snapshot.
///
/// The time derivative is a central difference, so the two end snapshots
/// have no value.
pub fn vorticity_residual(sp: &Spectral, traj: &Trajectory, sign: f64) -> Result<Vec<Option<f64>>> {
    if traj.len() < 3 {
        return Err(Error::InvalidInput(
            "vorticity residual needs at least three snapshots".into(),
        ));
    }
    let grid = sp.grid();
    let omegas: Vec<VectorField> = traj
        .snapshots
        .iter()
        .map(|s| extended_vorticity(sp, s))
        .collect();
    let mut out = vec![None; traj.len()];
    for k in 1..traj.len() - 1 {
        let s = &traj.snapshots[k];
        let dt = traj.snapshots[k + 1].t - traj.snapshots[k - 1].t;
        let mut res = omegas[k + 1].sub(&omegas[k - 1]).scaled(1.0 / dt);

        let (v, w) = (&s.v, &omegas[k]);
        let cross = |i: usize, j: usize| -> Vec<f64> {
            (0..grid.len())
                .map(|x| v.comp(i)[x] * w.comp(j)[x] - v.comp(j)[x] * w.comp(i)[x])
                .collect()
        };
        let vxw = [cross(1, 2), cross(2, 0), cross(0, 1)];
        let vxw_h = SpectralField::from_components(grid, vxw.map(|f| sp.dealiased_forward(&f)))
            .expect("lengths match grid");
        let curl = sp.inverse_field(&sp.curl_spectral(&vxw_h));
        res.axpy(sign, &curl);
        out[k] = Some(sp.integrate(&res.norm_sq_density()).sqrt());
    }
    Ok(out)
}

/// `max |∇·ω̄|` relative to `max |ω̄|`; zero up to roundoff.
pub fn vorticity_divergence(sp: &Spectral, s: &SpectralState) -> f64 {
    let w = extended_vorticity(sp, s);
    let (div, wmax) = sp.solenoidal_defect(&w);
    if wmax == 0.0 {
        0.0
    } else {
        div / wmax
    }
}

/// Mean of the extended circulation field.
pub fn mean_circulation(sp: &Spectral, s: &SpectralState) -> [f64; 3] {
    let c = extended_circulation_field(sp, s);
    std::array::from_fn(|i| pairwise_sum(c.comp(i)) / sp.grid().len() as f64)
}
