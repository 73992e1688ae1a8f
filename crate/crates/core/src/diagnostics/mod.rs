//! Conserved and monitored quantities of the inviscid system.
//!
//! All integrals use the rectangle rule on the grid, evaluated with
//! [`pairwise_sum`](crate::spectral::pairwise_sum), and all time integrals
//! use the trapezoid rule on the snapshot times.

mod compare;
mod loops;
mod vorticity;
mod weak;

pub use compare::{
    defect_estimate, gronwall_check, relative_energy, relative_energy_expanded,
    strong_resolution, DefectReport, GronwallOptions, RelativeEnergySeries,
};
pub use loops::{advect_loop, circle_loop, loop_circulation, LoopHistory};
pub use vorticity::{
    extended_circulation_field, extended_vorticity, helicity, mean_circulation, vorticity_divergence,
    vorticity_residual,
};
pub use weak::{weak_residuals, WeakResiduals};

use crate::dynamics::{SpectralState, Trajectory};
use crate::error::{Error, Result};
use crate::potential::{bulk_value, g_value};
use crate::spectral::{QTensorField, Spectral};
use crate::tensor::frobenius_inner;

/// Per-snapshot energies and monitors; one CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub e_kin: f64,
    pub e_p: f64,
    pub e_elastic: f64,
    pub e_bulk_f: f64,
    pub e_bulk_g: f64,
    pub e_total_f: f64,
    pub e_total_g: f64,
    pub balance_residual: Option<f64>,
    pub helicity: Option<f64>,
    /// `max_k |k·v̂(k)|`.
    pub max_div_v: Option<f64>,
    /// Largest `|tr|` of the reconstructed `Q` and `P` matrices.
    pub max_trace_q: Option<f64>,
    pub loop_circulation: Option<f64>,
    pub vort_res_plus: Option<f64>,
    pub vort_res_minus: Option<f64>,
}

/// `½∫|∇Q|²` with spectral derivatives.
pub fn elastic_energy(sp: &Spectral, q: &QTensorField) -> f64 {
    let mut density = vec![0.0; sp.grid().len()];
    for a in 0..5 {
        let grad = sp.gradient(&sp.forward(q.comp(a)));
        for g in grad.iter().take(sp.grid().dims()) {
            for (d, x) in density.iter_mut().zip(g) {
                *d += x * x;
            }
        }
    }
    0.5 * sp.integrate(&density)
}

/// Energy part of a [`DiagnosticsRecord`]; the monitor fields are left empty.
pub fn energy_breakdown(sp: &Spectral, state: &SpectralState) -> DiagnosticsRecord {
    let e_kin = 0.5 * sp.integrate(&state.v.norm_sq_density());
    let e_p = 0.5 * sp.integrate(&state.p.norm_sq_density());
    let e_elastic = elastic_energy(sp, &state.q);
    let len = state.grid().len();
    let (mut f, mut g) = (Vec::with_capacity(len), Vec::with_capacity(len));
    for x in 0..len {
        let q = state.q.tensor_at(x);
        f.push(bulk_value(&q, &state.params));
        g.push(g_value(&q, &state.params));
    }
    let e_bulk_f = sp.integrate(&f);
    let e_bulk_g = sp.integrate(&g);
    DiagnosticsRecord {
        t: state.t,
        e_kin,
        e_p,
        e_elastic,
        e_bulk_f,
        e_bulk_g,
        e_total_f: e_kin + e_p + e_elastic + e_bulk_f,
        e_total_g: e_kin + e_p + e_elastic + e_bulk_g,
        balance_residual: None,
        helicity: None,
        max_div_v: None,
        max_trace_q: None,
        loop_circulation: None,
        vort_res_plus: None,
        vort_res_minus: None,
    }
}

/// Cumulative trapezoid integral of samples `f` at times `t`.
pub fn cumulative_trapezoid(t: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..f.len() {
        acc += 0.5 * (t[k] - t[k - 1]) * (f[k] + f[k - 1]);
        out.push(acc);
    }
    out
}

/// Energy balance along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceSeries {
    pub times: Vec<f64>,
    /// `E_G(t) − E_G(0) − 2Λ ∫₀ᵗ∫ Q:P`.
    pub residual_g: Vec<f64>,
    /// `ℰ_F(t) − ℰ_F(0)`.
    pub residual_f: Vec<f64>,
    /// `2Λ ∫ Q:P` at each snapshot.
    pub source: Vec<f64>,
    pub energy_g: Vec<f64>,
    pub energy_f: Vec<f64>,
}

pub fn energy_balance_residual(traj: &Trajectory) -> Result<BalanceSeries> {
    if traj.len() < 2 {
        return Err(Error::InvalidInput(
            "energy balance needs at least two snapshots".into(),
        ));
    }
    if traj.uniform_spacing().is_none() && traj.len() > 2 {
        // the last interval may be shorter; anything else is refused
        let t = traj.times();
        let h = t[1] - t[0];
        let irregular = t[..t.len() - 1]
            .windows(2)
            .any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h);
        if irregular {
            return Err(Error::InvalidInput("snapshots are not uniformly spaced".into()));
        }
    }
    let sp = Spectral::new(traj.grid());
    let times = traj.times();
    let mut energy_g = Vec::new();
    let mut energy_f = Vec::new();
    let mut source = Vec::new();
    for s in &traj.snapshots {
        let rec = energy_breakdown(&sp, s);
        energy_g.push(rec.e_total_g);
        energy_f.push(rec.e_total_f);
        let qp: Vec<f64> = (0..s.grid().len())
            .map(|x| frobenius_inner(&s.q.tensor_at(x), &s.p.tensor_at(x)))
            .collect();
        source.push(2.0 * s.params.lambda * sp.integrate(&qp));
    }
    let integral = cumulative_trapezoid(&times, &source);
    let residual_g = (0..times.len())
        .map(|k| energy_g[k] - energy_g[0] - integral[k])
        .collect();
    let residual_f = energy_f.iter().map(|e| e - energy_f[0]).collect();
    Ok(BalanceSeries {
        times,
        residual_g,
        residual_f,
        source,
        energy_g,
        energy_f,
    })
}

/// Options for [`trajectory_records`].
#[derive(Debug, Clone, Default)]
pub struct RecordOptions {
    /// Initial loop for the circulation column.
    pub loop_markers: Option<Vec<[f64; 3]>>,
}

/// Full diagnostics rows for a trajectory, one per snapshot.
///
/// Columns that need more snapshots than are available stay empty.
pub fn trajectory_records(
    dynamics: &crate::dynamics::Dynamics,
    traj: &Trajectory,
    opts: &RecordOptions,
) -> Result<(Vec<DiagnosticsRecord>, Option<LoopHistory>)> {
    let sp = dynamics.spectral();
    let mut records: Vec<DiagnosticsRecord> = traj
        .snapshots
        .iter()
        .map(|s| {
            let mut r = energy_breakdown(sp, s);
            let (div, _) = sp.solenoidal_defect(&s.v);
            r.max_div_v = Some(div);
            r.max_trace_q = Some(s.q.max_trace().max(s.p.max_trace()));
            r.helicity = Some(helicity(sp, s));
            r
        })
        .collect();
    if traj.len() >= 2 {
        let bal = energy_balance_residual(traj)?;
        for (r, x) in records.iter_mut().zip(bal.residual_g) {
            r.balance_residual = Some(x);
        }
    } else {
        records[0].balance_residual = Some(0.0);
    }
    if traj.len() >= 3 {
        let plus = vorticity_residual(sp, traj, 1.0)?;
        let minus = vorticity_residual(sp, traj, -1.0)?;
        for (k, r) in records.iter_mut().enumerate() {
            r.vort_res_plus = plus[k];
            r.vort_res_minus = minus[k];
        }
    }
    let history = match &opts.loop_markers {
        Some(markers) => {
            let h = advect_loop(dynamics, traj, markers)?;
            for (r, c) in records.iter_mut().zip(&h.circulation) {
                r.loop_circulation = Some(*c);
            }
            Some(h)
        }
        None => None,
    };
    Ok((records, history))
}
