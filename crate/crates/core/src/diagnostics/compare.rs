use super::{cumulative_trapezoid, energy_breakdown};
use crate::dynamics::{SpectralState, Trajectory};
use crate::error::{Error, Result};
use crate::io::resample::{prolong_state, resample_state};
use crate::potential::{g_gradient, g_value};
use crate::spectral::{pairwise_sum, Grid, Spectral};
use crate::tensor::frobenius_inner;

fn check_same_grid(a: &SpectralState, b: &SpectralState) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch(format!(
            "relative energy needs one grid, got n = {} and n = {}",
            a.grid().n(),
            b.grid().n()
        )));
    }
    Ok(())
}

fn gradient_density(sp: &Spectral, a: &SpectralState, b: &SpectralState) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let len = sp.grid().len();
    let (mut aa, mut bb, mut ab) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    for c in 0..5 {
        let ga = sp.gradient(&sp.forward(a.q.comp(c)));
        let gb = sp.gradient(&sp.forward(b.q.comp(c)));
        for axis in 0..sp.grid().dims() {
            for x in 0..len {
                aa[x] += ga[axis][x] * ga[axis][x];
                bb[x] += gb[axis][x] * gb[axis][x];
                ab[x] += ga[axis][x] * gb[axis][x];
            }
        }
    }
    (aa, bb, ab)
}

/// `½∫(|v−ṽ|² + |P−P̃|² + |∇Q−∇Q̃|²) + ∫(G(Q) − ∂G(Q̃):(Q−Q̃) − G(Q̃))`.
pub fn relative_energy(sp: &Spectral, s: &SpectralState, tilde: &SpectralState) -> Result<f64> {
    check_same_grid(s, tilde)?;
    let len = sp.grid().len();
    let dv = s.v.sub(&tilde.v);
    let dp = s.p.sub(&tilde.p);
    let dq = s.q.sub(&tilde.q);
    let mut quad = dv.norm_sq_density();
    for (o, x) in quad.iter_mut().zip(dp.norm_sq_density()) {
        *o += x;
    }
    let mut grad = vec![0.0; len];
    for c in 0..5 {
        let g = sp.gradient(&sp.forward(dq.comp(c)));
        for axis in 0..sp.grid().dims() {
            for (o, x) in grad.iter_mut().zip(&g[axis]) {
                *o += x * x;
            }
        }
    }
    let gap: Vec<f64> = (0..len)
        .map(|x| {
            let (q, qt) = (s.q.tensor_at(x), tilde.q.tensor_at(x));
            g_value(&q, &s.params)
                - frobenius_inner(&g_gradient(&qt, &s.params), &(q - qt))
                - g_value(&qt, &s.params)
        })
        .collect();
    Ok(0.5 * sp.integrate(&quad) + 0.5 * sp.integrate(&grad) + sp.integrate(&gap))
}

/// The same functional written as `E(u) + E(ũ) − cross terms`.
pub fn relative_energy_expanded(sp: &Spectral, s: &SpectralState, tilde: &SpectralState) -> Result<f64> {
    check_same_grid(s, tilde)?;
    let len = sp.grid().len();
    let e = energy_breakdown(sp, s).e_total_g;
    let mut t_state = tilde.clone();
    t_state.params = s.params;
    let et = energy_breakdown(sp, &t_state).e_total_g;
    let (_, _, ab) = gradient_density(sp, s, tilde);
    let mut cross = s.v.dot_density(&tilde.v);
    for (o, (x, y)) in cross.iter_mut().zip(s.p.dot_density(&tilde.p).into_iter().zip(ab)) {
        *o += x + y;
    }
    let mut g_tilde = Vec::with_capacity(len);
    let mut linear = Vec::with_capacity(len);
    for x in 0..len {
        let (q, qt) = (s.q.tensor_at(x), tilde.q.tensor_at(x));
        g_tilde.push(g_value(&qt, &s.params));
        linear.push(frobenius_inner(&g_gradient(&qt, &s.params), &(q - qt)));
    }
    Ok(e + et - 2.0 * sp.integrate(&g_tilde) - sp.integrate(&cross) - sp.integrate(&linear))
}

/// Fraction of spectral energy above `n/4`, summed over all unknowns.
pub fn strong_resolution(sp: &Spectral, s: &SpectralState) -> f64 {
    let threshold = sp.grid().n() / 4;
    let (mut tail, mut total) = (Vec::new(), Vec::new());
    let fields = s
        .v
        .components()
        .iter()
        .chain(s.q.components().iter())
        .chain(s.p.components().iter());
    for f in fields {
        let (t, a) = sp.tail_energy(&sp.forward(f), threshold);
        tail.push(t);
        total.push(a);
    }
    let total = pairwise_sum(&total);
    if total == 0.0 {
        0.0
    } else {
        pairwise_sum(&tail) / total
    }
}

/// Options for [`gronwall_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GronwallOptions {
    /// Fixed constant `c`; fitted from the series when absent.
    pub constant: Option<f64>,
    /// Largest tolerated spectral tail of the strong trajectory.
    pub tail_limit: f64,
}

impl Default for GronwallOptions {
    fn default() -> Self {
        GronwallOptions {
            constant: None,
            tail_limit: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelativeEnergySeries {
    pub times: Vec<f64>,
    pub relative_energy: Vec<f64>,
    pub envelope: Vec<f64>,
    /// `1 + ‖∇ṽ‖∞ + ‖∇P̃‖∞ + ‖ΔQ̃‖∞ + ‖∇∂G(Q̃)‖∞`.
    pub lipschitz: Vec<f64>,
    pub constant: f64,
    /// Energy of the strong solution at `t = 0`.
    pub strong_energy: f64,
    pub max_tail: f64,
    pub pass: bool,
}

fn max_abs_gradient(sp: &Spectral, comps: &[Vec<f64>]) -> f64 {
    comps
        .iter()
        .flat_map(|c| sp.gradient(&sp.forward(c)))
        .flatten()
        .fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn lipschitz_norm(sp: &Spectral, s: &SpectralState) -> f64 {
    let len = sp.grid().len();
    let lap_q = s
        .q
        .components()
        .iter()
        .flat_map(|c| sp.laplacian(c))
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut dg: Vec<Vec<f64>> = vec![vec![0.0; len]; 5];
    for x in 0..len {
        let g = g_gradient(&s.q.tensor_at(x), &s.params);
        for (c, col) in dg.iter_mut().enumerate() {
            col[x] = g[c];
        }
    }
    1.0 + max_abs_gradient(sp, s.v.components())
        + max_abs_gradient(sp, s.p.components())
        + lap_q
        + max_abs_gradient(sp, &dg)
}

fn check_times(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "trajectories have {} and {} snapshots",
            a.len(),
            b.len()
        )));
    }
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        if (x.t - y.t).abs() > 1e-12 * (1.0 + x.t.abs()) {
            return Err(Error::InvalidInput(format!(
                "snapshot times differ: {} vs {}",
                x.t, y.t
            )));
        }
    }
    Ok(())
}

fn comparison_grid(a: &Trajectory, b: &Trajectory) -> Result<Grid> {
    let (ga, gb) = (a.grid(), b.grid());
    if ga.dims() != gb.dims() {
        return Err(Error::GridMismatch("trajectories differ in dimension".into()));
    }
    Ok(if ga.n() >= gb.n() { ga } else { gb })
}

/// Relative energy of a candidate trajectory with respect to a resolved one,
/// against the envelope `ℰ(0)·exp(c∫L)`.
///
/// Both runs are compared on the finer grid. With a fitted constant the
/// envelope is the tightest exponential through the series; a zero initial
/// relative energy gives a zero envelope and the check passes when the
/// series stays below `1e-12·E(0)`.
pub fn gronwall_check(
    candidate: &Trajectory,
    strong: &Trajectory,
    opts: &GronwallOptions,
) -> Result<RelativeEnergySeries> {
    check_times(candidate, strong)?;
    let sp_strong = Spectral::new(strong.grid());
    let max_tail = strong
        .snapshots
        .iter()
        .map(|s| strong_resolution(&sp_strong, s))
        .fold(0.0_f64, f64::max);
    if max_tail > opts.tail_limit {
        return Err(Error::Unresolved(format!(
            "spectral energy above n/4 reaches {max_tail:e} of the total (limit {:e})",
            opts.tail_limit
        )));
    }
    let grid = comparison_grid(candidate, strong)?;
    let sp = Spectral::new(grid);
    let mut rel = Vec::with_capacity(strong.len());
    let mut lip = Vec::with_capacity(strong.len());
    for (c, s) in candidate.snapshots.iter().zip(&strong.snapshots) {
        let c = resample_state(c, grid)?;
        let s = resample_state(s, grid)?;
        rel.push(relative_energy(&sp, &c, &s)?);
        lip.push(lipschitz_norm(&sp, &s));
    }
    let times = strong.times();
    let int_l = cumulative_trapezoid(&times, &lip);
    let e0 = rel[0];
    let strong_energy = energy_breakdown(&sp_strong, &strong.snapshots[0]).e_total_g;
    let constant = match opts.constant {
        Some(c) => c,
        None if e0 > 0.0 => (1..rel.len())
            .filter(|&k| int_l[k] > 0.0 && rel[k] > 0.0)
            .map(|k| (rel[k] / e0).ln() / int_l[k])
            .fold(0.0_f64, f64::max),
        None => 0.0,
    };
    let envelope: Vec<f64> = int_l.iter().map(|l| e0 * (constant * l).exp()).collect();
    let floor = 1e-12 * strong_energy.abs();
    let pass = rel
        .iter()
        .zip(&envelope)
        .all(|(r, e)| *r <= e * (1.0 + 1e-12) + floor);
    Ok(RelativeEnergySeries {
        times,
        relative_energy: rel,
        envelope,
        lipschitz: lip,
        constant,
        strong_energy,
        max_tail,
        pass,
    })
}

/// Defect-measure estimates of a coarse run against a finer reference.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    pub times: Vec<f64>,
    /// `∫ Σ|v_iv_j − ṽ_iṽ_j| + Σ|S_ij − S̃_ij|`.
    pub r1: Vec<f64>,
    /// `∫ Σ|v_i P_a − ṽ_i P̃_a|` in basis coefficients.
    pub r2: Vec<f64>,
    /// `|(E_c(t) − E_f(t)) − (E_c(0) − E_f(0))|`.
    pub dissipation: Vec<f64>,
    /// `(E_c(t) − E_f(t)) − (E_c(0) − E_f(0))`, with sign.
    pub energy_gap: Vec<f64>,
    /// Smallest `c` with `∫₀ᵗ(‖R¹‖ + ‖R²‖) ≤ c ∫₀ᵗ D` at every snapshot.
    pub ddi_constant: f64,
}

fn stress_entries(sp: &Spectral, s: &SpectralState) -> Vec<Vec<f64>> {
    let s3 = crate::dynamics::stress_tensor(sp, &s.q);
    let mut out = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            out.push(s3[i][j].clone());
        }
    }
    out
}

fn defect_densities(sp: &Spectral, a: &SpectralState, b: &SpectralState) -> (f64, f64) {
    let len = sp.grid().len();
    let mut r1 = vec![0.0; len];
    for i in 0..3 {
        for j in 0..3 {
            let (ai, aj, bi, bj) = (a.v.comp(i), a.v.comp(j), b.v.comp(i), b.v.comp(j));
            for x in 0..len {
                r1[x] += (ai[x] * aj[x] - bi[x] * bj[x]).abs();
            }
        }
    }
    let (sa, sb) = (stress_entries(sp, a), stress_entries(sp, b));
    for (ea, eb) in sa.iter().zip(&sb) {
        for x in 0..len {
            r1[x] += (ea[x] - eb[x]).abs();
        }
    }
    let mut r2 = vec![0.0; len];
    for i in 0..3 {
        for c in 0..5 {
            let (ai, ac, bi, bc) = (a.v.comp(i), a.p.comp(c), b.v.comp(i), b.p.comp(c));
            for x in 0..len {
                r2[x] += (ai[x] * ac[x] - bi[x] * bc[x]).abs();
            }
        }
    }
    (sp.integrate(&r1), sp.integrate(&r2))
}

/// Estimates `‖R¹‖`, `‖R²‖` and `D(t)` treating `fine` as the limit of `coarse`.
///
/// Both runs must share snapshot times, and the coarse initial state must
/// be the restriction of the fine one. Coarse snapshots are prolonged to
/// the fine grid before comparison.
pub fn defect_estimate(coarse: &Trajectory, fine: &Trajectory) -> Result<DefectReport> {
    check_times(coarse, fine)?;
    let grid = comparison_grid(coarse, fine)?;
    if coarse.grid().n() > fine.grid().n() {
        return Err(Error::InvalidInput(
            "the reference trajectory must be at least as fine as the coarse one".into(),
        ));
    }
    let lift = |s: &SpectralState| -> Result<SpectralState> {
        if s.grid() == grid {
            Ok(s.clone())
        } else {
            prolong_state(s, grid)
        }
    };
    let c0 = lift(&coarse.snapshots[0])?;
    let f0 = resample_state(&resample_state(&fine.snapshots[0], coarse.grid())?, grid)?;
    let scale = f0.v.max_abs() + f0.q.max_abs() + f0.p.max_abs();
    let mismatch = c0.v.sub(&f0.v).max_abs() + c0.q.sub(&f0.q).max_abs() + c0.p.sub(&f0.p).max_abs();
    if mismatch > 1e-10 * (1.0 + scale) {
        return Err(Error::InvalidInput(format!(
            "initial data differ by {mismatch:e} after restriction"
        )));
    }

    let sp = Spectral::new(grid);
    let sp_c = Spectral::new(coarse.grid());
    let sp_f = Spectral::new(fine.grid());
    let mut r1 = Vec::new();
    let mut r2 = Vec::new();
    let mut gap = Vec::new();
    for (c, f) in coarse.snapshots.iter().zip(&fine.snapshots) {
        let (a, b) = defect_densities(&sp, &lift(c)?, f);
        r1.push(a);
        r2.push(b);
        let ec = energy_breakdown(&sp_c, c).e_total_g;
        let ef = energy_breakdown(&sp_f, f).e_total_g;
        gap.push(ec - ef);
    }
    let energy_gap: Vec<f64> = gap.iter().map(|g| g - gap[0]).collect();
    let dissipation: Vec<f64> = energy_gap.iter().map(|g| g.abs()).collect();

    let times = fine.times();
    let defects: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| a + b).collect();
    let int_r = cumulative_trapezoid(&times, &defects);
    let int_d = cumulative_trapezoid(&times, &dissipation);
    let mut ddi: f64 = 0.0;
    for k in 1..times.len() {
        if int_r[k] > 0.0 {
            ddi = ddi.max(if int_d[k] > 0.0 { int_r[k] / int_d[k] } else { f64::INFINITY });
        }
    }
    Ok(DefectReport {
        times,
        r1,
        r2,
        dissipation,
        energy_gap,
        ddi_constant: ddi,
    })
}
