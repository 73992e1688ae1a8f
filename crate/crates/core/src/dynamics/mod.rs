//! Right-hand side of the inviscid system and explicit time stepping.
//!
//! ```text
//! v̇ = Leray(−(v·∇)v − ∇·S),   S_ij = ∂_iQ : ∂_jQ
//! Q̇ = P − (v·∇)Q
//! Ṗ = −(v·∇)P + ΔQ − ∂F(Q)
//! ```
//!
//! Every quadratic product is formed pointwise and dealiased with the
//! two-thirds rule. The bulk term `∂F(Q)` is dealiased only on request.

mod mms;
mod run;

use std::sync::Arc;

use rustfft::num_complex::Complex64;

pub use mms::ManufacturedSolution;
pub use run::{run, Outcome, RunSettings, Trajectory};

use crate::error::{Error, Result};
use crate::potential::{bulk_gradient, lambda_multiplier, PotentialParams};
use crate::spectral::{
    Field, Grid, QTensorField, ScalarField, Spectral, SpectralField, VectorField,
};
use crate::tensor::TracelessSymTensor;

/// Full simulation state at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub t: f64,
    pub v: VectorField,
    pub q: QTensorField,
    pub p: QTensorField,
    pub params: PotentialParams,
}

impl SpectralState {
    pub fn zeros(grid: Grid, params: PotentialParams) -> Self {
        SpectralState {
            t: 0.0,
            v: VectorField::zeros(grid),
            q: QTensorField::zeros(grid),
            p: QTensorField::zeros(grid),
            params,
        }
    }

    pub fn grid(&self) -> Grid {
        self.v.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.q.is_finite() && self.p.is_finite()
    }

    fn check_grids(&self) -> Result<()> {
        if self.q.grid() != self.v.grid() || self.p.grid() != self.v.grid() {
            return Err(Error::Contract("v, Q and P live on different grids".into()));
        }
        Ok(())
    }

    /// `self + h·k`, with time advanced by `h`.
    pub fn advanced(&self, k: &Tendency, h: f64) -> SpectralState {
        let mut out = self.clone();
        out.v.axpy(h, &k.v);
        out.q.axpy(h, &k.q);
        out.p.axpy(h, &k.p);
        out.t += h;
        out
    }
}

/// Time derivatives of `(v, Q, P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tendency {
    pub v: VectorField,
    pub q: QTensorField,
    pub p: QTensorField,
}

impl Tendency {
    pub fn zeros(grid: Grid) -> Self {
        Tendency {
            v: VectorField::zeros(grid),
            q: QTensorField::zeros(grid),
            p: QTensorField::zeros(grid),
        }
    }

    pub fn axpy(&mut self, a: f64, other: &Tendency) {
        self.v.axpy(a, &other.v);
        self.q.axpy(a, &other.q);
        self.p.axpy(a, &other.p);
    }
}

/// Tendencies together with the two eliminated multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsBundle {
    pub v_dot: VectorField,
    pub q_dot: QTensorField,
    pub p_dot: QTensorField,
    /// `λ = −(b/3)|Q|²`.
    pub lambda_field: ScalarField,
    /// Zero-mean pressure.
    pub pressure: ScalarField,
}

/// Additive source for manufactured-solution tests.
pub trait Forcing: Send + Sync {
    fn at(&self, t: f64) -> Result<Tendency>;
}

/// Sup norms gathered while assembling a tendency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageNorms {
    pub max_v: f64,
    pub max_grad_q: f64,
}

/// `S_ij = ∂_iQ : ∂_jQ` as row-major 3×3 entries; dealiased.
pub fn stress_tensor(sp: &Spectral, q: &QTensorField) -> [[Vec<f64>; 3]; 3] {
    let qh = sp.forward_field(q);
    let dq: Vec<[Vec<f64>; 3]> = (0..5).map(|a| sp.gradient(qh.comp(a))).collect();
    let len = sp.grid().len();
    let mut s: [[Vec<f64>; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; len]));
    for i in 0..3 {
        for j in i..3 {
            let raw: Vec<f64> = (0..len)
                .map(|x| dq.iter().map(|g| g[i][x] * g[j][x]).sum())
                .collect();
            let smooth = sp.inverse(&sp.dealiased_forward(&raw));
            s[j][i].clone_from(&smooth);
            s[i][j] = smooth;
        }
    }
    s
}

/// Solver context: transforms, options and optional forcing.
#[derive(Clone)]
pub struct Dynamics {
    sp: Spectral,
    pub dealias_potential: bool,
    pub blowup_cap: f64,
    forcing: Option<Arc<dyn Forcing>>,
}

impl std::fmt::Debug for Dynamics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dynamics")
            .field("grid", &self.sp.grid())
            .field("dealias_potential", &self.dealias_potential)
            .field("blowup_cap", &self.blowup_cap)
            .field("forced", &self.forcing.is_some())
            .finish()
    }
}

struct Assembled {
    tendency: Tendency,
    norms: StageNorms,
    /// Spectrum of `(v·∇)v + ∇·S` before projection.
    momentum_source: SpectralField<3>,
}

impl Dynamics {
    pub fn new(grid: Grid) -> Self {
        Dynamics {
            sp: Spectral::new(grid),
            dealias_potential: false,
            blowup_cap: 1e6,
            forcing: None,
        }
    }

    pub fn with_forcing(mut self, forcing: Arc<dyn Forcing>) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn without_forcing(&self) -> Self {
        Dynamics {
            forcing: None,
            ..self.clone()
        }
    }

    pub fn spectral(&self) -> &Spectral {
        &self.sp
    }

    pub fn grid(&self) -> Grid {
        self.sp.grid()
    }

    fn check(&self, state: &SpectralState) -> Result<()> {
        state.check_grids()?;
        if state.grid() != self.grid() {
            return Err(Error::GridMismatch(format!(
                "state on {}^{} grid, solver on {}^{}",
                state.grid().n(),
                state.grid().dims(),
                self.grid().n(),
                self.grid().dims()
            )));
        }
        Ok(())
    }

    fn assemble(&self, state: &SpectralState) -> Result<Assembled> {
        self.check(state)?;
        let sp = &self.sp;
        let grid = self.grid();
        let len = grid.len();
        let dims = grid.dims();

        let vh = sp.forward_field(&state.v);
        let (div, vmax) = {
            let d = sp.divergence_spectral(&vh);
            (d.iter().fold(0.0_f64, |m, z| m.max(z.norm())), vh.max_abs())
        };
        let qh = sp.forward_field(&state.q);
        let ph = sp.forward_field(&state.p);
        // velocity roundoff is inherited from the stress, bounded through the energy by |∇Q|² + |P|²
        let q_scale = qh.max_abs() * grid.dealias_cutoff() as f64 + ph.max_abs();
        if div > 1e-10 * (vmax + q_scale * q_scale) {
            return Err(Error::Contract(format!(
                "velocity is not solenoidal: max|k·v̂| = {div:e}, max|v̂| = {vmax:e}"
            )));
        }

        let dv: Vec<[Vec<f64>; 3]> = (0..3).map(|i| sp.gradient(vh.comp(i))).collect();
        let dq: Vec<[Vec<f64>; 3]> = (0..5).map(|a| sp.gradient(qh.comp(a))).collect();
        let dp: Vec<[Vec<f64>; 3]> = (0..5).map(|a| sp.gradient(ph.comp(a))).collect();

        let [v0, v1, v2] = state.v.components();
        let advect = |g: &[Vec<f64>; 3]| -> Vec<Complex64> {
            let prod: Vec<f64> = (0..len)
                .map(|x| v0[x] * g[0][x] + v1[x] * g[1][x] + v2[x] * g[2][x])
                .collect();
            sp.dealiased_forward(&prod)
        };

        // momentum: g = D((v·∇)v) + ∇·D(S)
        let mut gh: [Vec<Complex64>; 3] = std::array::from_fn(|i| advect(&dv[i]));
        for i in 0..dims {
            for j in i..dims {
                let s: Vec<f64> = (0..len)
                    .map(|x| dq.iter().map(|g| g[i][x] * g[j][x]).sum())
                    .collect();
                let sh = sp.dealiased_forward(&s);
                for (o, d) in gh[i].iter_mut().zip(sp.derivative_spectral(&sh, j)) {
                    *o += d;
                }
                if i != j {
                    for (o, d) in gh[j].iter_mut().zip(sp.derivative_spectral(&sh, i)) {
                        *o += d;
                    }
                }
            }
        }
        let momentum_source =
            SpectralField::from_components(grid, gh).expect("lengths match grid");
        let mut vdot_h = momentum_source.clone();
        for c in 0..3 {
            let comp = vdot_h.comp_mut(c);
            comp.iter_mut().for_each(|z| *z = -*z);
            comp[0] = Complex64::new(0.0, 0.0);
        }
        sp.leray(&mut vdot_h);
        let v_dot = sp.inverse_field(&vdot_h);

        let mut q_dot = QTensorField::zeros(grid);
        for a in 0..5 {
            let adv: Vec<Complex64> = advect(&dq[a]).into_iter().map(|z| -z).collect();
            let mut phys = sp.inverse(&adv);
            for (o, p) in phys.iter_mut().zip(state.p.comp(a)) {
                *o += p;
            }
            q_dot.comp_mut(a).copy_from_slice(&phys);
        }

        let mut dfq = QTensorField::zeros(grid);
        for x in 0..len {
            dfq.set_tensor(x, bulk_gradient(&state.q.tensor_at(x), &state.params));
        }
        let mut p_dot = QTensorField::zeros(grid);
        for a in 0..5 {
            let lap = sp.laplacian_spectral(qh.comp(a));
            let mut spec: Vec<Complex64> = advect(&dp[a])
                .into_iter()
                .zip(lap)
                .map(|(adv, l)| l - adv)
                .collect();
            if self.dealias_potential {
                for (o, f) in spec.iter_mut().zip(sp.dealiased_forward(dfq.comp(a))) {
                    *o -= f;
                }
                p_dot.comp_mut(a).copy_from_slice(&sp.inverse(&spec));
            } else {
                let mut phys = sp.inverse(&spec);
                for (o, f) in phys.iter_mut().zip(dfq.comp(a)) {
                    *o -= f;
                }
                p_dot.comp_mut(a).copy_from_slice(&phys);
            }
        }

        let mut tendency = Tendency {
            v: v_dot,
            q: q_dot,
            p: p_dot,
        };
        if let Some(f) = &self.forcing {
            let extra = f.at(state.t)?;
            if extra.v.grid() != grid || extra.q.grid() != grid || extra.p.grid() != grid {
                return Err(Error::GridMismatch("forcing lives on a different grid".into()));
            }
            tendency.axpy(1.0, &extra);
        }

        let max_grad_q = dq
            .iter()
            .flat_map(|g| g.iter())
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()));
        Ok(Assembled {
            tendency,
            norms: StageNorms {
                max_v: state.v.max_norm(),
                max_grad_q,
            },
            momentum_source,
        })
    }

    /// Time derivative of the state, without the diagnostic multipliers.
    pub fn tendency(&self, state: &SpectralState) -> Result<Tendency> {
        Ok(self.assemble(state)?.tendency)
    }

    pub fn rhs(&self, state: &SpectralState) -> Result<RhsBundle> {
        let Assembled {
            tendency,
            momentum_source,
            ..
        } = self.assemble(state)?;
        let pressure = self.pressure_from_source(&momentum_source);
        let mut lambda_field = ScalarField::zeros(self.grid());
        for x in 0..self.grid().len() {
            lambda_field.comp_mut(0)[x] = lambda_multiplier(&state.q.tensor_at(x), &state.params);
        }
        Ok(RhsBundle {
            v_dot: tendency.v,
            q_dot: tendency.q,
            p_dot: tendency.p,
            lambda_field,
            pressure,
        })
    }

    /// `Π̂ = i k·ĝ / |k|²`, so that `−ΔΠ = ∇·g`.
    fn pressure_from_source(&self, gh: &SpectralField<3>) -> ScalarField {
        let sp = &self.sp;
        let mut div = sp.divergence_spectral(gh);
        for (idx, z) in div.iter_mut().enumerate() {
            let [kx, ky, kz] = sp.wavevector(idx);
            let k2 = kx * kx + ky * ky + kz * kz;
            *z = if k2 == 0.0 { Complex64::new(0.0, 0.0) } else { *z / k2 };
        }
        Field::from_components(self.grid(), [sp.inverse(&div)]).expect("lengths match grid")
    }

    /// `safety / (⌊n/3⌋ (‖v‖∞ + 1))`.
    pub fn cfl_dt(&self, state: &SpectralState, safety: f64) -> Result<f64> {
        cfl_dt(state, safety)
    }

    /// One classical Runge–Kutta step.
    pub fn step_rk4(&self, state: &SpectralState, dt: f64) -> Result<SpectralState> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        let first = self.assemble(state)?;
        self.check_norms(state.t, &first.norms)?;
        let k1 = first.tendency;
        let k2 = self.tendency(&state.advanced(&k1, dt / 2.0))?;
        let k3 = self.tendency(&state.advanced(&k2, dt / 2.0))?;
        let k4 = self.tendency(&state.advanced(&k3, dt))?;

        let mut sum = k1;
        sum.axpy(2.0, &k2);
        sum.axpy(2.0, &k3);
        sum.axpy(1.0, &k4);
        let mut next = state.advanced(&sum, dt / 6.0);
        next.t = state.t + dt;
        if !next.is_finite() {
            return Err(Error::BlowUp {
                t: next.t,
                reason: "non-finite values after step".into(),
            });
        }
        let vmax = next.v.max_norm();
        if vmax > self.blowup_cap {
            return Err(Error::BlowUp {
                t: next.t,
                reason: format!("max |v| = {vmax:e} exceeds cap {:e}", self.blowup_cap),
            });
        }
        Ok(next)
    }

    fn check_norms(&self, t: f64, norms: &StageNorms) -> Result<()> {
        if !(norms.max_v.is_finite() && norms.max_grad_q.is_finite()) {
            return Err(Error::BlowUp {
                t,
                reason: "non-finite values in state".into(),
            });
        }
        if norms.max_v > self.blowup_cap {
            return Err(Error::BlowUp {
                t,
                reason: format!("max |v| = {:e} exceeds cap {:e}", norms.max_v, self.blowup_cap),
            });
        }
        if norms.max_grad_q > self.blowup_cap {
            return Err(Error::BlowUp {
                t,
                reason: format!(
                    "max |∇Q| = {:e} exceeds cap {:e}",
                    norms.max_grad_q, self.blowup_cap
                ),
            });
        }
        Ok(())
    }
}

/// `safety / (⌊n/3⌋ (‖v‖∞ + 1))`.
pub fn cfl_dt(state: &SpectralState, safety: f64) -> Result<f64> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "CFL safety must lie in (0, 1], got {safety}"
        )));
    }
    let k_max = state.grid().dealias_cutoff() as f64;
    Ok(safety / (k_max * (state.v.max_norm() + 1.0)))
}

/// Right-hand side with default options.
pub fn rhs(state: &SpectralState) -> Result<RhsBundle> {
    Dynamics::new(state.grid()).rhs(state)
}

/// One RK4 step with default options.
pub fn step_rk4(state: &SpectralState, dt: f64) -> Result<SpectralState> {
    Dynamics::new(state.grid()).step_rk4(state, dt)
}

/// `Q = ε sin(x) B₁` with `P = 0` and `v = 0`.
pub fn linear_wave_state(grid: Grid, eps: f64) -> SpectralState {
    let mut s = SpectralState::zeros(grid, PotentialParams::zero());
    s.q = QTensorField::from_fn(grid, |p| (TracelessSymTensor::basis(0) * (eps * p[0].sin())).0);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::pairwise_sum;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(grid: Grid, seed: u64, params: PotentialParams) -> SpectralState {
        let sp = Spectral::new(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut band = |amp: f64| {
            let mut fh = vec![Complex64::new(0.0, 0.0); grid.len()];
            for (idx, z) in fh.iter_mut().enumerate() {
                if sp.integer_wavevector(idx).iter().all(|k| k.abs() <= 3) {
                    *z = Complex64::new(rng.random_range(-amp..amp), rng.random_range(-amp..amp));
                }
            }
            sp.inverse(&fh)
        };
        let v = VectorField::from_components(grid, std::array::from_fn(|_| band(0.05))).unwrap();
        let q = QTensorField::from_components(grid, std::array::from_fn(|_| band(0.05))).unwrap();
        let p = QTensorField::from_components(grid, std::array::from_fn(|_| band(0.05))).unwrap();
        let mut v = sp.leray_project(&v);
        for c in 0..3 {
            let m = pairwise_sum(v.comp(c)) / grid.len() as f64;
            v.comp_mut(c).iter_mut().for_each(|x| *x -= m);
        }
        SpectralState { t: 0.0, v, q, p, params }
    }

    #[test]
    fn stress_examples() {
        let g = Grid::new(16, 2).unwrap();
        let sp = Spectral::new(g);
        let q = QTensorField::from_fn(g, |_| [0.3, -0.1, 0.2, 0.0, 0.5]);
        let s = stress_tensor(&sp, &q);
        assert!(s.iter().flatten().flatten().all(|x| x.abs() < 1e-14));

        let q = QTensorField::from_fn(g, |p| (TracelessSymTensor::basis(0) * p[0].sin()).0);
        let s = stress_tensor(&sp, &q);
        for x in 0..g.len() {
            let c = g.point(x)[0].cos();
            assert!((s[0][0][x] - c * c).abs() < 1e-13);
        }
        for (i, j) in [(0, 1), (0, 2), (1, 1), (1, 2), (2, 2)] {
            assert!(s[i][j].iter().all(|x| x.abs() < 1e-13));
        }
    }

    #[test]
    fn stress_is_symmetric() {
        let g = Grid::new(12, 3).unwrap();
        let st = random_state(g, 1, PotentialParams::zero());
        let s = stress_tensor(&Spectral::new(g), &st.q);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(s[i][j], s[j][i]);
            }
        }
    }

    #[test]
    fn zero_state_is_stationary() {
        let g = Grid::new(16, 2).unwrap();
        let z = SpectralState::zeros(g, PotentialParams::new(1.0, 2.0, 1.0, 0.5));
        let r = rhs(&z).unwrap();
        assert_eq!(r.v_dot.max_abs(), 0.0);
        assert_eq!(r.q_dot.max_abs(), 0.0);
        assert_eq!(r.p_dot.max_abs(), 0.0);
        assert_eq!(r.pressure.max_abs(), 0.0);
        let next = step_rk4(&z, 0.1).unwrap();
        assert_eq!(next.q.max_abs() + next.p.max_abs() + next.v.max_abs(), 0.0);
        assert!((next.t - 0.1).abs() < 1e-16);
    }

    #[test]
    fn decoupled_linear_case() {
        let g = Grid::new(16, 2).unwrap();
        let mut s = SpectralState::zeros(g, PotentialParams::zero());
        s.p = QTensorField::from_fn(g, |p| (TracelessSymTensor::basis(0) * p[0].sin()).0);
        let r = rhs(&s).unwrap();
        assert!(r.q_dot.sub(&s.p).max_abs() < 1e-14);
        assert!(r.p_dot.max_abs() < 1e-14);
        assert!(r.v_dot.max_abs() < 1e-14);

        let w = linear_wave_state(g, 0.01);
        let r = rhs(&w).unwrap();
        assert!(r.p_dot.sub(&w.q.scaled(-1.0)).max_abs() < 1e-15);
    }

    #[test]
    fn wave_second_difference_matches_laplacian() {
        let g = Grid::new(16, 2).unwrap();
        let w = linear_wave_state(g, 0.01);
        let lap = w.q.scaled(-1.0);
        let d = Dynamics::new(g);
        let mut errs = Vec::new();
        for dt in [0.02, 0.01] {
            // the exact solution is even in time, so Q(−dt) = Q(dt)
            let a = d.step_rk4(&w, dt).unwrap();
            let second = a.q.sub(&w.q).scaled(2.0 / (dt * dt));
            errs.push(second.sub(&lap).max_abs());
        }
        assert!(errs[1] < errs[0] / 3.5, "{errs:?}");
    }

    #[test]
    fn wave_error_is_fourth_order() {
        let g = Grid::new(16, 2).unwrap();
        let d = Dynamics::new(g);
        let t_end = 1.0;
        let mut errs = Vec::new();
        for steps in [20, 40] {
            let dt = t_end / steps as f64;
            let mut s = linear_wave_state(g, 0.01);
            for _ in 0..steps {
                s = d.step_rk4(&s, dt).unwrap();
            }
            let exact = linear_wave_state(g, 0.01 * t_end.cos()).q;
            errs.push(s.q.sub(&exact).max_abs());
        }
        let ratio = errs[0] / errs[1];
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn cfl_examples() {
        let g = Grid::new(32, 2).unwrap();
        let mut s = SpectralState::zeros(g, PotentialParams::zero());
        assert!((cfl_dt(&s, 0.5).unwrap() - 0.05).abs() < 1e-15);
        s.v = VectorField::from_fn(g, |_| [1.0, 0.0, 0.0]);
        assert!((cfl_dt(&s, 0.5).unwrap() - 0.025).abs() < 1e-15);
        let g64 = SpectralState::zeros(Grid::new(64, 2).unwrap(), PotentialParams::zero());
        let ratio = cfl_dt(&SpectralState::zeros(g, PotentialParams::zero()), 0.5).unwrap()
            / cfl_dt(&g64, 0.5).unwrap();
        assert!((ratio - 2.1).abs() < 0.01);
        assert!(cfl_dt(&s, 0.0).is_err());
        assert!(cfl_dt(&s, 1.5).is_err());
    }

    #[test]
    fn non_solenoidal_input_is_rejected() {
        let g = Grid::new(16, 2).unwrap();
        let mut s = SpectralState::zeros(g, PotentialParams::zero());
        s.v = VectorField::from_fn(g, |p| [p[0].sin(), 0.0, 0.0]);
        assert!(matches!(rhs(&s), Err(Error::Contract(_))));
    }

    #[test]
    fn blowup_is_reported() {
        let g = Grid::new(16, 2).unwrap();
        let mut s = SpectralState::zeros(g, PotentialParams::zero());
        s.v = VectorField::from_fn(g, |p| [10.0 * p[1].sin(), 0.0, 0.0]);
        let mut d = Dynamics::new(g);
        d.blowup_cap = 5.0;
        assert!(matches!(d.step_rk4(&s, 0.01), Err(Error::BlowUp { .. })));
        s.q.comp_mut(0)[3] = f64::NAN;
        assert!(matches!(Dynamics::new(g).step_rk4(&s, 0.01), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn tendencies_respect_constraints() {
        let g = Grid::new(16, 3).unwrap();
        let st = random_state(g, 3, PotentialParams::new(-0.3, -4.0, 4.0, 1.0));
        let d = Dynamics::new(g);
        let r = d.rhs(&st).unwrap();
        let (div, vmax) = d.spectral().solenoidal_defect(&r.v_dot);
        assert!(div <= 1e-12 * vmax.max(1e-300));
        let vh = d.spectral().forward_field(&r.v_dot);
        for c in 0..3 {
            assert!(vh.comp(c)[0].norm() < 1e-16 * vh.max_abs());
        }
        assert!(r.q_dot.max_trace() <= 1e-15 * r.q_dot.max_abs());
        assert!(r.p_dot.max_trace() <= 1e-15 * r.p_dot.max_abs());
    }

    #[test]
    fn advection_is_energy_neutral() {
        let g = Grid::new(16, 2).unwrap();
        let mut st = random_state(g, 4, PotentialParams::zero());
        st.q = QTensorField::zeros(g);
        let d = Dynamics::new(g);
        let r = d.rhs(&st).unwrap();
        let sp = d.spectral();
        let work = sp.integrate(&r.v_dot.dot_density(&st.v));
        let scale = sp.integrate(&st.v.norm_sq_density());
        assert!(work.abs() <= 1e-10 * scale, "{work}");
    }

    #[test]
    fn momentum_work_equals_stress_work() {
        let g = Grid::new(16, 2).unwrap();
        let st = random_state(g, 5, PotentialParams::zero());
        let d = Dynamics::new(g);
        let sp = d.spectral();
        let r = d.rhs(&st).unwrap();
        let s = stress_tensor(sp, &st.q);
        let mut div_s = VectorField::zeros(g);
        for i in 0..3 {
            for j in 0..3 {
                let dj = sp.derivative(&s[i][j], j);
                for (o, x) in div_s.comp_mut(i).iter_mut().zip(dj) {
                    *o += x;
                }
            }
        }
        let lhs = sp.integrate(&r.v_dot.dot_density(&st.v));
        let rhs_work = -sp.integrate(&div_s.dot_density(&st.v));
        assert!((lhs - rhs_work).abs() <= 1e-10 * (lhs.abs() + rhs_work.abs()));
    }

    #[test]
    fn taylor_green_pressure_balances_advection() {
        let g = Grid::new(16, 2).unwrap();
        let mut st = SpectralState::zeros(g, PotentialParams::zero());
        st.v = VectorField::from_fn(g, |p| {
            [p[0].sin() * p[1].cos(), -p[0].cos() * p[1].sin(), 0.0]
        });
        let r = rhs(&st).unwrap();
        assert!(r.v_dot.max_abs() < 1e-14);
        for x in 0..g.len() {
            let p = g.point(x);
            let exact = ((2.0 * p[0]).cos() + (2.0 * p[1]).cos()) / 4.0;
            assert!((r.pressure.comp(0)[x] - exact).abs() < 1e-14);
        }
        assert!(pairwise_sum(r.pressure.comp(0)).abs() < 1e-12);
    }

    #[test]
    fn multiplier_field_follows_cubic_coefficient() {
        let g = Grid::new(16, 2).unwrap();
        let st = random_state(g, 6, PotentialParams::new(1.0, 3.0, 1.0, 0.0));
        let r = rhs(&st).unwrap();
        for x in 0..g.len() {
            let expected = -st.q.tensor_at(x).norm_sq();
            assert!((r.lambda_field.comp(0)[x] - expected).abs() < 1e-15);
        }
    }
}
