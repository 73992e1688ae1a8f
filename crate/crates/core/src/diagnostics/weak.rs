use rustfft::num_complex::Complex64;

use crate::dynamics::{SpectralState, Trajectory};
use crate::error::{Error, Result};
use crate::potential::bulk_gradient;
use crate::spectral::{QTensorField, Spectral, SpectralField};

/// Largest residual of each weak identity over all test modes and times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakResiduals {
    pub test_cutoff: usize,
    /// `∫ v·∇φ` over scalar tests.
    pub divergence: f64,
    /// Momentum identity over solenoidal tests.
    pub momentum: f64,
    pub q_equation: f64,
    pub p_equation: f64,
}

impl WeakResiduals {
    pub fn max(&self) -> f64 {
        self.divergence
            .max(self.momentum)
            .max(self.q_equation)
            .max(self.p_equation)
    }
}

struct Fluxes {
    v: SpectralField<3>,
    q: SpectralField<5>,
    p: SpectralField<5>,
    /// Spectrum of `∇·(v⊗v) + ∇·S`.
    momentum: SpectralField<3>,
    /// Spectrum of `P − ∇·(vQ)`.
    q_rate: SpectralField<5>,
    /// Spectrum of `−∇·(vP) − ∂F(Q) + ΔQ`.
    p_rate: SpectralField<5>,
}

fn divergence_of_products(sp: &Spectral, v: &[Vec<f64>; 3], f: &[f64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); f.len()];
    for (j, vj) in v.iter().enumerate().take(sp.grid().dims()) {
        let prod: Vec<f64> = vj.iter().zip(f).map(|(a, b)| a * b).collect();
        let d = sp.derivative_spectral(&sp.dealiased_forward(&prod), j);
        for (o, x) in out.iter_mut().zip(d) {
            *o += x;
        }
    }
    out
}

fn fluxes(sp: &Spectral, s: &SpectralState, dealias_potential: bool) -> Fluxes {
    let grid = sp.grid();
    let dims = grid.dims();
    let v = s.v.components();
    let vh = sp.forward_field(&s.v);
    let qh = sp.forward_field(&s.q);
    let ph = sp.forward_field(&s.p);
    let dq: Vec<[Vec<f64>; 3]> = (0..5).map(|a| sp.gradient(qh.comp(a))).collect();

    let mut mom: [Vec<Complex64>; 3] = std::array::from_fn(|i| divergence_of_products(sp, v, s.v.comp(i)));
    for i in 0..dims {
        for j in 0..dims {
            let sij: Vec<f64> = (0..grid.len())
                .map(|x| dq.iter().map(|g| g[i][x] * g[j][x]).sum())
                .collect();
            let d = sp.derivative_spectral(&sp.dealiased_forward(&sij), j);
            for (o, x) in mom[i].iter_mut().zip(d) {
                *o += x;
            }
        }
    }

    let mut dfq = QTensorField::zeros(grid);
    for x in 0..grid.len() {
        dfq.set_tensor(x, bulk_gradient(&s.q.tensor_at(x), &s.params));
    }
    let q_rate: [Vec<Complex64>; 5] = std::array::from_fn(|a| {
        ph.comp(a)
            .iter()
            .zip(divergence_of_products(sp, v, s.q.comp(a)))
            .map(|(p, d)| p - d)
            .collect()
    });
    let p_rate: [Vec<Complex64>; 5] = std::array::from_fn(|a| {
        let f = if dealias_potential {
            sp.dealiased_forward(dfq.comp(a))
        } else {
            sp.forward(dfq.comp(a))
        };
        divergence_of_products(sp, v, s.p.comp(a))
            .into_iter()
            .zip(f)
            .zip(sp.laplacian_spectral(qh.comp(a)))
            .map(|((d, f), l)| l - d - f)
            .collect()
    });
    Fluxes {
        v: vh,
        q: qh,
        p: ph,
        momentum: SpectralField::from_components(grid, mom).expect("lengths match grid"),
        q_rate: SpectralField::from_components(grid, q_rate).expect("lengths match grid"),
        p_rate: SpectralField::from_components(grid, p_rate).expect("lengths match grid"),
    }
}

/// Residuals of the weak identities tested against `e^{ik·x}`, `|k|∞ ≤ K`.
///
/// Each identity compares the change of a mode between `0` and `τ` with the
/// trapezoid integral of its flux over the snapshots; the momentum test
/// functions are projected onto divergence-free fields. Values are scaled
/// by the torus volume so they equal the integrals of the weak form.
pub fn weak_residuals(sp: &Spectral, traj: &Trajectory, k_test: usize) -> Result<WeakResiduals> {
    let grid = sp.grid();
    if k_test > grid.dealias_cutoff() {
        return Err(Error::InvalidInput(format!(
            "test cutoff {k_test} exceeds n/3 = {}",
            grid.dealias_cutoff()
        )));
    }
    if traj.len() < 2 {
        return Err(Error::InvalidInput("weak residuals need at least two snapshots".into()));
    }
    if traj.grid() != grid {
        return Err(Error::GridMismatch("trajectory grid differs from transform grid".into()));
    }
    let tests: Vec<usize> = (0..grid.len())
        .filter(|&idx| {
            sp.integer_wavevector(idx)
                .iter()
                .all(|k| k.unsigned_abs() as usize <= k_test)
        })
        .collect();
    let vol = grid.volume();
    let data: Vec<Fluxes> = traj
        .snapshots
        .iter()
        .map(|s| fluxes(sp, s, traj.dealias_potential))
        .collect();
    let times = traj.times();

    let mut out = WeakResiduals {
        test_cutoff: k_test,
        divergence: 0.0,
        momentum: 0.0,
        q_equation: 0.0,
        p_equation: 0.0,
    };
    for d in &data {
        for &idx in &tests {
            let k = sp.wavevector(idx);
            let kv: Complex64 = (0..3).map(|c| d.v.comp(c)[idx] * k[c]).sum();
            out.divergence = out.divergence.max(vol * kv.norm());
        }
    }

    let zero = Complex64::new(0.0, 0.0);
    let n_t = tests.len();
    let mut int_m = vec![[zero; 3]; n_t];
    let mut int_q = vec![[zero; 5]; n_t];
    let mut int_p = vec![[zero; 5]; n_t];
    for step in 1..data.len() {
        let h = 0.5 * (times[step] - times[step - 1]);
        let (a, b) = (&data[step - 1], &data[step]);
        let last = &data[step];
        for (t, &idx) in tests.iter().enumerate() {
            for c in 0..3 {
                int_m[t][c] += (a.momentum.comp(c)[idx] + b.momentum.comp(c)[idx]) * h;
            }
            for c in 0..5 {
                int_q[t][c] += (a.q_rate.comp(c)[idx] + b.q_rate.comp(c)[idx]) * h;
                int_p[t][c] += (a.p_rate.comp(c)[idx] + b.p_rate.comp(c)[idx]) * h;
            }

            let k = sp.wavevector(idx);
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            let mut r: [Complex64; 3] = std::array::from_fn(|c| {
                last.v.comp(c)[idx] - data[0].v.comp(c)[idx] + int_m[t][c]
            });
            if k2 > 0.0 {
                let kr = (r[0] * k[0] + r[1] * k[1] + r[2] * k[2]) / k2;
                for c in 0..3 {
                    r[c] -= kr * k[c];
                }
            }
            let rm = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            out.momentum = out.momentum.max(vol * rm);

            let rq = (0..5)
                .map(|c| (last.q.comp(c)[idx] - data[0].q.comp(c)[idx] - int_q[t][c]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            out.q_equation = out.q_equation.max(vol * rq);
            let rp = (0..5)
                .map(|c| (last.p.comp(c)[idx] - data[0].p.comp(c)[idx] - int_p[t][c]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            out.p_equation = out.p_equation.max(vol * rp);
        }
    }
    Ok(out)
}
