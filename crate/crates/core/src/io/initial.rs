//! Initial data presets.
//!
//! Random fields are finite Fourier sums over wavevectors with
//! `0 < |k| ≤ k_max`, visited in a fixed order with one ChaCha8 stream per
//! field, so the same seed produces the same continuous field at every
//! resolution that resolves the band. `Q` modes carry an extra `1/(1+|k|)`
//! factor so that `Q` is one derivative smoother than `P`. A random field
//! is scaled so that its root-mean-square pointwise norm equals the
//! configured amplitude; Taylor-Green amplitudes are peak values.
//!
//! | kind | `v` | `Q`, `P` |
//! |------|-----|----------|
//! | `taylor_green` | `amp_v (sin x cos y, −cos x sin y, 0)` | random, seed defaults to 0 |
//! | `random_bandlimited` | random, Leray-projected | random |
//! | `manufactured` | [`ManufacturedSolution`] at `t = 0` | same |
//! | `checkpoint` | loaded | loaded |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;

use super::checkpoint::checkpoint_load;
use super::config::{InitialKind, RunConfig};
use crate::dynamics::{Dynamics, ManufacturedSolution, SpectralState};
use crate::error::{Error, Result};
use crate::spectral::{Field, Grid, Spectral, VectorField};

const STREAM_V: u64 = 0;
const STREAM_Q: u64 = 1;
const STREAM_P: u64 = 2;

/// Wavevectors with `0 < |k| ≤ k_max` and first nonzero entry positive.
fn half_band(dims: usize, k_max: usize) -> Vec<[i64; 3]> {
    let k = k_max as i64;
    let kz_range = if dims == 3 { -k..=k } else { 0..=0 };
    let mut out = Vec::new();
    for kz in kz_range {
        for ky in -k..=k {
            for kx in -k..=k {
                let w = [kx, ky, kz];
                let norm2: i64 = w.iter().map(|x| x * x).sum();
                if norm2 == 0 || norm2 > k * k {
                    continue;
                }
                let first = w.iter().copied().find(|&x| x != 0).unwrap_or(0);
                if first > 0 {
                    out.push(w);
                }
            }
        }
    }
    out
}

fn random_field<const C: usize>(sp: &Spectral, k_max: usize, seed: u64, stream: u64, decay: bool) -> Field<C> {
    let g = sp.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let modes = half_band(g.dims(), k_max);
    let mut comps: [Vec<Complex64>; C] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); g.len()]);
    for k in &modes {
        let weight = if decay {
            1.0 / (1.0 + (k.iter().map(|x| (x * x) as f64).sum::<f64>()).sqrt())
        } else {
            1.0
        };
        let idx = |w: [i64; 3]| {
            let [ix, iy, iz] = [0, 1, 2].map(|a| g.index_of_wavenumber(w[a]));
            g.ravel(ix, iy, if g.dims() == 3 { iz } else { 0 })
        };
        let (plus, minus) = (idx(*k), idx(k.map(|x| -x)));
        for comp in comps.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let z = Complex64::new(re, im) * weight;
            comp[plus] = z;
            comp[minus] = z.conj();
        }
    }
    let real = comps.map(|c| sp.inverse(&c));
    Field::from_components(g, real).expect("lengths match grid")
}

fn normalized<const C: usize>(sp: &Spectral, mut f: Field<C>, amp: f64) -> Field<C> {
    let m = (sp.integrate(&f.norm_sq_density()) / sp.grid().volume()).sqrt();
    if amp == 0.0 || m == 0.0 {
        return Field::zeros(f.grid());
    }
    f.scale(amp / m);
    f
}

pub fn taylor_green_velocity(grid: Grid, amp: f64) -> VectorField {
    VectorField::from_fn(grid, |p| {
        [
            amp * p[0].sin() * p[1].cos(),
            -amp * p[0].cos() * p[1].sin(),
            0.0,
        ]
    })
}

/// Initial state for a validated configuration.
pub fn make_initial_data(cfg: &RunConfig) -> Result<SpectralState> {
    let grid = cfg.grid();
    let sp = Spectral::new(grid);
    let init = &cfg.initial;
    let random_tensors = |seed: u64| {
        let q = normalized(&sp, random_field::<5>(&sp, init.k_max, seed, STREAM_Q, true), init.amp_q);
        let p = normalized(&sp, random_field::<5>(&sp, init.k_max, seed, STREAM_P, false), init.amp_p);
        (q, p)
    };
    let state = match init.kind {
        InitialKind::TaylorGreen => {
            let (q, p) = random_tensors(init.seed.unwrap_or(0));
            SpectralState {
                t: 0.0,
                v: taylor_green_velocity(grid, init.amp_v),
                q,
                p,
                params: cfg.potential,
            }
        }
        InitialKind::RandomBandlimited => {
            let seed = init.seed.ok_or_else(|| {
                Error::Config(vec!["initial.seed: required when initial.kind = random_bandlimited".into()])
            })?;
            let v = sp.leray_project(&random_field::<3>(&sp, init.k_max, seed, STREAM_V, false));
            let (q, p) = random_tensors(seed);
            SpectralState {
                t: 0.0,
                v: normalized(&sp, v, init.amp_v),
                q,
                p,
                params: cfg.potential,
            }
        }
        InitialKind::Manufactured => {
            let mms = ManufacturedSolution::new(
                &Dynamics::new(grid),
                cfg.potential,
                [init.amp_v, init.amp_q, init.amp_p],
            );
            mms.state(0.0)
        }
        InitialKind::Checkpoint => {
            let path = init.checkpoint.as_ref().ok_or_else(|| {
                Error::Config(vec!["initial.checkpoint: required when initial.kind = checkpoint".into()])
            })?;
            let mut s = checkpoint_load(path)?;
            if s.grid() != grid {
                return Err(Error::GridMismatch(format!(
                    "checkpoint {} holds n = {}, dims = {} but the configuration asks for n = {}, dims = {}",
                    path.display(),
                    s.grid().n(),
                    s.grid().dims(),
                    cfg.n,
                    cfg.dims
                )));
            }
            s.params = cfg.potential;
            s
        }
    };
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::parse_config_str;
    use crate::io::resample::restrict_state;
    use std::path::Path;

    fn cfg(text: &str) -> RunConfig {
        parse_config_str(text, Path::new(".")).unwrap()
    }

    #[test]
    fn zero_amplitudes_give_zero_state() {
        for kind in ["taylor_green", "random_bandlimited", "manufactured"] {
            let c = cfg(&format!(
                "grid.n = 16\ntime.t_end = 1\ninitial.kind = {kind}\ninitial.seed = 3\n\
                 initial.amp_v = 0\ninitial.amp_q = 0\ninitial.amp_p = 0\n"
            ));
            let s = make_initial_data(&c).unwrap();
            assert_eq!(s.v.max_abs() + s.q.max_abs() + s.p.max_abs(), 0.0, "{kind}");
        }
    }

    #[test]
    fn taylor_green_is_solenoidal() {
        for dims in [2, 3] {
            let s = make_initial_data(&cfg(&format!("grid.n = 32\ngrid.dims = {dims}\ntime.t_end = 1\n"))).unwrap();
            let sp = Spectral::new(s.grid());
            let (div, vmax) = sp.solenoidal_defect(&s.v);
            assert!(div <= 1e-13 * vmax.max(1.0), "{div}");
            assert!((s.v.max_norm() - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn random_data_properties() {
        let c = cfg("grid.n = 24\ngrid.dims = 3\ntime.t_end = 1\ninitial.kind = random_bandlimited\n\
                     initial.seed = 11\ninitial.k_max = 3\ninitial.amp_v = 0.2\n");
        let s = make_initial_data(&c).unwrap();
        let sp = Spectral::new(s.grid());
        let (div, vmax) = sp.solenoidal_defect(&s.v);
        assert!(div <= 1e-13 * vmax);
        let mean: f64 = (0..3).map(|i| sp.integrate(s.v.comp(i)).abs()).sum();
        assert!(mean < 1e-13);
        let rms = |d: Vec<f64>| (sp.integrate(&d) / sp.grid().volume()).sqrt();
        assert!((rms(s.v.norm_sq_density()) - 0.2).abs() < 1e-14);
        assert!((rms(s.q.norm_sq_density()) - 0.05).abs() < 1e-14);
        assert!((rms(s.p.norm_sq_density()) - 0.05).abs() < 1e-14);
        for f in s.v.components().iter().chain(s.q.components()).chain(s.p.components()) {
            let (tail, total) = sp.tail_energy(&sp.forward(f), 3);
            assert!(tail <= 1e-26 * total.max(1.0), "{tail} {total}");
        }
    }

    #[test]
    fn same_seed_is_bit_identical_and_seeds_differ() {
        let text = "grid.n = 16\ntime.t_end = 1\ninitial.kind = random_bandlimited\ninitial.seed = 5\n";
        let a = make_initial_data(&cfg(text)).unwrap();
        let b = make_initial_data(&cfg(text)).unwrap();
        assert_eq!(a, b);
        let c = make_initial_data(&cfg(&text.replace("seed = 5", "seed = 6"))).unwrap();
        assert_ne!(a.q, c.q);
    }

    #[test]
    fn data_does_not_depend_on_resolution() {
        let text = "grid.n = 32\ntime.t_end = 1\ninitial.kind = random_bandlimited\ninitial.seed = 2\n";
        let fine = make_initial_data(&cfg(text)).unwrap();
        let coarse = make_initial_data(&cfg(&text.replace("32", "16"))).unwrap();
        let r = restrict_state(&fine, coarse.grid()).unwrap();
        assert!(r.v.sub(&coarse.v).max_abs() < 1e-14);
        assert!(r.q.sub(&coarse.q).max_abs() < 1e-14);
        assert!(r.p.sub(&coarse.p).max_abs() < 1e-14);
    }

    #[test]
    fn manufactured_preset_matches_exact_solution() {
        let c = cfg("grid.n = 16\ntime.t_end = 1\ninitial.kind = manufactured\n");
        let s = make_initial_data(&c).unwrap();
        let exact = ManufacturedSolution::new(&Dynamics::new(c.grid()), c.potential, [0.1, 0.05, 0.05]);
        assert_eq!(s, exact.state(0.0));
    }
}
