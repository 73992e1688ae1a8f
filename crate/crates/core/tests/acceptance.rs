//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run a subset with `cargo test --test acceptance -- 4 7`.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qshyp::diagnostics::{
    advect_loop, circle_loop, defect_estimate, energy_balance_residual, energy_breakdown, gronwall_check,
    helicity, relative_energy, vorticity_residual, weak_residuals, GronwallOptions,
};
use qshyp::dynamics::{linear_wave_state, run, Dynamics, RunSettings, SpectralState, Trajectory};
use qshyp::io::{make_initial_data, parse_config_str, RunConfig};
use qshyp::potential::{
    bulk_gradient, bulk_value, check_assumptions, g_gradient, g_value, random_tensor_in_ball, PotentialParams,
};
use qshyp::spectral::{Spectral, VectorField};
use qshyp::tensor::frobenius_inner;

type Check = Result<String, String>;

fn config(text: &str) -> RunConfig {
    parse_config_str(text, Path::new(".")).expect("valid acceptance configuration")
}

fn dynamics(cfg: &RunConfig) -> Dynamics {
    let mut d = Dynamics::new(cfg.grid());
    d.dealias_potential = cfg.dealias_potential;
    d.blowup_cap = cfg.blowup_cap;
    d
}

fn simulate(cfg: &RunConfig, settings: &RunSettings) -> Trajectory {
    let init = make_initial_data(cfg).expect("initial data");
    let traj = run(&dynamics(cfg), init, settings).expect("run");
    assert!(traj.completed(), "run blew up: {:?}", traj.outcome);
    traj
}

fn energy(s: &SpectralState) -> f64 {
    energy_breakdown(&Spectral::new(s.grid()), s).e_total_g
}

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn taylor_green(n: usize, lambda: f64, t_end: f64, interval: f64) -> RunConfig {
    config(&format!(
        "grid.n = {n}\ngrid.dims = 2\ntime.t_end = {t_end}\ntime.snapshot_interval = {interval}\n\
         time.cfl_safety = 0.25\npotential.a = 1\npotential.b = 0\npotential.c = 1\n\
         potential.lambda = {lambda}\ninitial.kind = taylor_green\ninitial.amp_v = 0.1\n\
         initial.amp_q = 0.05\ninitial.amp_p = 0.05\ninitial.k_max = 2\ninitial.seed = 1\n"
    ))
}

fn c1_energy_conservation() -> Check {
    let cfg = taylor_green(64, 0.0, 1.0, 1.0);
    let traj = simulate(&cfg, &cfg.run_settings());
    let e0 = energy(&traj.snapshots[0]);
    let drift = (energy(traj.last()) - e0).abs() / e0;
    let dt = 1.0 / traj.steps as f64;
    let halved = RunSettings {
        dt: Some(dt / 2.0),
        ..cfg.run_settings()
    };
    let fine = simulate(&cfg, &halved);
    let drift_half = (energy(fine.last()) - e0).abs() / e0;
    let ratio = drift / drift_half;
    verdict(
        drift <= 1e-8 && ratio >= 8.0,
        format!("relative drift {drift:.3e} at dt {dt:.4e}, {drift_half:.3e} at dt/2, ratio {ratio:.1}"),
    )
}

fn c2_lambda_balance() -> Check {
    let cfg = taylor_green(64, 1.0, 1.0, 1e-2);
    let traj = simulate(&cfg, &cfg.run_settings());
    let bal = energy_balance_residual(&traj).map_err(|e| e.to_string())?;
    let worst = bal.residual_g.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    let rel = worst / bal.energy_g[0];
    let end = bal.residual_g.last().unwrap().abs() / bal.energy_g[0];
    let mut refined = Vec::new();
    for cadence in [5e-3, 2.5e-3] {
        let settings = RunSettings {
            snapshot_interval: cadence,
            dt: Some(1.0 / traj.steps as f64),
            ..cfg.run_settings()
        };
        let b = energy_balance_residual(&simulate(&cfg, &settings)).map_err(|e| e.to_string())?;
        refined.push(b.residual_g.last().unwrap().abs() / b.energy_g[0]);
    }
    verdict(
        end <= 1e-6,
        format!(
            "|balance residual|/E_G(0) = {end:.3e} at T ({rel:.3e} worst); cadence 5e-3: {:.3e}, 2.5e-3: {:.3e}",
            refined[0], refined[1]
        ),
    )
}

fn c3_constraints() -> Check {
    let cfg = config(
        "grid.n = 32\ngrid.dims = 3\ntime.t_end = 0.5\ntime.snapshot_interval = 0.05\n\
         potential.a = -0.3\npotential.b = -4\npotential.c = 4\npotential.lambda = 3\n\
         initial.kind = random_bandlimited\ninitial.seed = 3\ninitial.k_max = 3\n\
         initial.amp_v = 0.2\ninitial.amp_q = 0.1\ninitial.amp_p = 0.1\n",
    );
    let traj = simulate(&cfg, &cfg.run_settings());
    let sp = Spectral::new(traj.grid());
    let (mut tr, mut div) = (0.0_f64, 0.0_f64);
    for s in &traj.snapshots {
        tr = tr.max(s.q.max_trace()).max(s.p.max_trace());
        let (d, vmax) = sp.solenoidal_defect(&s.v);
        div = div.max(d / vmax);
    }
    verdict(
        tr <= 1e-13 && div <= 1e-11,
        format!("max trace {tr:.2e}, max |k·v̂|/max|v̂| {div:.2e} over {} snapshots", traj.len()),
    )
}

fn linear_wave_error(dt: f64) -> f64 {
    let grid = qshyp::spectral::Grid::new(32, 2).unwrap();
    let eps = 0.1;
    let settings = RunSettings {
        t_end: PI,
        snapshot_interval: PI,
        cfl_safety: 1.0,
        dt: Some(dt),
    };
    let traj = run(&Dynamics::new(grid), linear_wave_state(grid, eps), &settings).unwrap();
    let sp = Spectral::new(grid);
    let exact = linear_wave_state(grid, -eps);
    let s = traj.last();
    let mut d = s.q.sub(&exact.q).norm_sq_density();
    for (x, (p, v)) in d.iter_mut().zip(
        s.p.norm_sq_density()
            .into_iter()
            .zip(s.v.norm_sq_density()),
    ) {
        *x += p + v;
    }
    sp.integrate(&d).sqrt()
}

fn c4_linear_wave() -> Check {
    let err = linear_wave_error(1e-3);
    let coarse: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&dt| linear_wave_error(dt)).collect();
    let orders: Vec<f64> = coarse.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    verdict(
        err <= 1e-8 && orders.iter().all(|&p| p >= 3.8),
        format!(
            "L2 error {err:.3e} at dt 1e-3; errors {:.2e}, {:.2e}, {:.2e} at dt 0.2, 0.1, 0.05, orders {:.2}, {:.2}",
            coarse[0], coarse[1], coarse[2], orders[0], orders[1]
        ),
    )
}

fn helical(n: usize) -> RunConfig {
    config(&format!(
        "grid.n = {n}\ngrid.dims = 3\ntime.t_end = 0.5\ntime.snapshot_interval = 0.05\n\
         time.cfl_safety = 0.5\npotential.a = 1\npotential.b = -0.5\npotential.c = 1\n\
         potential.lambda = 0\ninitial.kind = random_bandlimited\ninitial.seed = 7\n\
         initial.k_max = 2\ninitial.amp_v = 0.2\ninitial.amp_q = 0.05\ninitial.amp_p = 0.05\n"
    ))
}

fn c5_helicity_circulation() -> Check {
    let mut rows = Vec::new();
    for n in [16, 24, 32] {
        let cfg = helical(n);
        let traj = simulate(&cfg, &cfg.run_settings());
        let dynamics = dynamics(&cfg);
        let sp = dynamics.spectral();
        let h: Vec<f64> = traj.snapshots.iter().map(|s| helicity(sp, s)).collect();
        let h_drift = h.iter().map(|x| (x - h[0]).abs()).fold(0.0, f64::max);
        let loop0 = circle_loop(128, [0.3, -0.2, 0.1], 1.2, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let hist = advect_loop(&dynamics, &traj, &loop0).map_err(|e| e.to_string())?;
        let c = &hist.circulation;
        let c_drift = c.iter().map(|x| (x - c[0]).abs()).fold(0.0, f64::max);
        rows.push((n, h[0], h_drift, c[0], c_drift, hist.under_resolved));
    }
    let ok_size = rows
        .last()
        .map(|r| r.2 <= 1e-5 * (1.0 + r.1.abs()) && r.4 <= 1e-5 * (1.0 + r.3.abs()) && !r.5)
        .unwrap();
    let monotone = rows.windows(2).all(|w| w[1].2 < w[0].2 && w[1].4 < w[0].4);
    let detail = rows
        .iter()
        .map(|r| format!("N={}: helicity drift {:.2e} (H0 {:.3e}), circulation drift {:.2e} (C0 {:.3e})", r.0, r.2, r.1, r.4, r.3))
        .collect::<Vec<_>>()
        .join("; ");
    verdict(ok_size && monotone, format!("{detail}; monotone {monotone}"))
}

fn c6_vorticity_sign() -> Check {
    let mut rows = Vec::new();
    for (n, interval) in [(16, 0.02), (24, 0.01), (32, 0.005)] {
        let mut cfg = helical(n);
        cfg.t_end = 0.2;
        cfg.snapshot_interval = interval;
        let traj = simulate(&cfg, &cfg.run_settings());
        let sp = Spectral::new(traj.grid());
        let worst = |sign: f64| -> Result<f64, String> {
            let r = vorticity_residual(&sp, &traj, sign).map_err(|e| e.to_string())?;
            Ok(r.into_iter().flatten().fold(0.0, f64::max))
        };
        rows.push((n, worst(1.0)?, worst(-1.0)?));
    }
    let (_, plus, minus) = *rows.last().unwrap();
    let (small, large, name) = if plus < minus { (plus, minus, "plus") } else { (minus, plus, "minus") };
    let tends_to_zero = rows.windows(2).all(|w| {
        let pick = |r: &(usize, f64, f64)| if name == "plus" { r.1 } else { r.2 };
        pick(&w[1]) < pick(&w[0])
    });
    let detail = rows
        .iter()
        .map(|r| format!("N={}: +{:.2e} / -{:.2e}", r.0, r.1, r.2))
        .collect::<Vec<_>>()
        .join("; ");
    verdict(
        large >= 10.0 * small && tends_to_zero,
        format!("{detail}; vanishing convention: {name} (∂tω̄ {} ∇×(v×ω̄)), ratio {:.1e}", if name == "plus" { "+" } else { "−" }, large / small),
    )
}

fn c7_potential_audit() -> Check {
    let audit = |p: &PotentialParams| check_assumptions(p, 20_000, 2.0, 11).map_err(|e| e.to_string());
    let mut lines = Vec::new();
    let mut ok = true;
    let cases: [(f64, f64, f64, bool); 8] = [
        (1.0, 0.0, 1.0, false),
        (-1.0, 0.0, 1.0, false),
        (-2.0, 0.0, 0.5, false),
        (0.5, 0.0, 3.0, false),
        (-0.3, -4.0, 4.0, true),
        (-1.0, 2.0, 0.5, true),
        (0.5, 1.0, 2.0, true),
        (1.0, -3.0, 1.0, true),
    ];
    for (a, b, c, hessian) in cases {
        let mut p = PotentialParams::new(a, b, c, 0.0);
        p.lambda = if hessian { p.hessian_threshold() } else { p.ray_threshold() } + 0.05;
        let r = audit(&p)?;
        let pass = r.passed() && r.isotropy_gap <= 1e-10;
        ok &= pass;
        lines.push(format!(
            "({a},{b},{c}) Λ={:.3} ({} bound): isotropy gap {:.1e}, convexity {}, growth {} ({:.2})",
            p.lambda,
            if hessian { "Hessian" } else { "ray" },
            r.isotropy_gap,
            r.convexity_pass,
            r.growth_pass,
            r.growth_ratio
        ));
    }
    let mut p = PotentialParams::new(-1.0, 2.0, 0.5, 0.0);
    p.lambda = p.ray_threshold() + 0.05;
    let cubic = audit(&p)?;
    lines.push(format!(
        "(-1,2,0.5) at the ray bound Λ={:.3}: convexity {} (not counted)",
        p.lambda, cubic.convexity_pass
    ));
    let bad = audit(&PotentialParams::new(-1.0, 0.0, 1.0, 0.0))?;
    let good = audit(&PotentialParams::new(-1.0, 0.0, 1.0, 1.0))?;
    let caught = !bad.convexity_pass && bad.convexity_witness.is_some() && good.passed();
    ok &= caught;
    lines.push(format!(
        "(-1,0,1): Λ=0 fails with witness {}, Λ=1 passes {}",
        bad.convexity_witness.is_some(),
        good.passed()
    ));
    verdict(ok, lines.join("; "))
}

fn c8_gradients() -> Check {
    let p = PotentialParams::new(-0.3, -4.0, 4.0, 1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = 1e-5;
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let q = random_tensor_in_ball(&mut rng, 1.5);
        let dir = random_tensor_in_ball(&mut rng, 1.0);
        let checks = [
            (
                (bulk_value(&(q + dir * h), &p) - bulk_value(&(q - dir * h), &p)) / (2.0 * h),
                frobenius_inner(&bulk_gradient(&q, &p), &dir),
            ),
            (
                (g_value(&(q + dir * h), &p) - g_value(&(q - dir * h), &p)) / (2.0 * h),
                frobenius_inner(&g_gradient(&q, &p), &dir),
            ),
        ];
        for (fd, exact) in checks {
            worst = worst.max((fd - exact).abs() / exact.abs());
        }
    }
    verdict(worst <= 1e-6, format!("worst relative error {worst:.2e} over 100 pairs for F and G"))
}

fn c9_weak_strong() -> Check {
    let strong = simulate(&taylor_green(64, 0.0, 0.5, 0.05), &taylor_green(64, 0.0, 0.5, 0.05).run_settings());
    let coarse_cfg = taylor_green(32, 0.0, 0.5, 0.05);
    let coarse = simulate(&coarse_cfg, &coarse_cfg.run_settings());
    let opts = GronwallOptions::default();
    let same = gronwall_check(&coarse, &strong, &opts).map_err(|e| e.to_string())?;
    let e0 = same.strong_energy;
    let rel_max = same.relative_energy.iter().fold(0.0_f64, |m, x| m.max(*x));

    let mut init = make_initial_data(&coarse_cfg).unwrap();
    let base = init.clone();
    let sp = Spectral::new(init.grid());
    let alpha = (1e-4 * e0 / (PI * PI)).sqrt();
    init.v.axpy(1.0, &VectorField::from_fn(init.grid(), |x| [alpha * x[1].sin(), 0.0, 0.0]));
    let rel0 = relative_energy(&sp, &init, &base).map_err(|e| e.to_string())?;
    let perturbed = run(&dynamics(&coarse_cfg), init, &coarse_cfg.run_settings()).map_err(|e| e.to_string())?;
    let pert = gronwall_check(&perturbed, &strong, &opts).map_err(|e| e.to_string())?;
    verdict(
        rel_max <= 1e-6 * e0 && pert.pass && (rel0 / (1e-4 * e0) - 1.0).abs() < 1e-6,
        format!(
            "max relative energy {:.2e}·E(0); perturbed: ℰ(0)={:.3e}·E(0), fitted c {:.3e}, below envelope {}, strong tail {:.1e}",
            rel_max / e0,
            pert.relative_energy[0] / e0,
            pert.constant,
            pert.pass,
            same.max_tail
        ),
    )
}

fn c10_defect() -> Check {
    let mk = |n| {
        config(&format!(
            "grid.n = {n}\ngrid.dims = 2\ntime.t_end = 0.5\ntime.snapshot_interval = 0.05\ntime.dt = 0.01\n\
             potential.a = 1\npotential.b = -0.5\npotential.c = 1\npotential.lambda = 0.5\n\
             initial.kind = random_bandlimited\ninitial.seed = 4\ninitial.k_max = 4\n\
             initial.amp_v = 0.1\ninitial.amp_q = 0.05\ninitial.amp_p = 0.05\n"
        ))
    };
    let (c48, c96) = (mk(48), mk(96));
    let coarse = simulate(&c48, &c48.run_settings());
    let fine = simulate(&c96, &c96.run_settings());
    let e0 = energy(&fine.snapshots[0]);
    let rep = defect_estimate(&coarse, &fine).map_err(|e| e.to_string())?;
    let m = |v: &[f64]| v.iter().fold(0.0_f64, |a, b| a.max(*b));
    let (r1, r2, d) = (m(&rep.r1), m(&rep.r2), m(&rep.dissipation));
    let own = defect_estimate(&fine, &fine).map_err(|e| e.to_string())?;
    let zero = own.r1.iter().chain(&own.r2).chain(&own.dissipation).all(|&x| x == 0.0) && own.ddi_constant == 0.0;
    verdict(
        r1.max(r2).max(d) <= 1e-6 * e0 && zero,
        format!("max R1 {:.2e}, R2 {:.2e}, D {:.2e} (·E(0)); self-comparison exactly zero {zero}", r1 / e0, r2 / e0, d / e0),
    )
}

fn c11_weak_form() -> Check {
    let mut cfg = taylor_green(32, 0.5, 0.4, 0.1);
    cfg.dt = Some(2.5e-3);
    cfg.potential.b = -0.5;
    let mut rows = Vec::new();
    for interval in [0.1, 0.05, 0.025] {
        cfg.snapshot_interval = interval;
        let traj = simulate(&cfg, &cfg.run_settings());
        let w = weak_residuals(&Spectral::new(traj.grid()), &traj, 4).map_err(|e| e.to_string())?;
        rows.push(w);
    }
    let scale = energy(&make_initial_data(&cfg).unwrap());
    let mut ok = true;
    let mut parts = Vec::new();
    type Get = fn(&qshyp::diagnostics::WeakResiduals) -> f64;
    let fields: [(&str, Get); 4] = [
        ("divergence", |w| w.divergence),
        ("momentum", |w| w.momentum),
        ("Q", |w| w.q_equation),
        ("P", |w| w.p_equation),
    ];
    for (name, get) in fields {
        let vals: Vec<f64> = rows.iter().map(get).collect();
        let ratios: Vec<f64> = vals.windows(2).map(|w| w[0] / w[1]).collect();
        let at_roundoff = vals.iter().all(|&v| v <= 1e-13 * scale);
        let second_order = ratios.iter().all(|&r| r >= 3.5);
        ok &= second_order || at_roundoff;
        parts.push(format!(
            "{name}: {:.2e}, {:.2e}, {:.2e} (ratios {:.2}, {:.2}{})",
            vals[0],
            vals[1],
            vals[2],
            ratios[0],
            ratios[1],
            if at_roundoff { ", at roundoff" } else { "" }
        ));
    }
    verdict(ok, parts.join("; "))
}

fn c12_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = "grid.n = 16\ngrid.dims = 3\ntime.t_end = 0.2\ntime.snapshot_interval = 0.05\n\
               potential.b = -0.5\ninitial.kind = random_bandlimited\ninitial.seed = 12\n\
               loop.markers = 32\nloop.radius = 1\noutput.diagnostics = diag.csv\noutput.checkpoint = final.chk\n";
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "4", "4"].iter().enumerate() {
        let sub = dir.path().join(format!("r{k}"));
        std::fs::create_dir(&sub).unwrap();
        let path = sub.join("run.cfg");
        std::fs::write(&path, cfg).unwrap();
        let status = Command::new(env!("CARGO_BIN_EXE_qshyp"))
            .args(["--threads", threads, "run"])
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("run exited with {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)));
        }
        outputs.push((
            std::fs::read(sub.join("diag.csv")).unwrap(),
            std::fs::read(sub.join("final.chk")).unwrap(),
        ));
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    verdict(
        same,
        format!("CSV {} bytes, checkpoint {} bytes identical across 1/4/4 threads: {same}", outputs[0].0.len(), outputs[0].1.len()),
    )
}

fn main() {
    let criteria: [(usize, &str, fn() -> Check); 12] = [
        (1, "energy conservation", c1_energy_conservation),
        (2, "Λ-balance", c2_lambda_balance),
        (3, "constraint preservation", c3_constraints),
        (4, "linear wave oracle", c4_linear_wave),
        (5, "helicity and circulation", c5_helicity_circulation),
        (6, "extended vorticity sign", c6_vorticity_sign),
        (7, "potential audit", c7_potential_audit),
        (8, "gradient correctness", c8_gradients),
        (9, "weak-strong uniqueness", c9_weak_strong),
        (10, "defect vanishing", c10_defect),
        (11, "weak-form consistency", c11_weak_form),
        (12, "determinism", c12_determinism),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {id:>2} {tag} {name} [{secs:.1}s]: {detail}");
    }
    if failures > 0 {
        println!("acceptance: {failures} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria passed");
}
