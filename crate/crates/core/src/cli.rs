//! Command-line driver.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure or blow-up,
//! 3 validation failure (invalid configuration, failed potential audit,
//! failed or unresolved Gronwall comparison).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use crate::diagnostics::{
    circle_loop, defect_estimate, gronwall_check, trajectory_records, GronwallOptions, RecordOptions,
};
use crate::dynamics::{run, Dynamics, ManufacturedSolution, Outcome, RunSettings, SpectralState, Trajectory};
use crate::error::{Error, Result};
use crate::io::checkpoint::write_atomic;
use crate::io::config::{InitialKind, RunConfig};
use crate::io::csv::{format_comparison, number};
use crate::io::{checkpoint_header, checkpoint_save, make_initial_data, parse_config, write_diagnostics};
use crate::potential::check_assumptions;
use crate::spectral::Spectral;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qshyp", version, about = "Inviscid Q-tensor hydrodynamics on the periodic torus")]
struct Cli {
    /// Worker threads for the parallel kernels (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a configuration and write diagnostics and the final checkpoint.
    Run { config: PathBuf },
    /// Audit isotropy, convexity and growth of the configured potential.
    CheckPotential { config: PathBuf },
    /// Compare two runs: relative energy, Gronwall envelope and defect estimates.
    Compare {
        config_a: PathBuf,
        config_b: PathBuf,
        /// Comparison CSV (default: output.compare of the first configuration).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fixed Gronwall constant instead of the fitted one.
        #[arg(long)]
        gronwall_c: Option<f64>,
    },
    /// Time-step convergence table (exact error for manufactured data, successive differences otherwise).
    Convergence {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Print a checkpoint header.
    Info { checkpoint: PathBuf },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Unresolved(_) => EXIT_VALIDATION,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    dispatch_to(args, &mut out, &mut err)
}

/// [`dispatch`] with explicit output streams.
pub fn dispatch_to<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start thread pool: {e}");
            return EXIT_RUNTIME;
        }
    };
    let mut buf: Vec<u8> = Vec::new();
    let result = pool.install(|| {
        let o = &mut buf;
        match &cli.command {
            Command::Run { config } => cmd_run(config, o),
            Command::CheckPotential { config } => cmd_check_potential(config, o),
            Command::Compare {
                config_a,
                config_b,
                out: path,
                gronwall_c,
            } => cmd_compare(config_a, config_b, path.as_deref(), *gronwall_c, o),
            Command::Convergence { config, levels } => cmd_convergence(config, *levels, o),
            Command::Info { checkpoint } => cmd_info(checkpoint, o),
        }
    });
    let _ = out.write_all(&buf);
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dynamics_for(cfg: &RunConfig) -> Dynamics {
    let mut d = Dynamics::new(cfg.grid());
    d.dealias_potential = cfg.dealias_potential;
    d.blowup_cap = cfg.blowup_cap;
    if cfg.initial.kind == InitialKind::Manufactured {
        let i = &cfg.initial;
        let mms = ManufacturedSolution::new(&d, cfg.potential, [i.amp_v, i.amp_q, i.amp_p]);
        d = d.with_forcing(Arc::new(mms));
    }
    d
}

fn integrate(cfg: &RunConfig, settings: &RunSettings) -> Result<(Dynamics, Trajectory)> {
    let dynamics = dynamics_for(cfg);
    let initial = make_initial_data(cfg)?;
    let traj = run(&dynamics, initial, settings)?;
    Ok((dynamics, traj))
}

fn outcome_line(traj: &Trajectory) -> String {
    match &traj.outcome {
        Outcome::Completed => format!("outcome: completed at t = {} after {} steps", number(traj.last().t), traj.steps),
        Outcome::BlowUp { t, reason } => format!("outcome: blow-up at t = {}: {reason}", number(*t)),
    }
}

fn cmd_run(path: &Path, out: &mut Vec<u8>) -> Result<i32> {
    let cfg = parse_config(path)?;
    let mut text = format!("# effective configuration\n{}", cfg.echo());
    let (dynamics, traj) = integrate(&cfg, &cfg.run_settings())?;
    let loop_markers = cfg
        .loop_cfg
        .as_ref()
        .map(|l| circle_loop(l.markers, l.center, l.radius, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]));
    let (records, history) = trajectory_records(&dynamics, &traj, &RecordOptions { loop_markers })?;
    if let Some(p) = &cfg.output.diagnostics {
        write_diagnostics(&records, p)?;
    }
    if let Some(p) = &cfg.output.checkpoint {
        checkpoint_save(traj.last(), p)?;
    }
    let (first, last) = (&records[0], &records[records.len() - 1]);
    let _ = writeln!(text, "{}", outcome_line(&traj));
    let _ = writeln!(text, "snapshots: {}", records.len());
    let _ = writeln!(text, "E_total_G: {} -> {}", number(first.e_total_g), number(last.e_total_g));
    let _ = writeln!(text, "E_total_F: {} -> {}", number(first.e_total_f), number(last.e_total_f));
    if let Some(h) = history {
        if h.under_resolved {
            let _ = writeln!(text, "warning: material loop became under-resolved");
        }
    }
    let _ = out.write_all(text.as_bytes());
    Ok(if traj.completed() { EXIT_OK } else { EXIT_RUNTIME })
}

fn cmd_check_potential(path: &Path, out: &mut Vec<u8>) -> Result<i32> {
    let cfg = parse_config(path)?;
    let a = &cfg.audit;
    let report = check_assumptions(&cfg.potential, a.samples, a.radius, a.seed)?;
    let _ = out.write_all(report.to_text().as_bytes());
    Ok(if report.passed() { EXIT_OK } else { EXIT_VALIDATION })
}

fn cmd_compare(
    path_a: &Path,
    path_b: &Path,
    out_path: Option<&Path>,
    gronwall_c: Option<f64>,
    out: &mut Vec<u8>,
) -> Result<i32> {
    let cfg_a = parse_config(path_a)?;
    let cfg_b = parse_config(path_b)?;
    if cfg_a.dims != cfg_b.dims
        || cfg_a.t_end != cfg_b.t_end
        || cfg_a.snapshot_interval != cfg_b.snapshot_interval
    {
        return Err(Error::InvalidInput(
            "compared configurations must share grid.dims, time.t_end and time.snapshot_interval".into(),
        ));
    }
    let (_, traj_a) = integrate(&cfg_a, &cfg_a.run_settings())?;
    let (_, traj_b) = integrate(&cfg_b, &cfg_b.run_settings())?;
    let mut text = String::new();
    let _ = writeln!(text, "A {}", outcome_line(&traj_a));
    let _ = writeln!(text, "B {}", outcome_line(&traj_b));
    if !(traj_a.completed() && traj_b.completed()) {
        let _ = out.write_all(text.as_bytes());
        return Ok(EXIT_RUNTIME);
    }
    let (candidate, strong) = if traj_a.grid().n() > traj_b.grid().n() {
        (&traj_b, &traj_a)
    } else {
        (&traj_a, &traj_b)
    };
    let opts = GronwallOptions {
        constant: gronwall_c,
        ..GronwallOptions::default()
    };
    let mut code = EXIT_OK;
    let series = match gronwall_check(candidate, strong, &opts) {
        Ok(s) => Some(s),
        Err(e @ Error::Unresolved(_)) => {
            let _ = writeln!(text, "gronwall: {e}");
            code = EXIT_VALIDATION;
            None
        }
        Err(e) => return Err(e),
    };
    let defect = match defect_estimate(candidate, strong) {
        Ok(d) => Some(d),
        Err(e @ Error::InvalidInput(_)) => {
            let _ = writeln!(text, "defect: skipped: {e}");
            None
        }
        Err(e) => return Err(e),
    };
    let max = |v: &[f64]| v.iter().copied().fold(0.0_f64, f64::max);
    if let Some(s) = &series {
        let _ = writeln!(text, "relative_energy_max: {}", number(max(&s.relative_energy)));
        let _ = writeln!(text, "gronwall_constant: {}", number(s.constant));
        let _ = writeln!(text, "gronwall_pass: {}", s.pass);
        if !s.pass {
            code = EXIT_VALIDATION;
        }
    }
    if let Some(d) = &defect {
        let _ = writeln!(text, "R1_max: {}", number(max(&d.r1)));
        let _ = writeln!(text, "R2_max: {}", number(max(&d.r2)));
        let _ = writeln!(text, "D_max: {}", number(max(&d.dissipation)));
        let _ = writeln!(text, "ddi_constant: {}", number(d.ddi_constant));
    }
    if let Some(p) = out_path.map(Path::to_path_buf).or(cfg_a.output.compare.clone()) {
        let csv = format_comparison(&strong.times(), series.as_ref(), defect.as_ref());
        write_atomic(&p, csv.as_bytes())?;
    }
    let _ = out.write_all(text.as_bytes());
    Ok(code)
}

fn l2_distance(sp: &Spectral, a: &SpectralState, b: &SpectralState) -> f64 {
    let mut d = a.v.sub(&b.v).norm_sq_density();
    for (x, y) in d
        .iter_mut()
        .zip(a.q.sub(&b.q).norm_sq_density().into_iter().zip(a.p.sub(&b.p).norm_sq_density()))
    {
        *x += y.0 + y.1;
    }
    sp.integrate(&d).sqrt()
}

fn cmd_convergence(path: &Path, levels: usize, out: &mut Vec<u8>) -> Result<i32> {
    let cfg = parse_config(path)?;
    let min_levels = if cfg.initial.kind == InitialKind::Manufactured { 2 } else { 3 };
    if levels < min_levels {
        return Err(Error::InvalidInput(format!("convergence needs at least {min_levels} levels")));
    }
    let dynamics = dynamics_for(&cfg);
    let initial = make_initial_data(&cfg)?;
    let bound = match cfg.dt {
        Some(dt) => dt,
        None => dynamics.cfl_dt(&initial, cfg.cfl_safety)?,
    };
    let h = cfg.snapshot_interval.min(cfg.t_end.max(f64::MIN_POSITIVE));
    let base_steps = (h / bound - 1e-9).ceil().max(1.0);
    let mut finals = Vec::new();
    let mut dts = Vec::new();
    for l in 0..levels {
        let dt = h / (base_steps * f64::powi(2.0, l as i32));
        let settings = RunSettings {
            dt: Some(dt),
            ..cfg.run_settings()
        };
        let traj = run(&dynamics, initial.clone(), &settings)?;
        if !traj.completed() {
            let _ = writeln!(out, "{}", outcome_line(&traj));
            return Ok(EXIT_RUNTIME);
        }
        finals.push(traj.last().clone());
        dts.push(dt);
    }
    let sp = dynamics.spectral();
    let mut text = String::new();
    let errors: Vec<f64> = if cfg.initial.kind == InitialKind::Manufactured {
        let i = &cfg.initial;
        let mms = ManufacturedSolution::new(&dynamics, cfg.potential, [i.amp_v, i.amp_q, i.amp_p]);
        let exact = mms.state(cfg.t_end);
        let _ = writeln!(text, "# error against the manufactured solution at t = {}", number(cfg.t_end));
        finals.iter().map(|s| l2_distance(sp, s, &exact)).collect()
    } else {
        let _ = writeln!(text, "# difference to the next finer level at t = {}", number(cfg.t_end));
        dts.pop();
        finals.windows(2).map(|w| l2_distance(sp, &w[0], &w[1])).collect()
    };
    let _ = writeln!(text, "dt,error,order");
    for (k, (dt, e)) in dts.iter().zip(&errors).enumerate() {
        let order = if k > 0 && e > &0.0 && errors[k - 1] > 0.0 {
            number((errors[k - 1] / e).log2())
        } else {
            String::new()
        };
        let _ = writeln!(text, "{},{},{}", number(*dt), number(*e), order);
    }
    let _ = out.write_all(text.as_bytes());
    Ok(EXIT_OK)
}

fn cmd_info(path: &Path, out: &mut Vec<u8>) -> Result<i32> {
    let h = checkpoint_header(path)?;
    let p = &h.params;
    let mut text = String::new();
    let _ = writeln!(text, "format_version: {}", h.version);
    let _ = writeln!(text, "n: {}", h.n);
    let _ = writeln!(text, "dims: {}", h.dims);
    let _ = writeln!(text, "t: {}", number(h.t));
    for (k, v) in [("a", p.a), ("b", p.b), ("c", p.c), ("lambda", p.lambda), ("q", p.q), ("c_bar", p.c_bar)] {
        let _ = writeln!(text, "{k}: {}", number(v));
    }
    let _ = writeln!(text, "basis_id: {}", h.basis_id);
    let _ = writeln!(text, "payload_bytes: {}", h.payload_len());
    let _ = out.write_all(text.as_bytes());
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = dispatch_to(std::iter::once("qshyp").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn usage_errors_exit_one() {
        let (code, _, err) = call(&["frobnicate"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("Usage"));
        assert_eq!(call(&[]).0, EXIT_USAGE);
        assert_eq!(call(&["run"]).0, EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("check-potential"));
    }

    #[test]
    fn missing_files_are_runtime_errors() {
        assert_eq!(call(&["run", "/nonexistent/run.cfg"]).0, EXIT_RUNTIME);
        assert_eq!(call(&["info", "/nonexistent/x.chk"]).0, EXIT_RUNTIME);
    }

    #[test]
    fn invalid_config_is_a_validation_failure() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.cfg");
        std::fs::write(&p, "grid.n = 15\ntime.t_end = 1\n").unwrap();
        let (code, _, err) = call(&["run", p.to_str().unwrap()]);
        assert_eq!(code, EXIT_VALIDATION);
        assert!(err.contains("grid.n"));
    }
}
