//! Flat `section.key = value` run configuration.
//!
//! Blank lines and text after `#` are ignored. Every key is optional except
//! `grid.n` and `time.t_end`; unknown or repeated keys are rejected. Paths
//! are resolved against the directory of the configuration file.
//!
//! ```text
//! grid.n = 32
//! grid.dims = 2
//! time.t_end = 1.0
//! potential.a = 1.0
//! initial.kind = taylor_green
//! output.diagnostics = diag.csv
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dynamics::RunSettings;
use crate::error::{Error, Result};
use crate::potential::PotentialParams;
use crate::spectral::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    TaylorGreen,
    RandomBandlimited,
    Manufactured,
    Checkpoint,
}

impl InitialKind {
    pub fn name(self) -> &'static str {
        match self {
            InitialKind::TaylorGreen => "taylor_green",
            InitialKind::RandomBandlimited => "random_bandlimited",
            InitialKind::Manufactured => "manufactured",
            InitialKind::Checkpoint => "checkpoint",
        }
    }
}

impl FromStr for InitialKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "taylor_green" => InitialKind::TaylorGreen,
            "random_bandlimited" => InitialKind::RandomBandlimited,
            "manufactured" => InitialKind::Manufactured,
            "checkpoint" => InitialKind::Checkpoint,
            _ => {
                return Err(format!(
                    "expected taylor_green, random_bandlimited, manufactured or checkpoint, got {s:?}"
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub amp_v: f64,
    pub amp_q: f64,
    pub amp_p: f64,
    /// Largest `|k|` of the random modes.
    pub k_max: usize,
    pub seed: Option<u64>,
    pub checkpoint: Option<PathBuf>,
}

/// Material loop for the circulation column, a circle in the `xy` plane.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    pub markers: usize,
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub samples: usize,
    pub radius: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputConfig {
    pub diagnostics: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub compare: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub dims: usize,
    pub t_end: f64,
    pub snapshot_interval: f64,
    pub cfl_safety: f64,
    pub dt: Option<f64>,
    pub potential: PotentialParams,
    pub initial: InitialConfig,
    pub dealias_potential: bool,
    pub blowup_cap: f64,
    pub loop_cfg: Option<LoopConfig>,
    pub audit: AuditConfig,
    pub output: OutputConfig,
}

const KEYS: &[&str] = &[
    "grid.n",
    "grid.dims",
    "time.t_end",
    "time.snapshot_interval",
    "time.cfl_safety",
    "time.dt",
    "potential.a",
    "potential.b",
    "potential.c",
    "potential.lambda",
    "potential.q",
    "potential.c_bar",
    "initial.kind",
    "initial.amp_v",
    "initial.amp_q",
    "initial.amp_p",
    "initial.k_max",
    "initial.seed",
    "initial.checkpoint",
    "numerics.dealias_potential",
    "numerics.blowup_cap",
    "loop.markers",
    "loop.center",
    "loop.radius",
    "audit.samples",
    "audit.radius",
    "audit.seed",
    "output.diagnostics",
    "output.checkpoint",
    "output.compare",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    errors: Vec<String>,
    base: PathBuf,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    fn get<T: FromStr>(&mut self, key: &str) -> Option<T>
    where
        T::Err: std::fmt::Display,
    {
        let (line, raw) = self.map.get(key)?.clone();
        match raw.parse::<T>() {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.push(format!("{key} (line {line}): cannot parse {raw:?}: {e}"));
                None
            }
        }
    }

    fn or<T: FromStr>(&mut self, key: &str, default: T) -> T
    where
        T::Err: std::fmt::Display,
    {
        self.get(key).unwrap_or(default)
    }

    fn required<T: FromStr>(&mut self, key: &str) -> Option<T>
    where
        T::Err: std::fmt::Display,
    {
        if self.map.contains_key(key) {
            self.get(key)
        } else {
            self.errors.push(format!("{key}: missing required key"));
            None
        }
    }

    fn path(&mut self, key: &str) -> Option<PathBuf> {
        let raw = self.raw(key)?;
        if raw.is_empty() {
            self.errors.push(format!("{key}: empty path"));
            return None;
        }
        Some(self.base.join(raw))
    }

    fn vec3(&mut self, key: &str, default: [f64; 3]) -> [f64; 3] {
        let Some((line, raw)) = self.map.get(key).cloned() else {
            return default;
        };
        let parts: Vec<_> = raw.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match parts.as_slice() {
            [Ok(x), Ok(y), Ok(z)] => [*x, *y, *z],
            _ => {
                self.errors.push(format!("{key} (line {line}): expected three comma-separated numbers, got {raw:?}"));
                default
            }
        }
    }
}

fn strip_quotes(s: &str) -> &str {
    s.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(s)
}

fn tokenize(text: &str, base: &Path) -> Entries {
    let mut map = BTreeMap::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(format!("line {line_no}: expected `key = value`, got {content:?}"));
            continue;
        };
        let key = key.trim().to_string();
        let value = strip_quotes(value.trim()).to_string();
        if !KEYS.contains(&key.as_str()) {
            errors.push(format!("{key} (line {line_no}): unknown key"));
            continue;
        }
        if let Some((first, _)) = map.get(&key) {
            errors.push(format!("{key} (line {line_no}): repeated, first set on line {first}"));
            continue;
        }
        map.insert(key, (line_no, value));
    }
    Entries {
        map,
        errors,
        base: base.to_path_buf(),
    }
}

/// Parses and validates configuration text; relative paths resolve against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<RunConfig> {
    let mut e = tokenize(text, base);

    let n: Option<usize> = e.required("grid.n");
    let dims: usize = e.or("grid.dims", 2);
    let t_end: Option<f64> = e.required("time.t_end");
    let snapshot_interval: f64 = e.or("time.snapshot_interval", 0.1);
    let cfl_safety: f64 = e.or("time.cfl_safety", 0.5);
    let dt: Option<f64> = e.get("time.dt");

    let a = e.or("potential.a", -0.3);
    let b = e.or("potential.b", -4.0);
    let c = e.or("potential.c", 4.0);
    let q = e.or("potential.q", 3.0);
    let audit = AuditConfig {
        samples: e.or("audit.samples", 10_000),
        radius: e.or("audit.radius", 2.0),
        seed: e.or("audit.seed", 0),
    };
    let lambda = e.or("potential.lambda", PotentialParams::default_lambda(a, b, audit.radius));
    let c_bar = e.or("potential.c_bar", PotentialParams::default_c_bar(a, b, c));
    let potential = PotentialParams {
        a,
        b,
        c,
        lambda,
        q,
        c_bar,
    };

    let initial = InitialConfig {
        kind: e.or("initial.kind", InitialKind::TaylorGreen),
        amp_v: e.or("initial.amp_v", 0.1),
        amp_q: e.or("initial.amp_q", 0.05),
        amp_p: e.or("initial.amp_p", 0.05),
        k_max: e.or("initial.k_max", 2),
        seed: e.get("initial.seed"),
        checkpoint: e.path("initial.checkpoint"),
    };
    let dealias_potential = e.or("numerics.dealias_potential", false);
    let blowup_cap: f64 = e.or("numerics.blowup_cap", 1e6);

    let loop_cfg = match e.get::<usize>("loop.markers") {
        Some(markers) => Some(LoopConfig {
            markers,
            center: e.vec3("loop.center", [0.0; 3]),
            radius: e.or("loop.radius", 1.0),
        }),
        None => {
            for key in ["loop.center", "loop.radius"] {
                if e.map.contains_key(key) {
                    e.errors.push(format!("{key}: requires loop.markers"));
                }
            }
            None
        }
    };
    let output = OutputConfig {
        diagnostics: e.path("output.diagnostics"),
        checkpoint: e.path("output.checkpoint"),
        compare: e.path("output.compare"),
    };

    let mut errs = std::mem::take(&mut e.errors);
    if let Some(n) = n {
        if n < 8 || n % 2 != 0 {
            errs.push(format!("grid.n: must be even and >= 8, got {n}"));
        }
    }
    if dims != 2 && dims != 3 {
        errs.push(format!("grid.dims: must be 2 or 3, got {dims}"));
    }
    if let Some(t) = t_end {
        if !(t.is_finite() && t >= 0.0) {
            errs.push(format!("time.t_end: must be finite and >= 0, got {t}"));
        }
    }
    if !(snapshot_interval.is_finite() && snapshot_interval > 0.0) {
        errs.push(format!("time.snapshot_interval: must be > 0, got {snapshot_interval}"));
    }
    if !(cfl_safety > 0.0 && cfl_safety <= 1.0) {
        errs.push(format!("time.cfl_safety: must lie in (0, 1], got {cfl_safety}"));
    }
    if let Some(dt) = dt {
        if !(dt.is_finite() && dt > 0.0) {
            errs.push(format!("time.dt: must be > 0, got {dt}"));
        }
    }
    if let Err(Error::Config(list)) = potential.validate() {
        errs.extend(list);
    }
    for (key, v) in [
        ("initial.amp_v", initial.amp_v),
        ("initial.amp_q", initial.amp_q),
        ("initial.amp_p", initial.amp_p),
    ] {
        if !v.is_finite() {
            errs.push(format!("{key}: must be finite, got {v}"));
        }
    }
    match initial.kind {
        InitialKind::RandomBandlimited | InitialKind::TaylorGreen => {
            if initial.kind == InitialKind::RandomBandlimited && initial.seed.is_none() {
                errs.push("initial.seed: required when initial.kind = random_bandlimited".into());
            }
            if initial.k_max == 0 {
                errs.push("initial.k_max: must be >= 1".into());
            } else if let Some(n) = n {
                if 3 * initial.k_max > n {
                    errs.push(format!(
                        "initial.k_max: must not exceed n/3 = {}, got {}",
                        n / 3,
                        initial.k_max
                    ));
                }
            }
        }
        InitialKind::Checkpoint => {
            if initial.checkpoint.is_none() {
                errs.push("initial.checkpoint: required when initial.kind = checkpoint".into());
            }
        }
        InitialKind::Manufactured => {}
    }
    if !(blowup_cap.is_finite() && blowup_cap > 0.0) {
        errs.push(format!("numerics.blowup_cap: must be > 0, got {blowup_cap}"));
    }
    if let Some(l) = &loop_cfg {
        if l.markers < 16 {
            errs.push(format!("loop.markers: must be >= 16, got {}", l.markers));
        }
        if !(l.radius.is_finite() && l.radius > 0.0) {
            errs.push(format!("loop.radius: must be > 0, got {}", l.radius));
        }
    }
    if audit.samples == 0 {
        errs.push("audit.samples: must be >= 1".into());
    }
    if !(audit.radius.is_finite() && audit.radius > 0.0) {
        errs.push(format!("audit.radius: must be > 0, got {}", audit.radius));
    }

    match (n, t_end) {
        (Some(n), Some(t_end)) if errs.is_empty() => Ok(RunConfig {
            n,
            dims,
            t_end,
            snapshot_interval,
            cfl_safety,
            dt,
            potential,
            initial,
            dealias_potential,
            blowup_cap,
            loop_cfg,
            audit,
            output,
        }),
        _ => Err(Error::Config(errs)),
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base)
}

impl RunConfig {
    pub fn grid(&self) -> Grid {
        Grid::new(self.n, self.dims).expect("validated grid")
    }

    pub fn run_settings(&self) -> RunSettings {
        RunSettings {
            t_end: self.t_end,
            snapshot_interval: self.snapshot_interval,
            cfl_safety: self.cfl_safety,
            dt: self.dt,
        }
    }

    /// The effective configuration, one `key = value` line per setting.
    ///
    /// Parsing the echo yields the same configuration.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let p = &self.potential;
        put("grid.n", self.n.to_string());
        put("grid.dims", self.dims.to_string());
        put("time.t_end", format!("{:?}", self.t_end));
        put("time.snapshot_interval", format!("{:?}", self.snapshot_interval));
        put("time.cfl_safety", format!("{:?}", self.cfl_safety));
        if let Some(dt) = self.dt {
            put("time.dt", format!("{dt:?}"));
        }
        for (k, v) in [
            ("a", p.a),
            ("b", p.b),
            ("c", p.c),
            ("lambda", p.lambda),
            ("q", p.q),
            ("c_bar", p.c_bar),
        ] {
            put(&format!("potential.{k}"), format!("{v:?}"));
        }
        let i = &self.initial;
        put("initial.kind", i.kind.name().to_string());
        put("initial.amp_v", format!("{:?}", i.amp_v));
        put("initial.amp_q", format!("{:?}", i.amp_q));
        put("initial.amp_p", format!("{:?}", i.amp_p));
        put("initial.k_max", i.k_max.to_string());
        if let Some(seed) = i.seed {
            put("initial.seed", seed.to_string());
        }
        if let Some(path) = &i.checkpoint {
            put("initial.checkpoint", path.display().to_string());
        }
        put("numerics.dealias_potential", self.dealias_potential.to_string());
        put("numerics.blowup_cap", format!("{:?}", self.blowup_cap));
        if let Some(l) = &self.loop_cfg {
            put("loop.markers", l.markers.to_string());
            put(
                "loop.center",
                format!("{:?}, {:?}, {:?}", l.center[0], l.center[1], l.center[2]),
            );
            put("loop.radius", format!("{:?}", l.radius));
        }
        put("audit.samples", self.audit.samples.to_string());
        put("audit.radius", format!("{:?}", self.audit.radius));
        put("audit.seed", self.audit.seed.to_string());
        for (k, v) in [
            ("diagnostics", &self.output.diagnostics),
            ("checkpoint", &self.output.checkpoint),
            ("compare", &self.output.compare),
        ] {
            if let Some(path) = v {
                put(&format!("output.{k}"), path.display().to_string());
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        parse_config_str(text, Path::new("/base"))
    }

    fn errors(text: &str) -> Vec<String> {
        match parse(text) {
            Err(Error::Config(list)) => list,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = parse("grid.n = 16\ntime.t_end = 0.5\n").unwrap();
        assert_eq!((cfg.n, cfg.dims), (16, 2));
        assert_eq!(cfg.initial.kind, InitialKind::TaylorGreen);
        assert_eq!((cfg.potential.a, cfg.potential.b, cfg.potential.c), (-0.3, -4.0, 4.0));
        assert_eq!(cfg.potential.c_bar, PotentialParams::default_c_bar(-0.3, -4.0, 4.0));
        assert!((cfg.potential.lambda - 8.15).abs() < 1e-12);
        assert!(cfg.output.diagnostics.is_none());
        let echo = cfg.echo();
        assert!(echo.contains("grid.n = 16\n"));
        assert!(echo.contains("initial.kind = taylor_green\n"));
    }

    #[test]
    fn echo_round_trips() {
        let text = "grid.n = 24\ngrid.dims = 3\ntime.t_end = 0.3\ntime.dt = 0.001\n\
                    potential.b = -0.5\ninitial.kind = random_bandlimited\ninitial.seed = 7\n\
                    loop.markers = 64\nloop.center = 0.1, 0.2, 0.3\noutput.diagnostics = out/d.csv\n";
        let cfg = parse(text).unwrap();
        assert_eq!(cfg.output.diagnostics.as_deref(), Some(Path::new("/base/out/d.csv")));
        let again = parse(&cfg.echo()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn comments_and_quotes() {
        let cfg = parse("# header\ngrid.n = 8 # small\n\ntime.t_end = \"1.5\"\n").unwrap();
        assert_eq!(cfg.n, 8);
        assert_eq!(cfg.t_end, 1.5);
    }

    #[test]
    fn odd_n_names_the_constraint() {
        let errs = errors("grid.n = 15\ntime.t_end = 1\n");
        assert_eq!(errs.len(), 1);
        assert!(errs[0].starts_with("grid.n") && errs[0].contains("even"));
    }

    #[test]
    fn nonpositive_c_cites_the_assumptions() {
        let errs = errors("grid.n = 16\ntime.t_end = 1\npotential.c = 0\n");
        assert!(errs.iter().any(|e| e.starts_with("potential.c") && e.contains("convexity and growth")));
        let errs = errors("grid.n = 16\ntime.t_end = 1\npotential.c = -1\n");
        assert!(errs.iter().any(|e| e.starts_with("potential.c:")));
    }

    #[test]
    fn errors_are_itemized() {
        let errs = errors("grid.dims = 4\ntime.cfl_safety = 2\nfoo.bar = 1\ngrid.dims = 3\ninitial.amp_v = x\n");
        let has = |p: &str| errs.iter().any(|e| e.starts_with(p));
        assert!(has("grid.n: missing"));
        assert!(has("time.t_end: missing"));
        assert!(has("foo.bar (line 3): unknown key"));
        assert!(has("grid.dims (line 4): repeated"));
        assert!(has("initial.amp_v (line 5): cannot parse"));
        assert!(has("grid.dims: must be 2 or 3"));
        assert!(has("time.cfl_safety"));
    }

    #[test]
    fn kind_specific_requirements() {
        let errs = errors("grid.n = 16\ntime.t_end = 1\ninitial.kind = random_bandlimited\n");
        assert!(errs.iter().any(|e| e.starts_with("initial.seed")));
        let errs = errors("grid.n = 16\ntime.t_end = 1\ninitial.kind = checkpoint\n");
        assert!(errs.iter().any(|e| e.starts_with("initial.checkpoint")));
        let errs = errors("grid.n = 16\ntime.t_end = 1\ninitial.k_max = 6\n");
        assert!(errs.iter().any(|e| e.starts_with("initial.k_max")));
        let errs = errors("grid.n = 16\ntime.t_end = 1\ninitial.kind = spiral\n");
        assert!(errs.iter().any(|e| e.starts_with("initial.kind")));
        let errs = errors("grid.n = 16\ntime.t_end = 1\nloop.radius = 1\n");
        assert!(errs.iter().any(|e| e.starts_with("loop.radius: requires")));
    }
}
