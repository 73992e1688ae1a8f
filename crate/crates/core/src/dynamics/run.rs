use super::{Dynamics, SpectralState};
use crate::error::{Error, Result};
use crate::spectral::Grid;

/// Time-integration settings; snapshots are spaced in simulation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub t_end: f64,
    pub snapshot_interval: f64,
    pub cfl_safety: f64,
    /// Upper bound on the step; the CFL step is used when absent.
    pub dt: Option<f64>,
}

impl RunSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidInput(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.snapshot_interval > 0.0 && self.snapshot_interval.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "snapshot interval must be positive, got {}",
                self.snapshot_interval
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "CFL safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
            }
        }
        Ok(())
    }

    /// Snapshot times `0, h, 2h, …, t_end`.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let mut times = vec![0.0];
        if self.t_end == 0.0 {
            return times;
        }
        let intervals = (self.t_end / self.snapshot_interval - 1e-9).ceil().max(1.0) as usize;
        for k in 1..intervals {
            times.push(k as f64 * self.snapshot_interval);
        }
        times.push(self.t_end);
        times
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed,
    BlowUp { t: f64, reason: String },
}

/// Snapshots of one run, in time order.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<SpectralState>,
    pub outcome: Outcome,
    pub steps: usize,
    pub dealias_potential: bool,
}

impl Trajectory {
    pub fn from_snapshots(snapshots: Vec<SpectralState>) -> Self {
        Trajectory {
            snapshots,
            outcome: Outcome::Completed,
            steps: 0,
            dealias_potential: false,
        }
    }

    pub fn grid(&self) -> Grid {
        self.snapshots[0].grid()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &SpectralState {
        self.snapshots.last().expect("trajectory has a snapshot")
    }

    pub fn completed(&self) -> bool {
        self.outcome == Outcome::Completed
    }

    /// The common spacing of the snapshot times, if there is one.
    pub fn uniform_spacing(&self) -> Option<f64> {
        let t = self.times();
        if t.len() < 2 {
            return None;
        }
        let h = t[1] - t[0];
        let ok = t
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1e-300));
        ok.then_some(h)
    }
}

/// Integrates from the initial state, recording a snapshot at each
/// multiple of the snapshot interval and at `t_end`.
///
/// Within each interval the step is the largest `interval / m` not
/// exceeding the CFL (or configured) step. A blow-up stops the run and is
/// recorded in [`Trajectory::outcome`]; the snapshots up to that point are kept.
pub fn run(dynamics: &Dynamics, initial: SpectralState, settings: &RunSettings) -> Result<Trajectory> {
    settings.validate()?;
    let times = settings.snapshot_times();
    let mut state = initial;
    state.t = 0.0;
    let mut traj = Trajectory {
        snapshots: vec![state.clone()],
        outcome: Outcome::Completed,
        steps: 0,
        dealias_potential: dynamics.dealias_potential,
    };
    for pair in times.windows(2) {
        let (t0, t1) = (pair[0], pair[1]);
        let span = t1 - t0;
        let bound = match settings.dt {
            Some(dt) => dt,
            None => dynamics.cfl_dt(&state, settings.cfl_safety)?,
        };
        let nsteps = (span / bound - 1e-9).ceil().max(1.0) as usize;
        let dt = span / nsteps as f64;
        for _ in 0..nsteps {
            match dynamics.step_rk4(&state, dt) {
                Ok(next) => state = next,
                Err(Error::BlowUp { t, reason }) => {
                    traj.outcome = Outcome::BlowUp { t, reason };
                    return Ok(traj);
                }
                Err(e) => return Err(e),
            }
            traj.steps += 1;
        }
        state.t = t1;
        traj.snapshots.push(state.clone());
    }
    Ok(traj)
}
