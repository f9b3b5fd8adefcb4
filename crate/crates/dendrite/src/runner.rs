//! Drives a configured run: initial state, time loop, and the snapshot,
//! series and checkpoint outputs.

use std::path::{Path, PathBuf};

use dendrite_core::analysis::{locate_tip, tip_velocity, TipTrace};
use dendrite_core::scenarios::{build_initial_state, ScenarioKind, SeedLayout};
use dendrite_core::{Error as CoreError, FieldState, Grid, Simulation};

use crate::checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::series::{read_series, SeriesRow, SeriesWriter};
use crate::vtk::write_vtk;

pub const SERIES_FILE: &str = "series.csv";

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub grid: Grid,
    pub state: FieldState,
    pub steps: u64,
    pub rows: Vec<SeriesRow>,
    pub initial_integral: f64,
    pub final_integral: f64,
    pub snapshots: Vec<PathBuf>,
    pub checkpoints: Vec<PathBuf>,
    /// Present when the tip was tracked over enough samples.
    pub tip: Option<TipTrace>,
}

impl RunOutcome {
    /// Relative change of the conserved integral over the run.
    pub fn integral_drift(&self) -> f64 {
        let scale = self.initial_integral.abs().max(f64::MIN_POSITIVE);
        (self.final_integral - self.initial_integral).abs() / scale
    }
}

/// Ray used for tip tracking: explicit config values, else a default per
/// scenario layout (`None` when no single tip is meaningful).
pub fn tip_ray(cfg: &RunConfig) -> Option<(Vec<f64>, Vec<f64>)> {
    let sc = &cfg.scenario;
    let dim = sc.dim();
    let mut axis = vec![0.0; dim];
    let mut origin = vec![0.0; dim];
    match (&sc.seeds, sc.kind) {
        (SeedLayout::Seeds(s), kind) if s.len() == 1 => {
            origin.copy_from_slice(&s[0].center[..dim]);
            if kind == ScenarioKind::SingleColumnar {
                axis[1] = 1.0;
            } else {
                axis[0] = 1.0;
            }
        }
        (SeedLayout::PlanarLayer { .. }, _) => {
            origin[0] = 0.5 * sc.domain_extent[0];
            axis[1] = 1.0;
        }
        _ if cfg.output.tip_axis.is_none() => return None,
        _ => axis[0] = 1.0,
    }
    if let Some(a) = &cfg.output.tip_axis {
        axis.clone_from(a);
    }
    if let Some(o) = &cfg.output.tip_origin {
        origin.clone_from(o);
    }
    Some((axis, origin))
}

/// Step index at which time `t` is reached.
fn step_of(t: f64, dt: f64) -> u64 {
    (t / dt).round().max(0.0) as u64
}

struct Tracker {
    ray: Option<(Vec<f64>, Vec<f64>)>,
    samples: Vec<(f64, f64)>,
}

impl Tracker {
    fn sample(&mut self, state: &FieldState, grid: &Grid) -> Result<(f64, f64)> {
        let Some((axis, origin)) = &self.ray else {
            return Ok((f64::NAN, f64::NAN));
        };
        let pos = match locate_tip(state, grid, axis, origin) {
            Ok(p) => p,
            Err(CoreError::NoInterface) => return Ok((f64::NAN, f64::NAN)),
            Err(e) => return Err(e.into()),
        };
        let vel = match self.samples.last() {
            Some(&(t0, x0)) if state.time > t0 => (pos - x0) / (state.time - t0),
            _ => f64::NAN,
        };
        self.samples.push((state.time, pos));
        Ok((pos, vel))
    }
}

/// Runs `cfg` to its end time, optionally continuing from a checkpoint.
pub fn run(cfg: &RunConfig, resume: Option<&Path>) -> Result<RunOutcome> {
    let sc = &cfg.scenario;
    let grid = sc.grid()?;
    let resolved = sc.resolve_seeds()?;
    let (state, start_steps) = match resume {
        Some(path) => {
            let ck = read_checkpoint(path)?;
            if ck.grid != grid {
                return Err(Error::Checkpoint {
                    path: path.to_path_buf(),
                    reason: "grid does not match the configuration".to_string(),
                });
            }
            (ck.state, ck.steps)
        }
        None => (build_initial_state(sc, &grid)?, 0),
    };
    let mut sim = Simulation::new(grid.clone(), sc.model, cfg.step_control, state)?;
    sim.set_steps(start_steps);

    let out = &cfg.output;
    std::fs::create_dir_all(&out.directory).map_err(|e| Error::io(&out.directory, e))?;
    let series_path = out.directory.join(SERIES_FILE);
    let mut tracker = Tracker {
        ray: tip_ray(cfg),
        samples: Vec::new(),
    };
    let mut series = if resume.is_some() {
        if series_path.exists() {
            tracker.samples = read_series(&series_path)?
                .into_iter()
                .filter(|r| r.time <= sim.state.time && r.tip_position.is_finite())
                .map(|r| (r.time, r.tip_position))
                .collect();
        }
        SeriesWriter::append(&series_path)?
    } else {
        SeriesWriter::create(&series_path)?
    };

    let dt = cfg.step_control.dt;
    let total = step_of(sc.t_end, dt);
    let cadence_steps = |k: u64| step_of(k as f64 * out.series_cadence, dt);
    let snap_steps = |k: u64| out.snapshot_interval.map(|iv| step_of(k as f64 * iv, dt));
    let mut next_row = 0u64;
    while resume.is_some() && cadence_steps(next_row) <= start_steps {
        next_row += 1;
    }
    let mut next_snap = 0u64;
    while snap_steps(next_snap).is_some_and(|s| s < start_steps) {
        next_snap += 1;
    }
    let row_limit = crate::series::expected_rows(sc.t_end, out.series_cadence) as u64;

    let initial_integral = sim.conserved_integral();
    let mut rows = Vec::new();
    let mut snapshots = Vec::new();
    let mut checkpoints = Vec::new();

    loop {
        let s = sim.steps();
        if next_row < row_limit && cadence_steps(next_row) == s {
            let (tip_position, tip_velocity) = tracker.sample(&sim.state, &grid)?;
            let row = SeriesRow {
                time: sim.state.time,
                tip_position,
                tip_velocity,
                conserved_integral: sim.conserved_integral(),
            };
            series.write(&row)?;
            rows.push(row);
            next_row += 1;
        }
        let snapshot_due = s == start_steps || snap_steps(next_snap) == Some(s);
        if snapshot_due || s >= total {
            let path = out.directory.join(format!("snapshot_{s:08}.vtk"));
            if !snapshots.contains(&path) {
                write_vtk(&path, &sim.state, &grid, &sc.model)?;
                snapshots.push(path);
            }
            while snap_steps(next_snap).is_some_and(|t| t <= s) {
                next_snap += 1;
            }
        }
        let checkpoint_due = out
            .checkpoint_interval
            .is_some_and(|iv| s > start_steps && s % iv == 0);
        if checkpoint_due || s >= total {
            let path = out.directory.join(format!("checkpoint_{s:08}.ckpt"));
            if !checkpoints.contains(&path) {
                write_checkpoint(
                    &path,
                    &Checkpoint {
                        grid: grid.clone(),
                        steps: s,
                        rng_seed: sc.rng_seed,
                        rng_word_pos: resolved.rng_word_pos(),
                        state: sim.state.clone(),
                    },
                )?;
                checkpoints.push(path);
            }
        }
        if s >= total {
            break;
        }
        sim.step()?;
    }
    series.flush()?;

    let tip = tip_velocity(&tracker.samples, out.velocity_window).ok();
    Ok(RunOutcome {
        final_integral: sim.conserved_integral(),
        initial_integral,
        steps: sim.steps(),
        state: sim.state,
        grid,
        rows,
        snapshots,
        checkpoints,
        tip,
    })
}
