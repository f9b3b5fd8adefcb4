//! Multi-run studies: tip-velocity validation and mesh-convergence sweeps.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use dendrite_core::analysis::{
    error_norms, percent_error, restrict_to_coarse, transfer_to_grid, ErrorEntry, ErrorReport,
    TipTrace,
};
use dendrite_core::scenarios::Symmetry;
use dendrite_core::stepper::stable_dt;
use dendrite_core::{Error as CoreError, Model, StepMode};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::runner::{run, RunOutcome};

/// Reference tip velocity used when none is given.
pub const DEFAULT_REFERENCE_VELOCITY: f64 = 0.0469;
/// Comparison time of the field-norm study.
pub const DEFAULT_COMPARE_TIME: f64 = 450.0;
pub const DEFAULT_REFERENCE_DX: f64 = 0.25;

/// How tip velocities are reported.
///
/// `Capillary` multiplies by `d0 / D` with `d0 = a1 lambda0 / xi`, the
/// dimensionless growth rate that sharp-interface solvability results are
/// usually quoted in. `Raw` is the velocity in interface widths per
/// relaxation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityScale {
    Raw,
    Capillary,
}

/// Coefficient `a1` relating the interface width to the capillary length.
pub const A1: f64 = 0.8839;

impl VelocityScale {
    pub fn factor(self, model: &Model) -> Result<f64> {
        match (self, model) {
            (VelocityScale::Raw, _) => Ok(1.0),
            (VelocityScale::Capillary, Model::PureMelt(p)) => Ok(A1 * p.lambda0 / p.xi / p.d),
            (VelocityScale::Capillary, Model::Alloy(_)) => Err(pure_melt_only()),
        }
    }
}

fn pure_melt_only() -> Error {
    Error::config(
        "params",
        "tip velocity validation is defined for pure-melt runs only",
    )
}

#[derive(Debug, Clone)]
pub struct TipvelReport {
    pub trace: TipTrace,
    /// Equilibrium velocity in the requested scale.
    pub velocity: f64,
    pub reference: f64,
    pub error_percent: f64,
    pub scale: VelocityScale,
    pub outcome: RunOutcome,
}

/// Runs the configured pure-melt case, measures the equilibrium tip
/// velocity and compares it with `v_ref`. Writes `tip_velocity.csv` to the
/// output directory.
pub fn tipvel(cfg: &RunConfig, v_ref: f64, scale: VelocityScale) -> Result<TipvelReport> {
    if cfg.model().is_alloy() {
        return Err(pure_melt_only());
    }
    if !(v_ref > 0.0 && v_ref.is_finite()) {
        return Err(Error::config("reference_velocity", "must be positive"));
    }
    let factor = scale.factor(&cfg.model())?;
    let outcome = run(cfg, None)?;
    let trace = outcome.tip.clone().ok_or_else(|| {
        Error::Numerical(CoreError::InsufficientData(
            "not enough tip samples for an equilibrium velocity; lengthen the run or shrink the window".into(),
        ))
    })?;
    let path = cfg.output.directory.join("tip_velocity.csv");
    write_velocity_csv(&path, &trace, factor)?;
    let velocity = trace.equilibrium_velocity * factor;
    Ok(TipvelReport {
        error_percent: percent_error(velocity, v_ref),
        velocity,
        reference: v_ref,
        scale,
        trace,
        outcome,
    })
}

fn write_velocity_csv(path: &Path, trace: &TipTrace, factor: f64) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let io = |e| Error::io(path, e);
    writeln!(w, "time,tip_position,tip_velocity").map_err(io)?;
    for ((t, x), (_, v)) in trace.samples.iter().zip(&trace.velocities) {
        writeln!(w, "{t:.9e},{x:.9e},{:.9e}", v * factor).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergeMode {
    Tip,
    Norms,
}

#[derive(Debug, Clone)]
pub struct ConvergeOptions {
    pub dx_list: Vec<f64>,
    pub mode: ConvergeMode,
    /// Tip mode: reference velocity and reporting scale.
    pub reference_velocity: f64,
    pub scale: VelocityScale,
    /// Norms mode: reference resolution and comparison time.
    pub reference_dx: f64,
    pub compare_time: f64,
    /// Common time step; defaults to the stable step of the finest grid.
    pub dt: Option<f64>,
}

impl ConvergeOptions {
    pub fn new(dx_list: Vec<f64>, mode: ConvergeMode) -> Self {
        ConvergeOptions {
            dx_list,
            mode,
            reference_velocity: DEFAULT_REFERENCE_VELOCITY,
            scale: VelocityScale::Capillary,
            reference_dx: DEFAULT_REFERENCE_DX,
            compare_time: DEFAULT_COMPARE_TIME,
            dt: None,
        }
    }
}

/// Time step shared by every run of a sweep: the explicit bound of the
/// finest grid, scaled by the configured safety factor.
pub fn common_dt(cfg: &RunConfig, finest_dx: f64) -> Result<f64> {
    let mut sc = cfg.scenario.clone();
    sc.dx = finest_dx;
    let grid = sc.grid()?;
    let bound = stable_dt(&grid, &sc.model, cfg.step_control.safety);
    Ok(match cfg.step_control.mode {
        StepMode::Explicit => bound.min(cfg.step_control.dt),
        StepMode::SemiImplicit => cfg.step_control.dt,
    })
}

fn with_resolution(cfg: &RunConfig, dx: f64, dt: f64, t_end: f64, tag: &str) -> RunConfig {
    let mut c = cfg.clone();
    c.scenario.dx = dx;
    c.scenario.dt = dt;
    c.scenario.t_end = t_end;
    c.step_control.dt = dt;
    c.output.directory = cfg.output.directory.join(format!("{tag}_dx{dx}"));
    c.output.snapshot_interval = None;
    c.output.checkpoint_interval = None;
    c
}

/// Runs one simulation per entry of `dx_list` and fits convergence rates.
/// Writes `convergence.csv` to the output directory.
pub fn converge(cfg: &RunConfig, opts: &ConvergeOptions) -> Result<ErrorReport> {
    if opts.dx_list.len() < 2 {
        return Err(Error::config(
            "dx_list",
            "a convergence fit needs at least two resolutions",
        ));
    }
    if opts.dx_list.iter().any(|&dx| !(dx > 0.0 && dx.is_finite())) {
        return Err(Error::config("dx_list", "resolutions must be positive"));
    }
    let finest = opts.dx_list.iter().copied().fold(f64::INFINITY, f64::min);
    let entries = match opts.mode {
        ConvergeMode::Tip => {
            if cfg.model().is_alloy() {
                return Err(pure_melt_only());
            }
            let dt = match opts.dt {
                Some(dt) => dt,
                None => common_dt(cfg, finest)?,
            };
            let mut entries = Vec::new();
            for &dx in &opts.dx_list {
                let c = with_resolution(cfg, dx, dt, cfg.scenario.t_end, "tip");
                let r = tipvel(&c, opts.reference_velocity, opts.scale)?;
                entries.push(ErrorEntry::Tip {
                    dx,
                    velocity: r.velocity,
                    tip_error_percent: r.error_percent,
                });
            }
            entries
        }
        ConvergeMode::Norms => {
            let href = opts.reference_dx;
            if opts.dx_list.iter().any(|&dx| dx <= href) {
                return Err(Error::config(
                    "reference_dx",
                    "must be finer than every entry of dx_list",
                ));
            }
            let dt = match opts.dt {
                Some(dt) => dt,
                None => common_dt(cfg, href)?,
            };
            let reference = run(
                &with_resolution(cfg, href, dt, opts.compare_time, "reference"),
                None,
            )?;
            // Norms over a quarter domain stand for the full symmetric field.
            let sym = match cfg.scenario.symmetry {
                Symmetry::Full => 1.0,
                Symmetry::Quadrant => ((1usize << cfg.scenario.dim()) as f64).sqrt(),
            };
            let mut entries = Vec::new();
            for &dx in &opts.dx_list {
                let r = run(
                    &with_resolution(cfg, dx, dt, opts.compare_time, "norms"),
                    None,
                )?;
                let ratio = dx / href;
                let nested = (ratio - ratio.round()).abs() < 1e-9;
                let refd = if nested {
                    restrict_to_coarse(&reference.state, &reference.grid, &r.grid)?
                } else {
                    transfer_to_grid(&reference.state, &reference.grid, &r.grid)?
                };
                let norms = error_norms(&r.state, &refd, &r.grid)?.scaled(sym);
                entries.push(ErrorEntry::Norms { dx, norms });
            }
            entries
        }
    };
    let report = ErrorReport::new(entries)?;
    std::fs::create_dir_all(&cfg.output.directory)
        .map_err(|e| Error::io(&cfg.output.directory, e))?;
    write_report(&cfg.output.directory.join("convergence.csv"), &report)?;
    Ok(report)
}

/// Writes the per-resolution errors followed by the fitted rates.
pub fn write_report(path: &Path, report: &ErrorReport) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let io = |e| Error::io(path, e);
    writeln!(w, "kind,dx,quantity,value").map_err(io)?;
    for e in &report.entries {
        match e {
            ErrorEntry::Tip {
                dx,
                velocity,
                tip_error_percent,
            } => {
                writeln!(w, "entry,{dx},tip_velocity,{velocity:.9e}").map_err(io)?;
                writeln!(w, "entry,{dx},tip_error_percent,{tip_error_percent:.9e}").map_err(io)?;
            }
            ErrorEntry::Norms { dx, norms } => {
                for (name, v) in [
                    ("l2_u", norms.l2_u),
                    ("h1_u", norms.h1_u),
                    ("l2_phi", norms.l2_phi),
                    ("h1_phi", norms.h1_phi),
                ] {
                    writeln!(w, "entry,{dx},{name},{v:.9e}").map_err(io)?;
                }
            }
        }
    }
    for fit in &report.fits {
        writeln!(w, "slope,,{},{:.9e}", fit.quantity, fit.slope).map_err(io)?;
        writeln!(w, "intercept,,{},{:.9e}", fit.quantity, fit.intercept).map_err(io)?;
    }
    w.flush().map_err(io)
}
