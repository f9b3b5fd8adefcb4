//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use dendrite_core::analysis::ErrorEntry;
use dendrite_core::grid::FieldState;

use crate::checkpoint::read_checkpoint;
use crate::config::load_config;
use crate::error::{Error, Result};
use crate::runner::run;
use crate::sweeps::{
    converge, tipvel, ConvergeMode, ConvergeOptions, VelocityScale, DEFAULT_COMPARE_TIME,
    DEFAULT_REFERENCE_DX, DEFAULT_REFERENCE_VELOCITY,
};

#[derive(Debug, Parser)]
#[command(
    name = "dendrite",
    version,
    about = "Phase-field simulation of dendritic solidification"
)]
pub struct Cli {
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a configured simulation to its end time.
    Run {
        config: PathBuf,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Measure the equilibrium tip velocity of a pure-melt run.
    Tipvel {
        config: PathBuf,
        #[arg(long, default_value_t = DEFAULT_REFERENCE_VELOCITY)]
        reference_velocity: f64,
        #[arg(long, value_enum, default_value_t = Scale::Capillary)]
        scale: Scale,
    },
    /// Mesh-refinement study with fitted convergence rates.
    Converge {
        config: PathBuf,
        /// Grid spacings, e.g. `--dx 2.0,1.4,1.0`.
        #[arg(long, value_delimiter = ',', required = true)]
        dx: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Mode::Norms)]
        mode: Mode,
        #[arg(long, default_value_t = DEFAULT_REFERENCE_VELOCITY)]
        reference_velocity: f64,
        #[arg(long, value_enum, default_value_t = Scale::Capillary)]
        scale: Scale,
        #[arg(long, default_value_t = DEFAULT_REFERENCE_DX)]
        reference_dx: f64,
        #[arg(long, default_value_t = DEFAULT_COMPARE_TIME)]
        compare_time: f64,
        /// Time step shared by all runs.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Compare two checkpoints node by node.
    Compare { a: PathBuf, b: PathBuf },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Tip,
    Norms,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Scale {
    /// Interface widths per relaxation time.
    Raw,
    /// Scaled by the capillary length over the diffusivity.
    Capillary,
}

impl From<Scale> for VelocityScale {
    fn from(s: Scale) -> Self {
        match s {
            Scale::Raw => VelocityScale::Raw,
            Scale::Capillary => VelocityScale::Capillary,
        }
    }
}

/// Largest absolute nodal differences between two states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDiff {
    pub max_scalar: f64,
    pub max_phi: f64,
    pub time: f64,
}

impl StateDiff {
    pub fn identical(&self) -> bool {
        self.max_scalar == 0.0 && self.max_phi == 0.0 && self.time == 0.0
    }
}

pub fn diff_states(a: &FieldState, b: &FieldState) -> StateDiff {
    let m = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    };
    StateDiff {
        max_scalar: m(&a.scalar, &b.scalar),
        max_phi: m(&a.phi, &b.phi),
        time: (a.time - b.time).abs(),
    }
}

fn compare(a: &Path, b: &Path) -> Result<StateDiff> {
    let ca = read_checkpoint(a)?;
    let cb = read_checkpoint(b)?;
    if ca.grid != cb.grid {
        return Err(Error::Numerical(dendrite_core::Error::GridMismatch(
            format!("{} and {} use different grids", a.display(), b.display()),
        )));
    }
    Ok(diff_states(&ca.state, &cb.state))
}

/// Executes one parsed command, printing its report to stdout.
pub fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    match cli.command {
        Command::Run { config, resume } => {
            let cfg = load_config(&config)?;
            let r = run(&cfg, resume.as_deref())?;
            println!("final time        {:.6}", r.state.time);
            println!("steps             {}", r.steps);
            println!("conserved drift   {:.3e}", r.integral_drift());
            println!("snapshots         {}", r.snapshots.len());
            if let Some(t) = &r.tip {
                println!(
                    "tip velocity      {:.6e} (mean of last {})",
                    t.equilibrium_velocity, t.window
                );
            }
            println!("output            {}", cfg.output.directory.display());
        }
        Command::Tipvel {
            config,
            reference_velocity,
            scale,
        } => {
            let cfg = load_config(&config)?;
            let r = tipvel(&cfg, reference_velocity, scale.into())?;
            println!("tip velocity      {:.6e}", r.velocity);
            println!("reference         {:.6e}", r.reference);
            println!("error             {:.3} %", r.error_percent);
            println!("velocity window   last {} samples", r.trace.window);
        }
        Command::Converge {
            config,
            dx,
            mode,
            reference_velocity,
            scale,
            reference_dx,
            compare_time,
            dt,
        } => {
            let cfg = load_config(&config)?;
            let mut opts = ConvergeOptions::new(
                dx,
                match mode {
                    Mode::Tip => ConvergeMode::Tip,
                    Mode::Norms => ConvergeMode::Norms,
                },
            );
            opts.reference_velocity = reference_velocity;
            opts.scale = scale.into();
            opts.reference_dx = reference_dx;
            opts.compare_time = compare_time;
            opts.dt = dt;
            let report = converge(&cfg, &opts)?;
            for e in &report.entries {
                match e {
                    ErrorEntry::Tip {
                        dx,
                        velocity,
                        tip_error_percent,
                    } => println!(
                        "dx {dx:<8} velocity {velocity:.6e}  error {tip_error_percent:.3} %"
                    ),
                    ErrorEntry::Norms { dx, norms } => println!(
                        "dx {dx:<8} L2(u) {:.4e}  H1(u) {:.4e}  L2(phi) {:.4e}  H1(phi) {:.4e}",
                        norms.l2_u, norms.h1_u, norms.l2_phi, norms.h1_phi
                    ),
                }
            }
            for f in &report.fits {
                println!(
                    "rate {:<18} slope {:.3}  intercept {:.3}",
                    f.quantity, f.slope, f.intercept
                );
            }
        }
        Command::Compare { a, b } => {
            let d = compare(&a, &b)?;
            println!("max |du|    {:.6e}", d.max_scalar);
            println!("max |dphi|  {:.6e}", d.max_phi);
            println!("|dt|        {:.6e}", d.time);
            println!(
                "{}",
                if d.identical() {
                    "identical"
                } else {
                    "different"
                }
            );
        }
    }
    Ok(())
}
