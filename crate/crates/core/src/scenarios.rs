//! Initial conditions and ready-made scenario presets.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::grid::{FieldState, Grid};
use crate::math;
use crate::params::{derive_alloy_params, AlloyMaterial, Model, PureMeltParams};
use crate::stepper::StepMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    SingleEquiaxed,
    MultiEquiaxed,
    SingleColumnar,
    MultiColumnar,
    Equiaxed3d,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::SingleEquiaxed,
        ScenarioKind::MultiEquiaxed,
        ScenarioKind::SingleColumnar,
        ScenarioKind::MultiColumnar,
        ScenarioKind::Equiaxed3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::SingleEquiaxed => "single_equiaxed",
            ScenarioKind::MultiEquiaxed => "multi_equiaxed",
            ScenarioKind::SingleColumnar => "single_columnar",
            ScenarioKind::MultiColumnar => "multi_columnar",
            ScenarioKind::Equiaxed3d => "equiaxed_3d",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Which part of a mirror-symmetric problem is simulated.
///
/// Zero-flux boundaries are mirror planes, so a seed centred on the origin
/// corner of a quadrant (octant in 3D) domain is the same problem as the
/// full domain with the seed in the middle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Full,
    Quadrant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeedLayout {
    /// Explicit seeds.
    Seeds(Vec<Seed>),
    /// `count` seeds of equal radius placed by seeded rejection sampling.
    Random { count: usize, radius: f64 },
    /// Solid layer along the bottom (`y = 0`) boundary. The surface height
    /// carries a seeded random perturbation of the given amplitude.
    PlanarLayer { thickness: f64, perturbation: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub domain_extent: Vec<f64>,
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    pub seeds: SeedLayout,
    pub rng_seed: u64,
    /// Initial undercooling `u` (pure melt) or supersaturation `u_c` (alloy).
    pub initial_scalar: f64,
    pub model: Model,
    pub symmetry: Symmetry,
    pub step_mode: StepMode,
}

/// Default seed radius in interface widths.
pub const DEFAULT_SEED_RADIUS: f64 = 10.0;

impl Scenario {
    pub fn preset(kind: ScenarioKind) -> Self {
        let pure = Model::PureMelt(PureMeltParams::benchmark());
        let alloy =
            derive_alloy_params(AlloyMaterial::al_cu()).expect("built-in alloy data is valid");
        match kind {
            ScenarioKind::SingleEquiaxed => Scenario {
                kind,
                domain_extent: vec![500.0, 500.0],
                dx: 2.0,
                dt: 0.04,
                t_end: 840.0,
                seeds: SeedLayout::Seeds(vec![Seed {
                    center: [250.0, 250.0, 0.0],
                    radius: DEFAULT_SEED_RADIUS,
                }]),
                rng_seed: 0,
                initial_scalar: -0.75,
                model: pure,
                symmetry: Symmetry::Full,
                step_mode: StepMode::Explicit,
            },
            ScenarioKind::MultiEquiaxed => Scenario {
                kind,
                domain_extent: vec![600.0, 600.0],
                dx: 1.2,
                dt: 0.005,
                t_end: 40.0,
                seeds: SeedLayout::Random {
                    count: 8,
                    radius: DEFAULT_SEED_RADIUS,
                },
                rng_seed: 2022,
                initial_scalar: 0.0,
                model: Model::Alloy(alloy.isothermal()),
                symmetry: Symmetry::Full,
                step_mode: StepMode::SemiImplicit,
            },
            ScenarioKind::SingleColumnar => Scenario {
                kind,
                domain_extent: vec![600.0, 600.0],
                dx: 1.2,
                dt: 0.005,
                t_end: 50.0,
                seeds: SeedLayout::Seeds(vec![Seed {
                    center: [300.0, 0.0, 0.0],
                    radius: DEFAULT_SEED_RADIUS,
                }]),
                rng_seed: 0,
                initial_scalar: 0.0,
                model: Model::Alloy(alloy),
                symmetry: Symmetry::Full,
                step_mode: StepMode::SemiImplicit,
            },
            // With u_c = -1 the interface crosses its own width in a few
            // hundredths of a time unit, so this case steps explicitly at
            // the stability limit instead of taking 0.005 steps.
            ScenarioKind::MultiColumnar => Scenario {
                kind,
                domain_extent: vec![600.0, 600.0],
                dx: 1.2,
                dt: 0.0017,
                t_end: 240.0,
                seeds: SeedLayout::PlanarLayer {
                    thickness: 10.0,
                    perturbation: 1.0,
                },
                rng_seed: 2022,
                initial_scalar: -1.0,
                model: Model::Alloy(alloy),
                symmetry: Symmetry::Full,
                step_mode: StepMode::Explicit,
            },
            ScenarioKind::Equiaxed3d => Scenario {
                kind,
                domain_extent: vec![150.0, 150.0, 150.0],
                dx: 2.0,
                dt: 0.12,
                t_end: 400.0,
                seeds: SeedLayout::Seeds(vec![Seed {
                    center: [75.0, 75.0, 75.0],
                    radius: DEFAULT_SEED_RADIUS,
                }]),
                rng_seed: 0,
                initial_scalar: -0.75,
                model: pure,
                symmetry: Symmetry::Full,
                step_mode: StepMode::Explicit,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.domain_extent.len()
    }

    /// The grid this scenario runs on.
    pub fn grid(&self) -> Result<Grid> {
        Grid::from_extent(&self.domain_extent, self.dx)
    }

    fn lambda0(&self) -> f64 {
        match self.model {
            Model::PureMelt(p) => p.lambda0,
            Model::Alloy(_) => 1.0,
        }
    }

    /// Checks the scenario invariants and resolves the seed layout.
    pub fn resolve_seeds(&self) -> Result<ResolvedSeeds> {
        let dim = self.dim();
        if !(dim == 2 || dim == 3) {
            return Err(Error::param("domain_extent", "must have 2 or 3 entries"));
        }
        if !(self.dx > 0.0) {
            return Err(Error::param("dx", "must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::param("dt", "must be positive"));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::param("t_end", "must be non-negative"));
        }
        if !self.initial_scalar.is_finite() {
            return Err(Error::param("initial_scalar", "must be finite"));
        }
        match &self.seeds {
            SeedLayout::Seeds(seeds) => {
                if seeds.is_empty() {
                    return Err(Error::param("seeds", "at least one seed is required"));
                }
                for s in seeds {
                    self.check_seed(s)?;
                }
                if self.kind == ScenarioKind::MultiEquiaxed {
                    self.check_spacing(seeds)?;
                }
                Ok(ResolvedSeeds::Seeds(seeds.clone(), None))
            }
            SeedLayout::Random { count, radius } => {
                if self.kind == ScenarioKind::MultiEquiaxed && *count < 2 {
                    return Err(Error::param(
                        "seeds",
                        "multi_equiaxed needs at least 2 seeds",
                    ));
                }
                let probe = Seed {
                    center: [0.0; 3],
                    radius: *radius,
                };
                self.check_radius(&probe)?;
                let (seeds, rng) = self.place_random(*count, *radius)?;
                Ok(ResolvedSeeds::Seeds(seeds, Some(rng)))
            }
            SeedLayout::PlanarLayer {
                thickness,
                perturbation,
            } => {
                if !(*thickness >= 3.0 * self.dx) {
                    return Err(Error::param("layer_thickness", "must be at least 3 dx"));
                }
                if !(*perturbation >= 0.0 && *perturbation < *thickness) {
                    return Err(Error::param(
                        "perturbation",
                        "must lie in [0, layer_thickness)",
                    ));
                }
                if *thickness >= self.domain_extent[1] {
                    return Err(Error::param(
                        "layer_thickness",
                        "must be smaller than the domain height",
                    ));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
                let modes = PLANAR_MODES;
                let mut amp = [0.0; PLANAR_MODES];
                let mut phase = [0.0; PLANAR_MODES];
                for m in 0..modes {
                    amp[m] = uniform(&mut rng) * 2.0 - 1.0;
                    phase[m] = uniform(&mut rng) * core::f64::consts::TAU;
                }
                Ok(ResolvedSeeds::Layer {
                    thickness: *thickness,
                    perturbation: *perturbation,
                    amp,
                    phase,
                    rng,
                })
            }
        }
    }

    fn check_radius(&self, s: &Seed) -> Result<()> {
        if !(s.radius >= 3.0 * self.dx) {
            return Err(Error::param(
                "seed_radius",
                format!("radius {} is below 3 dx = {}", s.radius, 3.0 * self.dx),
            ));
        }
        Ok(())
    }

    fn check_seed(&self, s: &Seed) -> Result<()> {
        self.check_radius(s)?;
        for d in 0..self.dim() {
            if !(s.center[d] >= 0.0 && s.center[d] <= self.domain_extent[d]) {
                return Err(Error::param(
                    "seed_center",
                    format!(
                        "center {:?} lies outside the domain",
                        &s.center[..self.dim()]
                    ),
                ));
            }
        }
        Ok(())
    }

    fn check_spacing(&self, seeds: &[Seed]) -> Result<()> {
        if seeds.len() < 2 {
            return Err(Error::param(
                "seeds",
                "multi_equiaxed needs at least 2 seeds",
            ));
        }
        let rmax = seeds.iter().map(|s| s.radius).fold(0.0, f64::max);
        for (i, a) in seeds.iter().enumerate() {
            for b in &seeds[i + 1..] {
                if distance(&a.center, &b.center, self.dim()) < 4.0 * rmax {
                    return Err(Error::param(
                        "seeds",
                        "seed centers must be at least 4 radii apart",
                    ));
                }
            }
        }
        Ok(())
    }

    fn place_random(&self, count: usize, radius: f64) -> Result<(Vec<Seed>, ChaCha8Rng)> {
        let dim = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        let mut seeds: Vec<Seed> = Vec::with_capacity(count);
        let margin = 2.0 * radius;
        for d in 0..dim {
            if self.domain_extent[d] <= 2.0 * margin {
                return Err(Error::param("domain_extent", "too small for random seeds"));
            }
        }
        let mut attempts = 0usize;
        while seeds.len() < count {
            attempts += 1;
            if attempts > 100_000 {
                return Err(Error::param(
                    "seeds",
                    format!("could not place {count} seeds with spacing 4 r in this domain"),
                ));
            }
            let mut c = [0.0; 3];
            for (d, cd) in c.iter_mut().enumerate().take(dim) {
                *cd = margin + uniform(&mut rng) * (self.domain_extent[d] - 2.0 * margin);
            }
            if seeds
                .iter()
                .all(|s| distance(&s.center, &c, dim) >= 4.0 * radius)
            {
                seeds.push(Seed { center: c, radius });
            }
        }
        Ok((seeds, rng))
    }
}

const PLANAR_MODES: usize = 16;

/// Seed layout with all randomness drawn.
#[derive(Debug, Clone)]
pub enum ResolvedSeeds {
    Seeds(Vec<Seed>, Option<ChaCha8Rng>),
    Layer {
        thickness: f64,
        perturbation: f64,
        amp: [f64; PLANAR_MODES],
        phase: [f64; PLANAR_MODES],
        rng: ChaCha8Rng,
    },
}

impl ResolvedSeeds {
    pub fn seeds(&self) -> &[Seed] {
        match self {
            ResolvedSeeds::Seeds(s, _) => s,
            ResolvedSeeds::Layer { .. } => &[],
        }
    }

    /// Position of the generator after initialization (0 if unused).
    pub fn rng_word_pos(&self) -> u128 {
        match self {
            ResolvedSeeds::Seeds(_, Some(r)) | ResolvedSeeds::Layer { rng: r, .. } => {
                r.get_word_pos()
            }
            ResolvedSeeds::Seeds(_, None) => 0,
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn distance(a: &[f64; 3], b: &[f64; 3], dim: usize) -> f64 {
    let mut s = 0.0;
    for d in 0..dim {
        s += (a[d] - b[d]) * (a[d] - b[d]);
    }
    math::sqrt(s)
}

/// Equilibrium interface profile across a signed distance (positive inside the solid).
#[inline]
pub fn interface_profile(signed_distance: f64, lambda0: f64) -> f64 {
    math::tanh(signed_distance / (core::f64::consts::SQRT_2 * lambda0))
}

/// Builds the initial fields of `s` on `grid`.
pub fn build_initial_state(s: &Scenario, grid: &Grid) -> Result<FieldState> {
    let expected = s.grid()?;
    if expected.nodes_per_axis() != grid.nodes_per_axis() || expected.spacing() != grid.spacing() {
        return Err(Error::GridMismatch(format!(
            "scenario expects {:?} nodes at spacing {}, grid has {:?} at {:?}",
            &expected.nodes_per_axis()[..s.dim()],
            s.dx,
            &grid.nodes_per_axis()[..grid.dim()],
            &grid.spacing()[..grid.dim()],
        )));
    }
    let resolved = s.resolve_seeds()?;
    Ok(initial_state_from(s, grid, &resolved))
}

pub(crate) fn initial_state_from(
    s: &Scenario,
    grid: &Grid,
    resolved: &ResolvedSeeds,
) -> FieldState {
    let dim = grid.dim();
    let lambda0 = s.lambda0();
    let mut state = FieldState::uniform(grid, s.initial_scalar, -1.0);
    let width = grid.extent()[0].max(f64::MIN_POSITIVE);
    for i in 0..grid.node_count() {
        let x = grid.node_coord(i);
        state.phi[i] = match resolved {
            ResolvedSeeds::Seeds(seeds, _) => seeds
                .iter()
                .map(|sd| interface_profile(sd.radius - distance(&sd.center, &x, dim), lambda0))
                .fold(-1.0, f64::max),
            ResolvedSeeds::Layer {
                thickness,
                perturbation,
                amp,
                phase,
                ..
            } => {
                let mut bump = 0.0;
                for m in 0..PLANAR_MODES {
                    let k = core::f64::consts::TAU * (m + 1) as f64 / width;
                    bump += amp[m] * math::sin(k * x[0] + phase[m]);
                }
                let height = thickness + perturbation * bump / PLANAR_MODES as f64;
                interface_profile(height - x[1], lambda0)
            }
        };
    }
    state
}

/// Every preset, in `ScenarioKind::ALL` order.
pub fn all_presets() -> Vec<Scenario> {
    ScenarioKind::ALL
        .iter()
        .map(|&k| Scenario::preset(k))
        .collect()
}
