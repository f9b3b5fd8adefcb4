//! Run configuration: a TOML document with `[scenario]`, `[params.*]`,
//! `[stepper]` and `[output]` sections. Every key except `scenario.kind` is
//! optional and overrides the chosen preset. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use dendrite_core::params::{derive_alloy_params, AlloyMaterial};
use dendrite_core::scenarios::{Scenario, ScenarioKind, Seed, SeedLayout, Symmetry};
use dendrite_core::stepper::stable_dt;
use dendrite_core::{Error as CoreError, Model, PureMeltParams, StepControl, StepMode};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ParamsSource {
    PureMelt(PureMeltParams),
    Alloy {
        material: AlloyMaterial,
        ohno_matsuura: bool,
        isothermal: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Time between VTK snapshots; `None` writes only the first and last.
    pub snapshot_interval: Option<f64>,
    /// Time between rows of the CSV series.
    pub series_cadence: f64,
    /// Steps between checkpoints; `None` writes only the final one.
    pub checkpoint_interval: Option<u64>,
    pub tip_axis: Option<Vec<f64>>,
    pub tip_origin: Option<Vec<f64>>,
    pub velocity_window: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("output"),
            snapshot_interval: None,
            series_cadence: 1.0,
            checkpoint_interval: None,
            tip_axis: None,
            tip_origin: None,
            velocity_window: dendrite_core::analysis::DEFAULT_VELOCITY_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub params: ParamsSource,
    pub step_control: StepControl,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Configuration equivalent to a preset with default output settings.
    pub fn from_preset(kind: ScenarioKind) -> Result<Self> {
        parse_config(&format!("[scenario]\nkind = \"{}\"\n", kind.name()))
    }

    pub fn model(&self) -> Model {
        self.scenario.model
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: RawScenario,
    params: Option<RawParams>,
    stepper: Option<RawStepper>,
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    kind: String,
    domain_extent: Option<Vec<f64>>,
    dx: Option<f64>,
    t_end: Option<f64>,
    initial_scalar: Option<f64>,
    rng_seed: Option<u64>,
    symmetry: Option<String>,
    isothermal: Option<bool>,
    seeds: Option<Vec<RawSeed>>,
    random_seeds: Option<RawRandomSeeds>,
    layer: Option<RawLayer>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeed {
    center: Vec<f64>,
    radius: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRandomSeeds {
    count: usize,
    radius: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayer {
    thickness: f64,
    perturbation: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    pure_melt: Option<RawPureMelt>,
    alloy: Option<RawAlloy>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPureMelt {
    #[serde(rename = "D")]
    d: Option<f64>,
    eps4: Option<f64>,
    lambda0: Option<f64>,
    tau0: Option<f64>,
    xi: Option<f64>,
    delta: Option<f64>,
    fold: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlloy {
    #[serde(rename = "D_l")]
    d_l: Option<f64>,
    #[serde(rename = "D_s")]
    d_s: Option<f64>,
    k: Option<f64>,
    eps4: Option<f64>,
    gibbs_thomson: Option<f64>,
    m_l: Option<f64>,
    c0: Option<f64>,
    #[serde(rename = "G")]
    g: Option<f64>,
    v_p: Option<f64>,
    lambda0: Option<f64>,
    a1: Option<f64>,
    a2: Option<f64>,
    ohno_matsuura: Option<bool>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawDt {
    Value(f64),
    Keyword(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStepper {
    mode: Option<String>,
    dt: Option<RawDt>,
    safety: Option<f64>,
    max_fixed_point_iters: Option<usize>,
    fp_tolerance: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
    snapshot_interval: Option<f64>,
    series_cadence: Option<f64>,
    checkpoint_interval: Option<u64>,
    tip_axis: Option<Vec<f64>>,
    tip_origin: Option<Vec<f64>>,
    velocity_window: Option<usize>,
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// Prefixes a core parameter diagnostic with its config section.
fn scoped(section: &'static str) -> impl Fn(CoreError) -> Error {
    move |e| match e {
        CoreError::InvalidParameter { name, reason } => {
            Error::config(format!("{section}.{name}"), reason)
        }
        other => Error::config(section, other.to_string()),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Syntax(e.to_string()))?;
    let rs = raw.scenario;
    let kind = ScenarioKind::from_name(&rs.kind).ok_or_else(|| {
        Error::config(
            "scenario.kind",
            format!(
                "unknown scenario `{}` (expected one of {})",
                rs.kind,
                ScenarioKind::ALL.map(|k| k.name()).join(", ")
            ),
        )
    })?;
    let mut sc = Scenario::preset(kind);

    if let Some(ext) = rs.domain_extent {
        if !(ext.len() == 2 || ext.len() == 3) {
            return Err(Error::config(
                "scenario.domain_extent",
                "needs 2 or 3 entries",
            ));
        }
        if ext.len() != sc.dim() {
            if let SeedLayout::Seeds(seeds) = &mut sc.seeds {
                // Re-centre preset seeds when the dimension changes.
                for s in seeds.iter_mut() {
                    s.center = [0.0; 3];
                    for (d, c) in s.center.iter_mut().enumerate().take(ext.len()) {
                        *c = 0.5 * ext[d];
                    }
                }
            }
        } else if let SeedLayout::Seeds(seeds) = &mut sc.seeds {
            // Keep preset seeds at the same relative position.
            for s in seeds.iter_mut() {
                for d in 0..ext.len() {
                    s.center[d] *= ext[d] / sc.domain_extent[d];
                }
            }
        }
        sc.domain_extent = ext;
    }
    if let Some(dx) = rs.dx {
        sc.dx = dx;
    }
    if let Some(t) = rs.t_end {
        sc.t_end = t;
    }
    if let Some(seed) = rs.rng_seed {
        sc.rng_seed = seed;
    }
    if let Some(sym) = rs.symmetry {
        sc.symmetry = match sym.as_str() {
            "full" => Symmetry::Full,
            "quadrant" => Symmetry::Quadrant,
            other => {
                return Err(Error::config(
                    "scenario.symmetry",
                    format!("unknown symmetry `{other}` (expected full or quadrant)"),
                ))
            }
        };
        if sc.symmetry == Symmetry::Quadrant {
            if let SeedLayout::Seeds(seeds) = &mut sc.seeds {
                if seeds.len() == 1 {
                    seeds[0].center = [0.0; 3];
                }
            }
        }
    }
    let layouts = [
        rs.seeds.is_some(),
        rs.random_seeds.is_some(),
        rs.layer.is_some(),
    ];
    if layouts.iter().filter(|&&b| b).count() > 1 {
        return Err(Error::config(
            "scenario",
            "give at most one of `seeds`, `random_seeds` and `layer`",
        ));
    }
    if let Some(seeds) = rs.seeds {
        let dim = sc.dim();
        let mut out = Vec::with_capacity(seeds.len());
        for (i, s) in seeds.into_iter().enumerate() {
            if s.center.len() != dim {
                return Err(Error::config(
                    format!("scenario.seeds[{i}].center"),
                    format!("needs {dim} coordinates"),
                ));
            }
            let mut c = [0.0; 3];
            c[..dim].copy_from_slice(&s.center);
            out.push(Seed {
                center: c,
                radius: s
                    .radius
                    .unwrap_or(dendrite_core::scenarios::DEFAULT_SEED_RADIUS),
            });
        }
        sc.seeds = SeedLayout::Seeds(out);
    }
    if let Some(r) = rs.random_seeds {
        sc.seeds = SeedLayout::Random {
            count: r.count,
            radius: r
                .radius
                .unwrap_or(dendrite_core::scenarios::DEFAULT_SEED_RADIUS),
        };
    }
    if let Some(l) = rs.layer {
        sc.seeds = SeedLayout::PlanarLayer {
            thickness: l.thickness,
            perturbation: l.perturbation.unwrap_or(1.0),
        };
    }

    // Model parameters.
    let raw_params = raw.params.unwrap_or(RawParams {
        pure_melt: None,
        alloy: None,
    });
    if raw_params.pure_melt.is_some() && raw_params.alloy.is_some() {
        return Err(Error::config(
            "params",
            "exactly one of [params.pure_melt] and [params.alloy] may be given",
        ));
    }
    let preset_isothermal =
        matches!(sc.model, dendrite_core::Model::Alloy(a) if a.lt_nd.is_infinite());
    let use_alloy = match (&raw_params.pure_melt, &raw_params.alloy) {
        (Some(_), _) => false,
        (_, Some(_)) => true,
        _ => sc.model.is_alloy(),
    };
    if rs.isothermal.is_some() && !use_alloy {
        return Err(Error::config(
            "scenario.isothermal",
            "only applies to alloy runs",
        ));
    }
    let params = if use_alloy {
        let mut m = AlloyMaterial::al_cu();
        let mut om = false;
        if let Some(a) = raw_params.alloy {
            macro_rules! set {
                ($($f:ident),*) => { $( if let Some(v) = a.$f { m.$f = v; } )* };
            }
            set!(
                d_l,
                d_s,
                k,
                eps4,
                gibbs_thomson,
                m_l,
                c0,
                g,
                v_p,
                lambda0,
                a1,
                a2
            );
            om = a.ohno_matsuura.unwrap_or(false);
        }
        let isothermal = rs.isothermal.unwrap_or(preset_isothermal);
        ParamsSource::Alloy {
            material: m,
            ohno_matsuura: om,
            isothermal,
        }
    } else {
        let mut p = match sc.model {
            Model::PureMelt(p) => p,
            Model::Alloy(_) => PureMeltParams::benchmark(),
        };
        let mut delta_given = None;
        if let Some(r) = raw_params.pure_melt {
            macro_rules! set {
                ($($f:ident),*) => { $( if let Some(v) = r.$f { p.$f = v; } )* };
            }
            set!(d, eps4, lambda0, tau0, xi, fold);
            delta_given = r.delta;
        }
        match (delta_given, rs.initial_scalar) {
            (Some(d), Some(u)) if d != u => {
                return Err(Error::config(
                    "params.pure_melt.delta",
                    format!("disagrees with scenario.initial_scalar ({d} vs {u})"),
                ))
            }
            (Some(d), _) => sc.initial_scalar = d,
            (None, Some(u)) => sc.initial_scalar = u,
            (None, None) => {}
        }
        p.delta = sc.initial_scalar;
        ParamsSource::PureMelt(p)
    };
    if use_alloy {
        if let Some(u) = rs.initial_scalar {
            sc.initial_scalar = u;
        }
    }
    sc.model = match &params {
        ParamsSource::PureMelt(p) => {
            Model::PureMelt(p.validate().map_err(scoped("params.pure_melt"))?)
        }
        ParamsSource::Alloy {
            material,
            ohno_matsuura,
            isothermal,
        } => {
            let mut a = derive_alloy_params(*material).map_err(scoped("params.alloy"))?;
            a.use_ohno_matsuura = *ohno_matsuura;
            if *isothermal {
                a = a.isothermal();
            }
            Model::Alloy(a)
        }
    };

    // Time stepping.
    let mut ctl = match sc.step_mode {
        StepMode::Explicit => StepControl::explicit(sc.dt),
        StepMode::SemiImplicit => StepControl::semi_implicit(sc.dt),
    };
    let mut stable_requested = false;
    if let Some(s) = raw.stepper {
        if let Some(mode) = s.mode {
            ctl.mode = match mode.as_str() {
                "explicit" => StepMode::Explicit,
                "semi_implicit" => StepMode::SemiImplicit,
                other => {
                    return Err(Error::config(
                        "stepper.mode",
                        format!("unknown mode `{other}` (expected explicit or semi_implicit)"),
                    ))
                }
            };
        }
        if let Some(v) = s.safety {
            ctl.safety = v;
        }
        if let Some(v) = s.max_fixed_point_iters {
            ctl.max_fixed_point_iters = v;
        }
        if let Some(v) = s.fp_tolerance {
            ctl.fp_tolerance = v;
        }
        match s.dt {
            Some(RawDt::Value(v)) => ctl.dt = v,
            Some(RawDt::Keyword(k)) if k == "stable" => stable_requested = true,
            Some(RawDt::Keyword(k)) => {
                return Err(Error::config(
                    "stepper.dt",
                    format!("expected a number or \"stable\", got \"{k}\""),
                ))
            }
            None => {}
        }
    }
    sc.step_mode = ctl.mode;
    let grid = sc.grid().map_err(scoped("scenario"))?;
    if stable_requested {
        ctl.dt = stable_dt(&grid, &sc.model, ctl.safety);
    }
    let ctl = ctl.validate().map_err(scoped("stepper"))?;
    sc.dt = ctl.dt;
    sc.resolve_seeds().map_err(scoped("scenario"))?;

    // Output.
    let mut out = OutputConfig::default();
    if let Some(o) = raw.output {
        if let Some(d) = o.directory {
            out.directory = d;
        }
        if let Some(v) = o.snapshot_interval {
            if !(v > 0.0) {
                return Err(Error::config(
                    "output.snapshot_interval",
                    "must be positive",
                ));
            }
            out.snapshot_interval = Some(v);
        }
        if let Some(v) = o.series_cadence {
            if !(v > 0.0) {
                return Err(Error::config("output.series_cadence", "must be positive"));
            }
            out.series_cadence = v;
        }
        if let Some(v) = o.checkpoint_interval {
            if v == 0 {
                return Err(Error::config(
                    "output.checkpoint_interval",
                    "must be positive",
                ));
            }
            out.checkpoint_interval = Some(v);
        }
        if let Some(v) = o.velocity_window {
            if v == 0 {
                return Err(Error::config("output.velocity_window", "must be positive"));
            }
            out.velocity_window = v;
        }
        for (key, v) in [
            ("output.tip_axis", &o.tip_axis),
            ("output.tip_origin", &o.tip_origin),
        ] {
            if let Some(v) = v {
                if v.len() != sc.dim() {
                    return Err(Error::config(key, format!("needs {} entries", sc.dim())));
                }
            }
        }
        out.tip_axis = o.tip_axis;
        out.tip_origin = o.tip_origin;
    }

    Ok(RunConfig {
        scenario: sc,
        params,
        step_control: ctl,
        output: out,
    })
}
