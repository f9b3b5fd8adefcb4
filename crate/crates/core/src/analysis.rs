//! Post-processing: tip tracking, tip velocity, inter-grid transfer, error
//! norms and convergence-rate fits.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{
    eval_in_element, for_each_element, interpolate, FieldState, Grid, QuadratureRule,
};
use crate::math;

/// Arc length along the ray `origin + s * axis` of the outermost point where
/// phi crosses from positive to non-positive.
///
/// The ray is sampled at the smallest grid spacing; the crossing is located
/// by linear interpolation between the bracketing samples.
pub fn locate_tip(state: &FieldState, grid: &Grid, axis: &[f64], origin: &[f64]) -> Result<f64> {
    state.check(grid)?;
    let dim = grid.dim();
    if axis.len() != dim || origin.len() != dim {
        return Err(Error::param(
            "axis",
            "direction and origin need one entry per axis",
        ));
    }
    let norm = math::sqrt(axis.iter().map(|a| a * a).sum());
    if !(norm > 0.0) {
        return Err(Error::param("axis", "direction must be non-zero"));
    }
    let h = grid.spacing();
    let ds = h[..dim].iter().copied().fold(f64::INFINITY, f64::min);
    let mut point = [0.0; 3];
    let mut prev: Option<f64> = None;
    let mut tip = None;
    for k in 0usize.. {
        let s = k as f64 * ds;
        for d in 0..dim {
            point[d] = origin[d] + s * axis[d] / norm;
        }
        let phi = match interpolate(state, grid, &point[..dim]) {
            Ok((_, p, _)) => p,
            Err(Error::OutOfBounds { .. }) if k > 0 => break,
            Err(e) => return Err(e),
        };
        if let Some(p0) = prev {
            if p0 > 0.0 && phi <= 0.0 {
                tip = Some((k - 1) as f64 * ds + ds * p0 / (p0 - phi));
            }
        }
        prev = Some(phi);
    }
    tip.ok_or(Error::NoInterface)
}

/// Tip positions over time and the velocities derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct TipTrace {
    pub samples: Vec<(f64, f64)>,
    pub velocities: Vec<(f64, f64)>,
    /// Mean of the last `window` velocities.
    pub equilibrium_velocity: f64,
    pub window: usize,
}

/// Trailing window used when none is given.
pub const DEFAULT_VELOCITY_WINDOW: usize = 20;

/// Differentiates tip positions (central differences inside, one-sided at
/// the ends) and averages the trailing `window` velocities.
pub fn tip_velocity(samples: &[(f64, f64)], window: usize) -> Result<TipTrace> {
    if window == 0 {
        return Err(Error::param("window", "must be at least 1"));
    }
    if samples.len() < window + 1 || samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} tip samples, need at least {}",
            samples.len(),
            window + 1
        )));
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::InsufficientData(
            "sample times must be strictly increasing".to_string(),
        ));
    }
    let n = samples.len();
    let mut velocities = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        let v = (samples[b].1 - samples[a].1) / (samples[b].0 - samples[a].0);
        velocities.push((samples[i].0, v));
    }
    let tail = &velocities[n - window..];
    let equilibrium_velocity = tail.iter().map(|v| v.1).sum::<f64>() / window as f64;
    Ok(TipTrace {
        samples: samples.to_vec(),
        velocities,
        equilibrium_velocity,
        window,
    })
}

/// Percent deviation of `v` from `v_ref`.
pub fn percent_error(v: f64, v_ref: f64) -> f64 {
    (v - v_ref).abs() / v_ref.abs() * 100.0
}

/// Injects a fine-grid state onto a coarse grid whose nodes are fine nodes.
pub fn restrict_to_coarse(
    fine: &FieldState,
    fine_grid: &Grid,
    coarse_grid: &Grid,
) -> Result<FieldState> {
    fine.check(fine_grid)?;
    let dim = fine_grid.dim();
    if coarse_grid.dim() != dim {
        return Err(Error::GridMismatch("grids differ in dimension".to_string()));
    }
    let (hf, hc) = (fine_grid.spacing(), coarse_grid.spacing());
    let (of, oc) = (fine_grid.origin(), coarse_grid.origin());
    let (nf, nc) = (fine_grid.nodes_per_axis(), coarse_grid.nodes_per_axis());
    let mut ratio = [1usize; 3];
    let mut offset = [0usize; 3];
    for d in 0..dim {
        let r = hc[d] / hf[d];
        let ri = math::round(r);
        if ri < 1.0 || (r - ri).abs() > 1e-9 * r {
            return Err(Error::GridMismatch(format!(
                "spacing ratio {r} on axis {d} is not an integer"
            )));
        }
        let o = (oc[d] - of[d]) / hf[d];
        let oi = math::round(o);
        if oi < 0.0 || (o - oi).abs() > 1e-9 * o.abs().max(1.0) {
            return Err(Error::GridMismatch(format!(
                "origin on axis {d} is not a fine node"
            )));
        }
        ratio[d] = ri as usize;
        offset[d] = oi as usize;
        if offset[d] + (nc[d] - 1) * ratio[d] > nf[d] - 1 {
            return Err(Error::GridMismatch(format!(
                "coarse grid exceeds the fine grid on axis {d}"
            )));
        }
    }
    let mut out = FieldState::uniform(coarse_grid, 0.0, 0.0);
    out.time = fine.time;
    for i in 0..coarse_grid.node_count() {
        let c = coarse_grid.node_ijk(i);
        let mut f = [0usize; 3];
        for d in 0..dim {
            f[d] = offset[d] + c[d] * ratio[d];
        }
        let j = fine_grid.index(f[0], f[1], f[2]);
        out.scalar[i] = fine.scalar[j];
        out.phi[i] = fine.phi[j];
    }
    Ok(out)
}

/// Evaluates the Q1 interpolant of `state` at every node of `target`.
///
/// Used to compare against a reference run whose grid does not contain the
/// target nodes; reduces to injection when it does.
pub fn transfer_to_grid(state: &FieldState, from: &Grid, target: &Grid) -> Result<FieldState> {
    state.check(from)?;
    if from.dim() != target.dim() {
        return Err(Error::GridMismatch("grids differ in dimension".to_string()));
    }
    let mut out = FieldState::uniform(target, 0.0, 0.0);
    out.time = state.time;
    let dim = target.dim();
    for i in 0..target.node_count() {
        let x = target.node_coord(i);
        let (u, p, _) = interpolate(state, from, &x[..dim])?;
        out.scalar[i] = u;
        out.phi[i] = p;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldNorms {
    pub l2_u: f64,
    pub h1_u: f64,
    pub l2_phi: f64,
    pub h1_phi: f64,
}

impl FieldNorms {
    pub fn scaled(self, f: f64) -> Self {
        FieldNorms {
            l2_u: self.l2_u * f,
            h1_u: self.h1_u * f,
            l2_phi: self.l2_phi * f,
            h1_phi: self.h1_phi * f,
        }
    }
}

/// L2 and H1 norms of `a - b` for both fields, integrated with 2-point
/// Gauss per axis on the Q1 interpolants.
pub fn error_norms(a: &FieldState, b: &FieldState, grid: &Grid) -> Result<FieldNorms> {
    let n = grid.node_count();
    if a.scalar.len() != n || a.phi.len() != n || b.scalar.len() != n || b.phi.len() != n {
        return Err(Error::GridMismatch(format!(
            "states have {} / {} nodes, grid has {n}",
            a.phi.len(),
            b.phi.len()
        )));
    }
    let du: Vec<f64> = a.scalar.iter().zip(&b.scalar).map(|(x, y)| x - y).collect();
    let dp: Vec<f64> = a.phi.iter().zip(&b.phi).map(|(x, y)| x - y).collect();
    let (l2u, g2u) = squared_norms(&du, grid);
    let (l2p, g2p) = squared_norms(&dp, grid);
    Ok(FieldNorms {
        l2_u: math::sqrt(l2u),
        h1_u: math::sqrt(l2u + g2u),
        l2_phi: math::sqrt(l2p),
        h1_phi: math::sqrt(l2p + g2p),
    })
}

/// `(int e^2, int |grad e|^2)` of a nodal field.
fn squared_norms(e: &[f64], grid: &Grid) -> (f64, f64) {
    let dim = grid.dim();
    let rule = QuadratureRule::gauss2(dim);
    let jac = grid.cell_volume() / (1 << dim) as f64;
    let mut v2 = 0.0;
    let mut g2 = 0.0;
    for_each_element(grid, |el| {
        let mut lv = 0.0;
        let mut lg = 0.0;
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let (v, g) = eval_in_element(grid, e, el, p);
            lv += w * v * v;
            lg += w * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
        }
        v2 += lv * jac;
        g2 += lg * jac;
    });
    (v2, g2)
}

/// Least-squares line through `(log10 dx, log10 error)`.
pub fn fit_rate(entries: &[(f64, f64)]) -> Result<(f64, f64)> {
    if entries.len() < 2 {
        return Err(Error::InsufficientData(
            "a rate fit needs at least 2 entries".to_string(),
        ));
    }
    if let Some(&(dx, e)) = entries.iter().find(|(dx, e)| !(*dx > 0.0 && *e > 0.0)) {
        return Err(Error::InsufficientData(format!(
            "entry (dx {dx}, error {e}) is not positive; its logarithm is undefined"
        )));
    }
    let n = entries.len() as f64;
    let xs: Vec<f64> = entries
        .iter()
        .map(|e| math::ln(e.0) / core::f64::consts::LN_10)
        .collect();
    let ys: Vec<f64> = entries
        .iter()
        .map(|e| math::ln(e.1) / core::f64::consts::LN_10)
        .collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData(
            "all dx values are equal".to_string(),
        ));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ErrorEntry {
    Norms {
        dx: f64,
        norms: FieldNorms,
    },
    Tip {
        dx: f64,
        velocity: f64,
        tip_error_percent: f64,
    },
}

impl ErrorEntry {
    pub fn dx(&self) -> f64 {
        match self {
            ErrorEntry::Norms { dx, .. } | ErrorEntry::Tip { dx, .. } => *dx,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub quantity: &'static str,
    pub slope: f64,
    pub intercept: f64,
}

/// Errors per refinement level and the fitted log-log rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub entries: Vec<ErrorEntry>,
    pub fits: Vec<RateFit>,
}

impl ErrorReport {
    /// Builds the report and fits one rate per reported quantity.
    pub fn new(entries: Vec<ErrorEntry>) -> Result<Self> {
        let mut fits = Vec::new();
        let series = |f: &dyn Fn(&ErrorEntry) -> Option<f64>| -> Vec<(f64, f64)> {
            entries
                .iter()
                .filter_map(|e| f(e).map(|v| (e.dx(), v)))
                .collect()
        };
        let quantities: [(&'static str, &dyn Fn(&ErrorEntry) -> Option<f64>); 5] = [
            ("tip_error_percent", &|e| match e {
                ErrorEntry::Tip {
                    tip_error_percent, ..
                } => Some(*tip_error_percent),
                _ => None,
            }),
            ("l2_u", &|e| match e {
                ErrorEntry::Norms { norms, .. } => Some(norms.l2_u),
                _ => None,
            }),
            ("h1_u", &|e| match e {
                ErrorEntry::Norms { norms, .. } => Some(norms.h1_u),
                _ => None,
            }),
            ("l2_phi", &|e| match e {
                ErrorEntry::Norms { norms, .. } => Some(norms.l2_phi),
                _ => None,
            }),
            ("h1_phi", &|e| match e {
                ErrorEntry::Norms { norms, .. } => Some(norms.h1_phi),
                _ => None,
            }),
        ];
        for (name, f) in quantities {
            let s = series(f);
            if s.is_empty() {
                continue;
            }
            let (slope, intercept) = fit_rate(&s)?;
            fits.push(RateFit {
                quantity: name,
                slope,
                intercept,
            });
        }
        if fits.is_empty() {
            return Err(Error::InsufficientData("no entries to fit".to_string()));
        }
        Ok(ErrorReport { entries, fits })
    }

    pub fn fit(&self, quantity: &str) -> Option<&RateFit> {
        self.fits.iter().find(|f| f.quantity == quantity)
    }
}

/// Number of maximal runs of nodes with `phi > 0` along grid row `row`
/// (constant y index, and z index 0 in 3D).
pub fn solid_runs_on_row(state: &FieldState, grid: &Grid, row: usize) -> Result<usize> {
    state.check(grid)?;
    let n = grid.nodes_per_axis();
    if row >= n[1] {
        return Err(Error::param(
            "row",
            format!("row {row} outside 0..{}", n[1]),
        ));
    }
    let mut runs = 0;
    let mut inside = false;
    for ix in 0..n[0] {
        let solid = state.phi[grid.index(ix, row, 0)] > 0.0;
        if solid && !inside {
            runs += 1;
        }
        inside = solid;
    }
    Ok(runs)
}
