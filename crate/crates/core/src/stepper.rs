//! Time integration: explicit lumped-mass forward Euler and a fixed-point
//! semi-implicit backward Euler, both advancing phi first and then the
//! diffusing scalar.

use alloc::vec;
use alloc::vec::Vec;

use crate::alloy::{self, alloy_reaction_dphi, capacity, release};
use crate::anisotropy::{eval_anisotropy, eval_cubic, min_anisotropy};
use crate::error::{Error, Result};
use crate::grid::{integrate_nodal, FieldState, Grid};
use crate::kernel::{self, for_chunks, map_nodes, Outputs, Rule, PHI_RULE};
use crate::params::{AlloyParams, Model, PureMeltParams};
use crate::pure_melt::{
    self, coupling_derivative, dwell_second_derivative, well_derivative, PhiCoeffs, ReactionRule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    Explicit,
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub dt: f64,
    pub mode: StepMode,
    /// Fraction of the stability bound that `stable_dt` returns.
    pub safety: f64,
    pub max_fixed_point_iters: usize,
    /// Relative update below which the fixed-point iteration stops.
    pub fp_tolerance: f64,
}

impl StepControl {
    pub fn explicit(dt: f64) -> Self {
        StepControl {
            dt,
            mode: StepMode::Explicit,
            safety: 0.9,
            max_fixed_point_iters: 50,
            fp_tolerance: 1e-8,
        }
    }

    pub fn semi_implicit(dt: f64) -> Self {
        StepControl {
            mode: StepMode::SemiImplicit,
            ..Self::explicit(dt)
        }
    }

    pub fn validate(self) -> Result<Self> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::param("safety", "must lie in (0, 1]"));
        }
        if !(self.fp_tolerance > 0.0) {
            return Err(Error::param("fp_tolerance", "must be positive"));
        }
        if self.max_fixed_point_iters == 0 {
            return Err(Error::param("max_fixed_point_iters", "must be at least 1"));
        }
        Ok(self)
    }
}

/// Largest explicit time step considered stable, scaled by `safety`.
///
/// The scalar equation contributes `dx^2 / (2 dim D)`, the largest
/// eigenvalue of its trapezoidal-rule stiffness over the lumped mass. The
/// Gauss-rule phi stiffness has eigenvalues below `4 D_eff / dx^2` in any
/// dimension, where `D_eff` bounds the linearized anisotropic gradient flux
/// over `tau_min`. The reaction stiffness is added to that bound because
/// both act on the same unknown.
pub fn stable_dt(grid: &Grid, model: &Model, safety: f64) -> f64 {
    let dim = grid.dim();
    let h = grid.spacing();
    let hmin = h[..dim].iter().copied().fold(f64::INFINITY, f64::min);
    let diffusive = |d: f64| hmin * hmin / (2.0 * dim as f64 * d);
    let (eps, fold) = (model.eps4(), model.fold());
    let m = fold as f64;
    let a_max = 1.0 + eps;
    let a_min = min_anisotropy(eps, fold, dim);
    let flux_bound = a_max * a_max + m * m * eps * a_max + m * m * eps * eps;
    let (lambda_sq, tau, xi, umax, d_scalar, mass_factor) = match model {
        Model::PureMelt(p) => (
            p.lambda0 * p.lambda0,
            p.tau0,
            p.xi,
            p.delta.abs().max(1.0),
            p.d,
            1.0,
        ),
        Model::Alloy(p) => {
            let o = grid.origin()[1];
            let top = o + grid.extent()[1];
            let tilt = (o.abs().max(top.abs()) / p.lt_nd).abs();
            let dmax = p.d_nd
                * p.diffusivity_factor(-1.0)
                    .max(p.diffusivity_factor(1.0) / p.k);
            (
                1.0,
                1.0,
                p.xi,
                1.0 + tilt,
                dmax,
                (1.0 - (1.0 - p.k) * tilt).max(f64::MIN_POSITIVE),
            )
        }
    };
    let tau_min = tau * a_min * a_min * mass_factor;
    let dt_phi_diff = match PHI_RULE {
        Rule::Gauss => hmin * hmin / (4.0 * lambda_sq * flux_bound / tau_min),
        Rule::Vertex => diffusive(lambda_sq * flux_bound / tau_min),
    };
    // max over phi in [-1, 1] of f'' is below 2 + 4 |xi u| * max phi(1 - phi^2).
    let react = 2.0 + 4.0 * xi * umax * 0.384_900_179_459_750_5;
    let dt_phi_react = 2.0 * tau_min / react;
    let dt_phi = 1.0 / (1.0 / dt_phi_diff + 1.0 / dt_phi_react);
    let dt_u = diffusive(d_scalar);
    safety * dt_phi.min(dt_u)
}

/// Advances `state` by one step of `ctl`.
pub fn step(
    state: &FieldState,
    grid: &Grid,
    model: &Model,
    ctl: &StepControl,
) -> Result<FieldState> {
    let mut sim = Simulation::new(*grid, *model, *ctl, state.clone())?;
    sim.step()?;
    Ok(sim.state)
}

/// A running simulation: state, step counter and reusable work buffers.
#[derive(Debug, Clone)]
pub struct Simulation {
    grid: Grid,
    model: Model,
    control: StepControl,
    pub state: FieldState,
    steps: u64,
    mass: Vec<f64>,
    buf: Vec<f64>,
    out: [Vec<f64>; 3],
    fp_history: Vec<f64>,
}

impl Simulation {
    pub fn new(grid: Grid, model: Model, control: StepControl, state: FieldState) -> Result<Self> {
        let control = control.validate()?;
        match model {
            Model::PureMelt(p) => {
                p.validate()?;
            }
            Model::Alloy(p) => validate_alloy(&p)?,
        }
        state.check(&grid)?;
        if control.mode == StepMode::Explicit {
            let bound = stable_dt(&grid, &model, 1.0);
            if control.dt > bound {
                return Err(Error::UnstableTimeStep {
                    dt: control.dt,
                    bound,
                });
            }
        }
        Ok(Simulation {
            mass: kernel::lumped_mass(&grid),
            grid,
            model,
            control,
            state,
            steps: 0,
            buf: Vec::new(),
            out: [Vec::new(), Vec::new(), Vec::new()],
            fp_history: Vec::new(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn control(&self) -> &StepControl {
        &self.control
    }

    /// Steps taken since the initial state (restored from a checkpoint if any).
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn set_steps(&mut self, steps: u64) {
        self.steps = steps;
    }

    /// Relative updates of the last semi-implicit fixed-point iteration.
    pub fn fixed_point_history(&self) -> &[f64] {
        &self.fp_history
    }

    /// `int (u - phi/2)` for the pure melt, `int c` for the alloy.
    pub fn conserved_integral(&self) -> f64 {
        conserved_integral(&self.state, &self.grid, &self.model)
    }

    pub fn step(&mut self) -> Result<()> {
        let next = match (self.control.mode, self.model) {
            (StepMode::Explicit, Model::PureMelt(p)) => self.explicit_pure(&p)?,
            (StepMode::Explicit, Model::Alloy(p)) => self.explicit_alloy(&p)?,
            (StepMode::SemiImplicit, model) => self.semi_implicit(&model)?,
        };
        if let Some(i) = next
            .scalar
            .iter()
            .chain(&next.phi)
            .position(|v| !v.is_finite())
        {
            let node = i % self.grid.node_count();
            return Err(Error::NonFinite {
                element: element_of_node(&self.grid, node),
            });
        }
        self.state = next;
        self.steps += 1;
        Ok(())
    }

    /// Number of steps from the current step counter needed to reach `t_end`.
    pub fn steps_until(&self, t_end: f64) -> u64 {
        let total = crate::math::round(t_end / self.control.dt).max(0.0) as u64;
        total.saturating_sub(self.steps)
    }

    /// Steps until `steps * dt` reaches `t_end`.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        for _ in 0..self.steps_until(t_end) {
            self.step()?;
        }
        Ok(())
    }

    fn explicit_pure(&mut self, p: &PureMeltParams) -> Result<FieldState> {
        let g = &self.grid;
        let row = g.nodes_per_axis()[0];
        let dt = self.control.dt;
        let s = &self.state;
        let xi = p.xi;
        pure_melt::phi_terms(
            g,
            &s.phi,
            PhiCoeffs::from(p),
            ReactionRule::Gauss,
            &mut self.buf,
            &mut self.out,
            |i| coupling_derivative(s.phi[i], s.scalar[i], xi),
        )?;
        let mut phi = vec![0.0; g.node_count()];
        {
            let (res, mphi) = (&self.out[0], &self.out[1]);
            map_nodes(&mut phi, row, |i| s.phi[i] - dt * res[i] / mphi[i]);
        }
        pure_melt::diffusion_action(g, &s.scalar, p.d, &mut self.buf, &mut self.out[..1])?;
        let mut u = vec![0.0; g.node_count()];
        {
            let (res, m) = (&self.out[0], &self.mass);
            let phi = &phi;
            map_nodes(&mut u, row, |i| {
                s.scalar[i] - dt * res[i] / m[i] + 0.5 * (phi[i] - s.phi[i])
            });
        }
        Ok(FieldState {
            scalar: u,
            phi,
            time: s.time + dt,
        })
    }

    fn explicit_alloy(&mut self, p: &AlloyParams) -> Result<FieldState> {
        let g = &self.grid;
        let row = g.nodes_per_axis()[0];
        let dt = self.control.dt;
        let s = &self.state;
        alloy::phi_residual(
            g,
            &s.phi,
            &s.scalar,
            p,
            s.time,
            ReactionRule::Gauss,
            &mut self.buf,
            &mut self.out,
        )?;
        let mut phi = vec![0.0; g.node_count()];
        {
            let (res, mphi) = (&self.out[0], &self.out[1]);
            map_nodes(&mut phi, row, |i| s.phi[i] - dt * res[i] / mphi[i]);
        }
        let mut rate = vec![0.0; g.node_count()];
        {
            let phi = &phi;
            map_nodes(&mut rate, row, |i| (phi[i] - s.phi[i]) / dt);
        }
        alloy::solute_residual(
            g,
            &s.scalar,
            &phi,
            &rate,
            p,
            &mut self.buf,
            &mut self.out[..1],
        )?;
        let mut u = vec![0.0; g.node_count()];
        {
            let (res, m, phi) = (&self.out[0], &self.mass, &phi);
            map_nodes(&mut u, row, |i| {
                let dphi = phi[i] - s.phi[i];
                let rhs = -dt * res[i] + m[i] * release(s.scalar[i], p.k) * 0.5 * dphi;
                s.scalar[i] + rhs / (m[i] * capacity(phi[i], p.k))
            });
        }
        Ok(FieldState {
            scalar: u,
            phi,
            time: s.time + dt,
        })
    }

    fn semi_implicit(&mut self, model: &Model) -> Result<FieldState> {
        let tol = self.control.fp_tolerance;
        let max_iter = self.control.max_fixed_point_iters;
        let mut phi = self.state.phi.clone();
        let mut u = self.state.scalar.clone();
        self.fp_history.clear();
        for _ in 0..max_iter {
            let phi_new = self.implicit_phi(model, &phi, &u)?;
            let u_new = self.implicit_scalar(model, &phi_new, &u)?;
            let change = rel_change(&phi_new, &phi).max(rel_change(&u_new, &u));
            phi = phi_new;
            u = u_new;
            self.fp_history.push(change);
            if change < tol {
                return Ok(FieldState {
                    scalar: u,
                    phi,
                    time: self.state.time + self.control.dt,
                });
            }
        }
        Err(Error::NoConvergence {
            history: self.fp_history.clone(),
        })
    }

    /// One backward-Euler phi solve with the scalar held at `u_star`,
    /// anisotropy and relaxation time lagged at `phi_star`, and the
    /// reaction linearized about `phi_star`.
    fn implicit_phi(
        &mut self,
        model: &Model,
        phi_star: &[f64],
        u_star: &[f64],
    ) -> Result<Vec<f64>> {
        let g = self.grid;
        let n = g.node_count();
        let row = g.nodes_per_axis()[0];
        let dt = self.control.dt;
        let t_new = self.state.time + dt;
        let dim = g.dim();
        let (c, xi) = match model {
            Model::PureMelt(p) => (PhiCoeffs::from(p), p.xi),
            Model::Alloy(p) => (alloy::phi_coeffs(p), p.xi),
        };
        let nc = 1usize << dim;
        let mut a2 = vec![0.0; g.element_count() * nc];
        let mut out = [Vec::new(), Vec::new(), Vec::new()];
        {
            // Per-corner a^2 cache (written through a shared slot index), the
            // lagged anisotropy-derivative flux, the tau mass and the
            // double-well reaction at phi_star.
            let cells = SlotCells::new(&mut a2);
            kernel::assemble(
                &g,
                PHI_RULE,
                [phi_star],
                Outputs { flux: 1, mass: 2 },
                &mut self.buf,
                &mut out,
                |pt, v, gr, o| {
                    let an = if c.fold == 4 {
                        eval_cubic(gr[0], dim, c.eps)
                    } else {
                        eval_anisotropy(&gr[0][..dim], c.eps, c.fold)
                    };
                    let a = an.a_s;
                    cells.set(pt.slot, c.lambda0_sq * a * a);
                    for d in 0..3 {
                        o.flux[0][d] = c.lambda0_sq * an.grad_phi_sq * a * an.d_as_d_gradphi[d];
                    }
                    o.mass[0] = c.tau0 * a * a;
                    o.mass[1] = well_derivative(v[0]);
                },
            )?;
        }
        let [lag, mut mtau, mut react] = out;
        let mut stiff = vec![0.0; n];
        for i in 0..n {
            // `du_dphi` is the local response of the scalar to a phi change
            // (latent heat or solute release over capacity). Folding it into
            // the linearization keeps the fixed point contractive at large dt.
            let (drive, dr, factor, du_dphi) = match model {
                Model::PureMelt(_) => (
                    u_star[i],
                    dwell_second_derivative(phi_star[i], u_star[i], xi),
                    1.0,
                    0.5,
                ),
                Model::Alloy(p) => {
                    let tilt = p.tilt(g.node_coord(i)[1], t_new);
                    (
                        u_star[i] + tilt,
                        alloy_reaction_dphi(phi_star[i], u_star[i], tilt, xi),
                        1.0 - (1.0 - p.k) * tilt,
                        0.5 * release(u_star[i], p.k).max(0.0) / capacity(phi_star[i], p.k),
                    )
                }
            };
            mtau[i] *= factor;
            let sq = 1.0 - phi_star[i] * phi_star[i];
            let coupling = xi * sq * sq * du_dphi;
            let floor = -0.5 * mtau[i] / (dt * self.mass[i]);
            let s = dr.max(floor) + coupling;
            react[i] +=
                self.mass[i] * (coupling_derivative(phi_star[i], drive, xi) - s * phi_star[i]);
            stiff[i] = mtau[i] / dt + self.mass[i] * s;
        }
        let phi0 = &self.state.phi;
        let b: Vec<f64> = (0..n)
            .map(|i| mtau[i] / dt * phi0[i] - react[i] - lag[i])
            .collect();
        let mut x = phi_star.to_vec();
        let buf = &mut self.buf;
        conjugate_gradient(
            |v, out| {
                let mut o = [core::mem::take(out)];
                kernel::assemble(
                    &g,
                    PHI_RULE,
                    [v],
                    Outputs { flux: 1, mass: 0 },
                    buf,
                    &mut o,
                    |pt, _, gr, co| {
                        let k = a2[pt.slot];
                        for d in 0..3 {
                            co.flux[0][d] = k * gr[0][d];
                        }
                    },
                )?;
                let [mut r] = o;
                for_chunks(&mut r, row, |ri, chunk| {
                    let off = ri * row;
                    for (j, val) in chunk.iter_mut().enumerate() {
                        *val += stiff[off + j] * v[off + j];
                    }
                });
                *out = r;
                Ok(())
            },
            &b,
            &mut x,
            1e-3 * self.control.fp_tolerance,
        )?;
        Ok(x)
    }

    /// One backward-Euler solve for the diffusing scalar given the new phi.
    fn implicit_scalar(
        &mut self,
        model: &Model,
        phi_new: &[f64],
        u_star: &[f64],
    ) -> Result<Vec<f64>> {
        let g = self.grid;
        let n = g.node_count();
        let row = g.nodes_per_axis()[0];
        let dt = self.control.dt;
        let dim = g.dim();
        let u0 = &self.state.scalar;
        let phi0 = &self.state.phi;
        let m = &self.mass;
        let (diag, b, coeff): (Vec<f64>, Vec<f64>, Vec<f64>) = match model {
            Model::PureMelt(p) => (
                (0..n).map(|i| m[i] / dt).collect(),
                (0..n)
                    .map(|i| m[i] / dt * u0[i] + m[i] * 0.5 * (phi_new[i] - phi0[i]) / dt)
                    .collect(),
                vec![p.d; n],
            ),
            Model::Alloy(p) => {
                let rate: Vec<f64> = (0..n).map(|i| (phi_new[i] - phi0[i]) / dt).collect();
                let pref = p.antitrapping_factor();
                let mut o = [Vec::new()];
                kernel::assemble(
                    &g,
                    Rule::Vertex,
                    [phi_new, u_star, &rate],
                    Outputs { flux: 1, mass: 0 },
                    &mut self.buf,
                    &mut o,
                    |_, v, gr, co| {
                        let j = alloy::antitrapping_flux(v[1], v[0], v[2], &gr[0][..dim], p.k);
                        for d in 0..3 {
                            co.flux[0][d] = -pref * j[d];
                        }
                    },
                )?;
                let [jat] = o;
                let diag: Vec<f64> = (0..n)
                    .map(|i| m[i] * capacity(phi_new[i], p.k) / dt)
                    .collect();
                let b = (0..n)
                    .map(|i| diag[i] * u0[i] + m[i] * release(u0[i], p.k) * 0.5 * rate[i] - jat[i])
                    .collect();
                let coeff = (0..n)
                    .map(|i| p.d_nd * p.diffusivity_factor(phi_new[i]))
                    .collect();
                (diag, b, coeff)
            }
        };
        let mut x = u_star.to_vec();
        let buf = &mut self.buf;
        conjugate_gradient(
            |v, out| {
                let mut o = [core::mem::take(out)];
                kernel::assemble(
                    &g,
                    Rule::Vertex,
                    [v, &coeff],
                    Outputs { flux: 1, mass: 0 },
                    buf,
                    &mut o,
                    |_, vals, gr, co| {
                        let k = vals[1];
                        for d in 0..3 {
                            co.flux[0][d] = k * gr[0][d];
                        }
                    },
                )?;
                let [mut r] = o;
                for_chunks(&mut r, row, |ri, chunk| {
                    let off = ri * row;
                    for (j, val) in chunk.iter_mut().enumerate() {
                        *val += diag[off + j] * v[off + j];
                    }
                });
                *out = r;
                Ok(())
            },
            &b,
            &mut x,
            1e-3 * self.control.fp_tolerance,
        )?;
        Ok(x)
    }
}

fn validate_alloy(p: &AlloyParams) -> Result<()> {
    if !(p.d_nd > 0.0) {
        return Err(Error::param("D_nd", "must be positive"));
    }
    if !(p.k > 0.0 && p.k < 1.0) {
        return Err(Error::param("k", "must lie in (0, 1)"));
    }
    if !(p.xi > 0.0) {
        return Err(Error::param("xi", "must be positive"));
    }
    if !(p.lt_nd > 0.0) {
        return Err(Error::param(
            "lT_nd",
            "must be positive (infinite for isothermal)",
        ));
    }
    if !(0.0..1.0 / 3.0).contains(&p.eps4) {
        return Err(Error::param("eps4", "must lie in [0, 1/3)"));
    }
    Ok(())
}

/// `int (u - phi/2) dV` (pure melt) or `int c dV` (alloy).
pub fn conserved_integral(state: &FieldState, grid: &Grid, model: &Model) -> f64 {
    let values: Vec<f64> = match model {
        Model::PureMelt(_) => state
            .scalar
            .iter()
            .zip(&state.phi)
            .map(|(u, p)| u - 0.5 * p)
            .collect(),
        Model::Alloy(p) => state
            .scalar
            .iter()
            .zip(&state.phi)
            .map(|(&u, &phi)| alloy::composition_from_uc(u, phi, p.c_l0, p.k))
            .collect(),
    };
    integrate_nodal(&values, grid).unwrap_or(f64::NAN)
}

fn element_of_node(grid: &Grid, node: usize) -> usize {
    let n = grid.nodes_per_axis();
    let ijk = grid.node_ijk(node);
    let mut e = 0;
    let mut stride = 1;
    for d in 0..grid.dim() {
        e += ijk[d].min(n[d] - 2) * stride;
        stride *= n[d] - 1;
    }
    e
}

/// RMS update relative to the RMS of `new`, floored at 1 so fields that sit
/// near zero (an unperturbed supersaturation) do not stall the iteration.
fn rel_change(new: &[f64], old: &[f64]) -> f64 {
    let diff = dot_with(new, old, |a, b| (a - b) * (a - b));
    let norm = dot_with(new, new, |a, b| a * b);
    crate::math::sqrt(diff / norm.max(new.len() as f64))
}

const REDUCE_CHUNK: usize = 4096;

/// Deterministic reduction: fixed chunks summed in order.
fn dot_with(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
    let chunks = a.len().div_ceil(REDUCE_CHUNK);
    let mut partial = vec![0.0; chunks];
    for_chunks(&mut partial, 1, |c, slot| {
        let lo = c * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(a.len());
        slot[0] = a[lo..hi]
            .iter()
            .zip(&b[lo..hi])
            .map(|(&x, &y)| f(x, y))
            .sum();
    });
    partial.iter().sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    dot_with(a, b, |x, y| x * y)
}

/// Unpreconditioned conjugate gradients for a symmetric positive definite
/// operator, stopping at `||r|| <= tol ||b||`.
fn conjugate_gradient(
    mut apply: impl FnMut(&[f64], &mut Vec<f64>) -> Result<()>,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
) -> Result<()> {
    let n = b.len();
    let mut ax = Vec::with_capacity(n);
    apply(x, &mut ax)?;
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = tol * tol * dot(b, b).max(f64::MIN_POSITIVE);
    let max_iter = 10 * n + 100;
    let mut history = Vec::new();
    for _ in 0..max_iter {
        if rr <= target {
            return Ok(());
        }
        apply(&p, &mut ax)?;
        let alpha = rr / dot(&p, &ax);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ax[i];
        }
        let rr_new = dot(&r, &r);
        history.push(crate::math::sqrt(rr_new));
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        if !rr.is_finite() {
            break;
        }
    }
    Err(Error::NoConvergence { history })
}

/// Lets the element pass store one value per element corner. Each slot is
/// written by exactly one corner evaluation, so writes never alias.
struct SlotCells<'a> {
    ptr: *mut f64,
    len: usize,
    _marker: core::marker::PhantomData<&'a mut [f64]>,
}

unsafe impl Sync for SlotCells<'_> {}

impl<'a> SlotCells<'a> {
    fn new(data: &'a mut [f64]) -> Self {
        SlotCells {
            ptr: data.as_mut_ptr(),
            len: data.len(),
            _marker: core::marker::PhantomData,
        }
    }

    #[inline]
    fn set(&self, slot: usize, v: f64) {
        assert!(slot < self.len);
        // SAFETY: in bounds, and every slot is owned by a single element
        // corner which is evaluated by exactly one worker.
        unsafe { *self.ptr.add(slot) = v }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_dt_scaling() {
        let grid = Grid::new(&[11, 11], &[2.0, 2.0], &[0.0, 0.0]).unwrap();
        let mut p = PureMeltParams::benchmark();
        let m = Model::PureMelt(p);
        let full = stable_dt(&grid, &m, 1.0);
        assert_eq!(stable_dt(&grid, &m, 0.5), 0.5 * full);
        assert!(stable_dt(&grid, &m, 0.4) <= 0.4);
        // When the scalar diffusivity binds, doubling it halves the bound.
        p.d = 20.0;
        let a = stable_dt(&grid, &Model::PureMelt(p), 1.0);
        p.d = 40.0;
        let b = stable_dt(&grid, &Model::PureMelt(p), 1.0);
        assert!((a - 2.0 * b).abs() < 1e-15);
    }

    #[test]
    fn explicit_step_above_bound_is_refused() {
        let grid = Grid::new(&[5, 5], &[1.0, 1.0], &[0.0, 0.0]).unwrap();
        let m = Model::PureMelt(PureMeltParams::benchmark());
        let s = FieldState::uniform(&grid, 0.0, -1.0);
        let bound = stable_dt(&grid, &m, 1.0);
        match Simulation::new(grid, m, StepControl::explicit(2.0 * bound), s) {
            Err(Error::UnstableTimeStep { dt, bound: b }) => {
                assert_eq!(dt, 2.0 * bound);
                assert_eq!(b, bound);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bulk_solid_is_a_fixed_point() {
        let grid = Grid::new(&[6, 6], &[1.0, 1.0], &[0.0, 0.0]).unwrap();
        let m = Model::PureMelt(PureMeltParams::benchmark());
        let s = FieldState::uniform(&grid, 0.0, 1.0);
        for ctl in [
            StepControl::explicit(0.05),
            StepControl::semi_implicit(0.05),
        ] {
            let mut sim = Simulation::new(grid, m, ctl, s.clone()).unwrap();
            for _ in 0..20 {
                sim.step().unwrap();
            }
            assert!(sim.state.phi.iter().all(|&v| (v - 1.0).abs() < 1e-15));
            assert!(sim.state.scalar.iter().all(|&v| v.abs() < 1e-15));
        }
    }
}
