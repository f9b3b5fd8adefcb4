//! Dilute binary alloy under the frozen-temperature approximation: residuals
//! of the supersaturation (`u_c`) and `phi` weak forms.

use alloc::vec;
use alloc::vec::Vec;

use crate::anisotropy::GRAD_CUTOFF_SQ;
use crate::error::Result;
use crate::grid::{FieldState, Grid};
use crate::kernel::{self, Outputs, Rule};
use crate::math;
use crate::params::AlloyParams;
use crate::pure_melt::{coupling_derivative, phi_terms, PhiCoeffs, ReactionRule};

/// Semi-discrete residuals of the alloy system at one state.
///
/// `lumped_mass_phi * dphi/dt = -res_phi` and
/// `lumped_mass_uc * du_c/dt = -res_uc + source_uc`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlloyResidual {
    pub res_uc: Vec<f64>,
    pub res_phi: Vec<f64>,
    pub lumped_mass_uc: Vec<f64>,
    pub lumped_mass_phi: Vec<f64>,
    pub source_uc: Vec<f64>,
}

/// Anti-trapping current
/// `J_at = -1/(2 sqrt 2) [1 + (1-k) u_c] dphi/dt grad phi / |grad phi|`.
///
/// With solid at `phi = +1` the current points from solid into liquid while
/// the interface advances, returning the solute that the diffuse interface
/// would otherwise trap.
#[inline]
pub fn antitrapping_flux(u_c: f64, phi: f64, dphi_dt: f64, grad_phi: &[f64], k: f64) -> [f64; 3] {
    let _ = phi;
    let mut g = [0.0; 3];
    g[..grad_phi.len()].copy_from_slice(grad_phi);
    let q = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
    if q < GRAD_CUTOFF_SQ || dphi_dt == 0.0 {
        return [0.0; 3];
    }
    let s =
        -core::f64::consts::FRAC_1_SQRT_2 * 0.5 * (1.0 + (1.0 - k) * u_c) * dphi_dt / math::sqrt(q);
    [s * g[0], s * g[1], s * g[2]]
}

/// Solute composition `c = (c_l0/2) (1 + (1-k) u_c) ((1-phi) + k (1+phi))`.
#[inline]
pub fn composition_from_uc(u_c: f64, phi: f64, c_l0: f64, k: f64) -> f64 {
    0.5 * c_l0 * (1.0 + (1.0 - k) * u_c) * ((1.0 - phi) + k * (1.0 + phi))
}

/// Inverse of [`composition_from_uc`].
pub fn uc_from_composition(c: f64, phi: f64, c_l0: f64, k: f64) -> f64 {
    (2.0 * c / (c_l0 * ((1.0 - phi) + k * (1.0 + phi))) - 1.0) / (1.0 - k)
}

/// `(1+k)/2 - (1-k) phi / 2`, the solute capacity factor.
#[inline]
pub(crate) fn capacity(phi: f64, k: f64) -> f64 {
    0.5 * (1.0 + k) - 0.5 * (1.0 - k) * phi
}

/// `1 + (1-k) u_c`, the release factor.
#[inline]
pub(crate) fn release(u_c: f64, k: f64) -> f64 {
    1.0 + (1.0 - k) * u_c
}

/// Alloy reaction term `-phi + phi^3 + xi (1-phi^2)^2 (u_c + tilt)`.
#[cfg(test)]
pub(crate) fn alloy_reaction(phi: f64, u_c: f64, tilt: f64, xi: f64) -> f64 {
    crate::pure_melt::dwell_derivative(phi, u_c + tilt, xi)
}

#[inline]
pub(crate) fn alloy_reaction_dphi(phi: f64, u_c: f64, tilt: f64, xi: f64) -> f64 {
    -1.0 + 3.0 * phi * phi - 4.0 * xi * phi * (1.0 - phi * phi) * (u_c + tilt)
}

pub(crate) fn phi_coeffs(p: &AlloyParams) -> PhiCoeffs {
    PhiCoeffs {
        lambda0_sq: 1.0,
        tau0: 1.0,
        eps: p.eps4,
        fold: 4,
    }
}

/// Assembles the phi residual (`out[0]`) and its lumped mass (`out[1]`),
/// including the tilt-dependent relaxation factor; `out[2]` is scratch.
#[allow(clippy::too_many_arguments)]
pub(crate) fn phi_residual(
    grid: &Grid,
    phi: &[f64],
    u_c: &[f64],
    p: &AlloyParams,
    time: f64,
    rule: ReactionRule,
    buf: &mut Vec<f64>,
    out: &mut [Vec<f64>; 3],
) -> Result<()> {
    let tilt = |i: usize| p.tilt(grid.node_coord(i)[1], time);
    phi_terms(grid, phi, phi_coeffs(p), rule, buf, out, |i| {
        coupling_derivative(phi[i], u_c[i] + tilt(i), p.xi)
    })?;
    let row = grid.nodes_per_axis()[0];
    kernel::for_chunks(&mut out[1], row, |r, chunk| {
        let off = r * row;
        for (j, v) in chunk.iter_mut().enumerate() {
            *v *= 1.0 - (1.0 - p.k) * tilt(off + j);
        }
    });
    Ok(())
}

/// Assembles the solute flux residual `sum_e int grad N_i . (D q(phi) grad u_c - pref J_at)`
/// into `out[0]`.
pub(crate) fn solute_residual(
    grid: &Grid,
    u_c: &[f64],
    phi: &[f64],
    dphi_dt: &[f64],
    p: &AlloyParams,
    buf: &mut Vec<f64>,
    out: &mut [Vec<f64>],
) -> Result<()> {
    let pref = p.antitrapping_factor();
    let dim = grid.dim();
    kernel::assemble(
        grid,
        Rule::Vertex,
        [u_c, phi, dphi_dt],
        Outputs { flux: 1, mass: 0 },
        buf,
        out,
        |_, v, g, o| {
            let dq = p.d_nd * p.diffusivity_factor(v[1]);
            let jat = antitrapping_flux(v[0], v[1], v[2], &g[1][..dim], p.k);
            for d in 0..3 {
                o.flux[0][d] = dq * g[0][d] - pref * jat[d];
            }
        },
    )
}

/// Assembles both residuals of the alloy system at `time`.
///
/// The phase rate that drives the anti-trapping current and the solute
/// release is the semi-discrete rate of the same state,
/// `-res_phi / lumped_mass_phi`.
pub fn assemble_alloy(
    state: &FieldState,
    grid: &Grid,
    params: &AlloyParams,
    time: f64,
) -> Result<AlloyResidual> {
    assemble_alloy_with(state, grid, params, time, ReactionRule::default())
}

/// [`assemble_alloy`] with a chosen reaction rule.
pub fn assemble_alloy_with(
    state: &FieldState,
    grid: &Grid,
    params: &AlloyParams,
    time: f64,
    rule: ReactionRule,
) -> Result<AlloyResidual> {
    state.check(grid)?;
    let mut buf = Vec::new();
    let mass = kernel::lumped_mass(grid);
    let mut phi_out = [Vec::new(), Vec::new(), Vec::new()];
    phi_residual(
        grid,
        &state.phi,
        &state.scalar,
        params,
        time,
        rule,
        &mut buf,
        &mut phi_out,
    )?;
    let [res_phi, lumped_mass_phi, _] = phi_out;
    let n = grid.node_count();
    let mut rate = vec![0.0; n];
    let mut lumped_mass_uc = vec![0.0; n];
    let mut source_uc = vec![0.0; n];
    for i in 0..n {
        rate[i] = -res_phi[i] / lumped_mass_phi[i];
        lumped_mass_uc[i] = mass[i] * capacity(state.phi[i], params.k);
        source_uc[i] = mass[i] * release(state.scalar[i], params.k) * 0.5 * rate[i];
    }
    let mut u_out = [Vec::new()];
    solute_residual(
        grid,
        &state.scalar,
        &state.phi,
        &rate,
        params,
        &mut buf,
        &mut u_out,
    )?;
    let [res_uc] = u_out;
    Ok(AlloyResidual {
        res_uc,
        res_phi,
        lumped_mass_uc,
        lumped_mass_phi,
        source_uc,
    })
}
