//! Pure-melt (thermal) model: residuals of the `u` and `phi` weak forms.

use alloc::vec::Vec;

use crate::anisotropy::{eval_anisotropy, eval_cubic, AnisotropyEval};
use crate::error::Result;
use crate::grid::{FieldState, Grid};
use crate::kernel::{self, Outputs, Rule};
use crate::params::PureMeltParams;

/// Semi-discrete residuals of the pure-melt system at one state.
///
/// The semi-discrete equations read
/// `lumped_mass_phi * dphi/dt = -res_phi` and
/// `lumped_mass_u * (du/dt - 1/2 dphi/dt) = -res_u`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureMeltResidual {
    pub res_u: Vec<f64>,
    pub res_phi: Vec<f64>,
    pub lumped_mass_u: Vec<f64>,
    pub lumped_mass_phi: Vec<f64>,
}

/// Double-well free energy density `f(phi, u)`.
pub fn dwell_potential(phi: f64, u: f64, xi: f64) -> f64 {
    let p2 = phi * phi;
    -0.5 * p2 + 0.25 * p2 * p2 + xi * u * phi * (1.0 - 2.0 / 3.0 * p2 + 0.2 * p2 * p2)
}

/// `df/dphi = -phi + phi^3 + xi u (1 - phi^2)^2`.
#[inline]
pub fn dwell_derivative(phi: f64, u: f64, xi: f64) -> f64 {
    well_derivative(phi) + coupling_derivative(phi, u, xi)
}

/// The double-well part of `df/dphi`, `-phi + phi^3`.
#[inline]
pub(crate) fn well_derivative(phi: f64) -> f64 {
    -phi + phi * phi * phi
}

/// The driving-force part of `df/dphi`, `xi u (1 - phi^2)^2`.
#[inline]
pub(crate) fn coupling_derivative(phi: f64, u: f64, xi: f64) -> f64 {
    let s = 1.0 - phi * phi;
    xi * u * s * s
}

/// `d^2 f / dphi^2`.
#[inline]
pub(crate) fn dwell_second_derivative(phi: f64, u: f64, xi: f64) -> f64 {
    -1.0 + 3.0 * phi * phi - 4.0 * xi * u * phi * (1.0 - phi * phi)
}

/// Gradient-energy coefficients of a phi equation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PhiCoeffs {
    pub lambda0_sq: f64,
    pub tau0: f64,
    pub eps: f64,
    pub fold: u32,
}

impl From<&PureMeltParams> for PhiCoeffs {
    fn from(p: &PureMeltParams) -> Self {
        PhiCoeffs {
            lambda0_sq: p.lambda0 * p.lambda0,
            tau0: p.tau0,
            eps: p.eps4,
            fold: p.fold,
        }
    }
}

/// How the reaction `df/dphi` enters the phi residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReactionRule {
    /// The double-well part `int (-phi_h + phi_h^3) N_i` is sampled at the
    /// Gauss points of the gradient energy, the driving-force part is lumped.
    /// Lumping the latter keeps nodes inside a bulk phase from feeling the
    /// driving force of neighbouring interface cells.
    #[default]
    Gauss,
    /// Both parts lumped, `M_i f'(phi_i, u_i)`.
    Lumped,
}

/// Assembles the phi residual (anisotropic gradient term plus reaction)
/// into `out[0]` and the `tau(n)`-weighted lumped mass into `out[1]`;
/// `out[2]` is scratch.
///
/// `coupling(i)` is the driving-force part of the reaction at node `i`.
pub(crate) fn phi_terms<C>(
    grid: &Grid,
    phi: &[f64],
    c: PhiCoeffs,
    rule: ReactionRule,
    buf: &mut Vec<f64>,
    out: &mut [Vec<f64>; 3],
    coupling: C,
) -> Result<()>
where
    C: Fn(usize) -> f64 + Sync,
{
    // The dimension is made a constant so the cubic evaluation unrolls.
    match (grid.dim(), c.fold) {
        (2, 4) => phi_terms_with(grid, phi, c, rule, buf, out, coupling, |g| {
            eval_cubic(g, 2, c.eps)
        }),
        (_, 4) => phi_terms_with(grid, phi, c, rule, buf, out, coupling, |g| {
            eval_cubic(g, 3, c.eps)
        }),
        (dim, _) => phi_terms_with(grid, phi, c, rule, buf, out, coupling, |g| {
            eval_anisotropy(&g[..dim], c.eps, c.fold)
        }),
    }
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn phi_terms_with<C, A>(
    grid: &Grid,
    phi: &[f64],
    c: PhiCoeffs,
    rule: ReactionRule,
    buf: &mut Vec<f64>,
    out: &mut [Vec<f64>; 3],
    coupling: C,
    aniso: A,
) -> Result<()>
where
    C: Fn(usize) -> f64 + Sync,
    A: Fn([f64; 3]) -> AnisotropyEval + Sync,
{
    let gauss = rule == ReactionRule::Gauss;
    let layout = Outputs {
        flux: 1,
        mass: if gauss { 2 } else { 1 },
    };
    kernel::assemble(
        grid,
        kernel::PHI_RULE,
        [phi],
        layout,
        buf,
        &mut out[..layout.flux + layout.mass],
        |_, v, g, o| {
            let an = aniso(g[0]);
            let a = an.a_s;
            let qa = an.grad_phi_sq * a;
            for d in 0..3 {
                o.flux[0][d] = c.lambda0_sq * (a * a * g[0][d] + qa * an.d_as_d_gradphi[d]);
            }
            o.mass[0] = c.tau0 * a * a;
            if gauss {
                o.mass[1] = well_derivative(v[0]);
            }
        },
    )?;
    let row = grid.nodes_per_axis()[0];
    let mass = kernel::lumped_mass(grid);
    let [res, _, well] = out;
    let well = &*well;
    kernel::for_chunks(res, row, |r, chunk| {
        let off = r * row;
        for (j, v) in chunk.iter_mut().enumerate() {
            let i = off + j;
            let w = if gauss {
                well[i]
            } else {
                mass[i] * well_derivative(phi[i])
            };
            *v += w + mass[i] * coupling(i);
        }
    });
    Ok(())
}

/// Isotropic diffusion action `sum_e int D grad N_i . grad u` into `out[0]`.
pub(crate) fn diffusion_action(
    grid: &Grid,
    u: &[f64],
    d: f64,
    buf: &mut Vec<f64>,
    out: &mut [Vec<f64>],
) -> Result<()> {
    kernel::assemble(
        grid,
        Rule::Vertex,
        [u],
        Outputs { flux: 1, mass: 0 },
        buf,
        out,
        |_, _, g, o| {
            for k in 0..3 {
                o.flux[0][k] = d * g[0][k];
            }
        },
    )
}

/// Assembles both residuals and lumped masses of the pure-melt system.
pub fn assemble_pure_melt(
    state: &FieldState,
    grid: &Grid,
    params: &PureMeltParams,
) -> Result<PureMeltResidual> {
    assemble_pure_melt_with(state, grid, params, ReactionRule::default())
}

/// [`assemble_pure_melt`] with a chosen reaction rule.
pub fn assemble_pure_melt_with(
    state: &FieldState,
    grid: &Grid,
    params: &PureMeltParams,
    rule: ReactionRule,
) -> Result<PureMeltResidual> {
    state.check(grid)?;
    let params = params.validate()?;
    let mut buf = Vec::new();
    let mut phi_out = [Vec::new(), Vec::new(), Vec::new()];
    let (phi, u, xi) = (&state.phi, &state.scalar, params.xi);
    phi_terms(
        grid,
        phi,
        PhiCoeffs::from(&params),
        rule,
        &mut buf,
        &mut phi_out,
        |i| coupling_derivative(phi[i], u[i], xi),
    )?;
    let mass = kernel::lumped_mass(grid);
    let [res_phi, lumped_mass_phi, _] = phi_out;
    let mut u_out = [Vec::new()];
    diffusion_action(grid, &state.scalar, params.d, &mut buf, &mut u_out)?;
    let [res_u] = u_out;
    Ok(PureMeltResidual {
        res_u,
        res_phi,
        lumped_mass_u: mass,
        lumped_mass_phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dwell_examples() {
        for u in [-1.0, 0.0, 0.3] {
            assert_eq!(dwell_derivative(1.0, u, 1.6), 0.0);
            assert_eq!(dwell_derivative(-1.0, u, 1.6), 0.0);
        }
        assert!((dwell_derivative(0.0, -0.5, 1.6) + 0.8).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn dwell_derivative_matches_fd(phi in -1.2f64..1.2, u in -1.0f64..1.0, xi in 0.1f64..3.0) {
            let h = 1e-5;
            let fd = (dwell_potential(phi + h, u, xi) - dwell_potential(phi - h, u, xi)) / (2.0 * h);
            prop_assert!((fd - dwell_derivative(phi, u, xi)).abs() < 1e-8);
            let fd2 = (dwell_derivative(phi + h, u, xi) - dwell_derivative(phi - h, u, xi)) / (2.0 * h);
            prop_assert!((fd2 - dwell_second_derivative(phi, u, xi)).abs() < 1e-7);
        }
    }

    #[test]
    fn bulk_states_are_stationary() {
        let grid = Grid::new(&[6, 5], &[1.0, 1.0], &[0.0, 0.0]).unwrap();
        let p = PureMeltParams::benchmark();
        for (u, phi) in [(0.3, 1.0), (p.delta, -1.0)] {
            let s = FieldState::uniform(&grid, u, phi);
            let r = assemble_pure_melt(&s, &grid, &p).unwrap();
            assert!(r.res_u.iter().chain(&r.res_phi).all(|&v| v == 0.0));
            assert!(r
                .lumped_mass_u
                .iter()
                .chain(&r.lumped_mass_phi)
                .all(|&v| v > 0.0));
        }
    }
}
