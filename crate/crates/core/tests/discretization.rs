//! Spatial discretization checked against independently coded operators.

use dendrite_core::alloy::{assemble_alloy, assemble_alloy_with};
use dendrite_core::anisotropy::eval_anisotropy;
use dendrite_core::grid::{interpolate, QuadratureRule};
use dendrite_core::params::{derive_alloy_params, AlloyMaterial};
use dendrite_core::pure_melt::{
    assemble_pure_melt, assemble_pure_melt_with, dwell_derivative, dwell_potential, ReactionRule,
};
use dendrite_core::{FieldState, Grid, PureMeltParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(grid: &Grid, seed: u64, phi_range: f64) -> FieldState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.node_count();
    FieldState {
        scalar: (0..n).map(|_| rng.random_range(-0.8..0.2)).collect(),
        phi: (0..n)
            .map(|_| rng.random_range(-phi_range..phi_range))
            .collect(),
        time: 0.0,
    }
}

/// Finite-difference negative Laplacian times `h^2`, zero-flux by mirroring.
/// `box9` selects the nine-point box stencil `(8 c - sum of 8 neighbours) / 3`
/// instead of the five-point one.
fn fd_neg_laplacian(v: &[f64], nx: usize, ny: usize, ix: usize, iy: usize, box9: bool) -> f64 {
    let at = |x: isize, y: isize| {
        let mx = if x < 0 {
            -x
        } else if x >= nx as isize {
            2 * (nx as isize - 1) - x
        } else {
            x
        };
        let my = if y < 0 {
            -y
        } else if y >= ny as isize {
            2 * (ny as isize - 1) - y
        } else {
            y
        };
        v[mx as usize + nx * my as usize]
    };
    let (x, y) = (ix as isize, iy as isize);
    let c = at(x, y);
    if box9 {
        let mut s = 0.0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                if dx != 0 || dy != 0 {
                    s += at(x + dx, y + dy);
                }
            }
        }
        (8.0 * c - s) / 3.0
    } else {
        4.0 * c - at(x + 1, y) - at(x - 1, y) - at(x, y + 1) - at(x, y - 1)
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn isotropic_pure_melt_matches_finite_differences() {
    let h = 0.7;
    let grid = Grid::new(&[3, 3], &[h, h], &[0.0, 0.0]).unwrap();
    let mut p = PureMeltParams::benchmark();
    p.eps4 = 0.0;
    p.lambda0 = 1.3;
    p.d = 0.9;
    for seed in 0..5 {
        let s = random_state(&grid, seed, 1.0);
        let r = assemble_pure_melt_with(&s, &grid, &p, ReactionRule::Lumped).unwrap();
        // Centre node: full cell of volume h^2.
        let i = 4;
        let mass = h * h;
        let lam2 = p.lambda0 * p.lambda0;
        let phi_fd = lam2 * fd_neg_laplacian(&s.phi, 3, 3, 1, 1, true)
            + mass * dwell_derivative(s.phi[i], s.scalar[i], p.xi);
        let u_fd = p.d * fd_neg_laplacian(&s.scalar, 3, 3, 1, 1, false);
        assert!(
            rel_close(r.res_phi[i], phi_fd, 1e-10),
            "{} vs {phi_fd}",
            r.res_phi[i]
        );
        assert!(
            rel_close(r.res_u[i], u_fd, 1e-10),
            "{} vs {u_fd}",
            r.res_u[i]
        );
        assert!(rel_close(r.lumped_mass_phi[i], p.tau0 * mass, 1e-12));
        assert!(rel_close(r.lumped_mass_u[i], mass, 1e-12));
    }
}

#[test]
fn isothermal_alloy_matches_finite_differences() {
    let h = 1.2;
    let grid = Grid::new(&[3, 3], &[h, h], &[0.0, 0.0]).unwrap();
    let mut mat = AlloyMaterial::al_cu();
    mat.eps4 = 0.0;
    let p = derive_alloy_params(mat).unwrap().isothermal();
    let mass = h * h;
    for seed in 0..5 {
        // Phi equation with an arbitrary state.
        let s = random_state(&grid, seed, 1.0);
        let r = assemble_alloy_with(&s, &grid, &p, 0.0, ReactionRule::Lumped).unwrap();
        let i = 4;
        let sq = 1.0 - s.phi[i] * s.phi[i];
        let react = -s.phi[i] + s.phi[i].powi(3) + p.xi * sq * sq * s.scalar[i];
        let phi_fd = fd_neg_laplacian(&s.phi, 3, 3, 1, 1, true) + mass * react;
        assert!(
            rel_close(r.res_phi[i], phi_fd, 1e-10),
            "{} vs {phi_fd}",
            r.res_phi[i]
        );

        // Solute equation with uniform phi: no anti-trapping current.
        let mut s2 = s.clone();
        s2.phi.iter_mut().for_each(|v| *v = -0.3);
        let r2 = assemble_alloy(&s2, &grid, &p, 0.0).unwrap();
        let dq = p.d_nd * 0.5 * 1.3;
        let u_fd = dq * fd_neg_laplacian(&s2.scalar, 3, 3, 1, 1, false);
        assert!(
            rel_close(r2.res_uc[i], u_fd, 1e-10),
            "{} vs {u_fd}",
            r2.res_uc[i]
        );
        let cap = 0.5 * (1.0 + p.k) + 0.5 * (1.0 - p.k) * 0.3;
        assert!(rel_close(r2.lumped_mass_uc[i], mass * cap, 1e-12));
    }
}

/// `int (-phi_h + phi_h^3) N_i` over the four cells around the centre of a
/// 3x3 grid, with bilinear interpolation coded directly on each cell.
fn gauss_well_at_centre(s: &FieldState, h: f64) -> f64 {
    let g = 0.5 / 3f64.sqrt();
    let mut total = 0.0;
    for (cx, cy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        let node = |ix: usize, iy: usize| ix + 3 * iy;
        for (qx, qy) in [
            (0.5 - g, 0.5 - g),
            (0.5 + g, 0.5 - g),
            (0.5 - g, 0.5 + g),
            (0.5 + g, 0.5 + g),
        ] {
            let w = [
                (1.0 - qx) * (1.0 - qy),
                qx * (1.0 - qy),
                (1.0 - qx) * qy,
                qx * qy,
            ];
            let corners = [
                node(cx, cy),
                node(cx + 1, cy),
                node(cx, cy + 1),
                node(cx + 1, cy + 1),
            ];
            let phi: f64 = (0..4).map(|c| w[c] * s.phi[corners[c]]).sum();
            // Weight of the centre node, the corner of this cell nearest to (1, 1).
            let centre = corners.iter().position(|&c| c == 4).unwrap();
            total += 0.25 * h * h * (phi.powi(3) - phi) * w[centre];
        }
    }
    total
}

#[test]
fn gauss_rule_differs_from_lumped_in_the_double_well_only() {
    let h = 0.7;
    let grid = Grid::new(&[3, 3], &[h, h], &[0.0, 0.0]).unwrap();
    let mut p = PureMeltParams::benchmark();
    p.eps4 = 0.0;
    for seed in 0..5 {
        let s = random_state(&grid, 20 + seed, 1.0);
        let lumped = assemble_pure_melt_with(&s, &grid, &p, ReactionRule::Lumped).unwrap();
        let gauss = assemble_pure_melt(&s, &grid, &p).unwrap();
        let phi = s.phi[4];
        let expected =
            lumped.res_phi[4] - h * h * (phi.powi(3) - phi) + gauss_well_at_centre(&s, h);
        assert!(
            rel_close(gauss.res_phi[4], expected, 1e-12),
            "{} vs {expected}",
            gauss.res_phi[4]
        );
        assert_eq!(gauss.lumped_mass_phi, lumped.lumped_mass_phi);
        assert_eq!(gauss.res_u, lumped.res_u);
    }
}

#[test]
fn isotropic_assembly_commutes_with_quarter_turns() {
    let n = 9;
    let grid = Grid::new(&[n, n], &[1.0, 1.0], &[0.0, 0.0]).unwrap();
    let mut p = PureMeltParams::benchmark();
    p.eps4 = 0.05;
    let s = random_state(&grid, 7, 1.0);
    let rot = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for iy in 0..n {
            for ix in 0..n {
                // (ix, iy) -> (n-1-iy, ix)
                out[(n - 1 - iy) + n * ix] = v[ix + n * iy];
            }
        }
        out
    };
    let rs = FieldState {
        scalar: rot(&s.scalar),
        phi: rot(&s.phi),
        time: 0.0,
    };
    let a = assemble_pure_melt(&s, &grid, &p).unwrap();
    let b = assemble_pure_melt(&rs, &grid, &p).unwrap();
    let ra = rot(&a.res_phi);
    for (x, y) in ra.iter().zip(&b.res_phi) {
        assert!((x - y).abs() <= 1e-14 * x.abs().max(1.0), "{x} vs {y}");
    }
    assert_eq!(rot(&a.res_u), b.res_u);
}

/// Discrete functional: gradient and double-well energy by the Gauss rule,
/// driving-force energy lumped.
fn discrete_functional(s: &FieldState, grid: &Grid, p: &PureMeltParams) -> f64 {
    let rule = QuadratureRule::gauss2(2);
    let h = grid.spacing();
    let jac = grid.cell_volume() / 4.0;
    let n = grid.nodes_per_axis();
    let mut energy = 0.0;
    for ey in 0..n[1] - 1 {
        for ex in 0..n[0] - 1 {
            for (q, w) in rule.points.iter().zip(&rule.weights) {
                let x = [
                    (ex as f64 + 0.5 * (1.0 + q[0])) * h[0],
                    (ey as f64 + 0.5 * (1.0 + q[1])) * h[1],
                ];
                let (_, phi, g) = interpolate(s, grid, &x).unwrap();
                let an = eval_anisotropy(&g[..2], p.eps4, p.fold);
                let gradient = 0.5 * p.lambda0 * p.lambda0 * an.a_s * an.a_s * an.grad_phi_sq;
                energy += w * jac * (gradient + dwell_potential(phi, 0.0, p.xi));
            }
        }
    }
    for i in 0..grid.node_count() {
        let ijk = grid.node_ijk(i);
        let mut m = grid.cell_volume();
        for d in 0..2 {
            if ijk[d] == 0 || ijk[d] == n[d] - 1 {
                m *= 0.5;
            }
        }
        let (phi, u) = (s.phi[i], s.scalar[i]);
        energy += m * (dwell_potential(phi, u, p.xi) - dwell_potential(phi, 0.0, p.xi));
    }
    energy
}

#[test]
fn phi_residual_is_the_gradient_of_the_discrete_functional() {
    let grid = Grid::new(&[4, 4], &[0.8, 0.8], &[0.0, 0.0]).unwrap();
    let p = PureMeltParams::tip_validation();
    let s = random_state(&grid, 11, 0.9);
    let r = assemble_pure_melt(&s, &grid, &p).unwrap();
    let step = 1e-6;
    for i in 0..grid.node_count() {
        let mut plus = s.clone();
        let mut minus = s.clone();
        plus.phi[i] += step;
        minus.phi[i] -= step;
        let fd = (discrete_functional(&plus, &grid, &p) - discrete_functional(&minus, &grid, &p))
            / (2.0 * step);
        assert!(
            (fd - r.res_phi[i]).abs() < 1e-6,
            "node {i}: {fd} vs {}",
            r.res_phi[i]
        );
    }
}

#[test]
fn lumped_masses_are_positive() {
    let grid = Grid::new(&[6, 5, 4], &[1.0, 1.0, 1.0], &[0.0; 3]).unwrap();
    let s = random_state(&grid, 3, 1.0);
    let r = assemble_pure_melt(&s, &grid, &PureMeltParams::benchmark()).unwrap();
    assert!(r
        .lumped_mass_phi
        .iter()
        .chain(&r.lumped_mass_u)
        .all(|&m| m > 0.0));
    let p = derive_alloy_params(AlloyMaterial::al_cu()).unwrap();
    let g2 = Grid::new(&[6, 5], &[1.2, 1.2], &[0.0, 0.0]).unwrap();
    let s2 = random_state(&g2, 4, 1.0);
    let r2 = assemble_alloy(&s2, &g2, &p, 1.0).unwrap();
    assert!(r2
        .lumped_mass_phi
        .iter()
        .chain(&r2.lumped_mass_uc)
        .all(|&m| m > 0.0));
}

#[test]
fn residuals_vanish_on_uniform_bulk_phases() {
    let grid = Grid::new(&[5, 5], &[1.0, 1.0], &[0.0, 0.0]).unwrap();
    let p = PureMeltParams::benchmark();
    for phi in [-1.0, 1.0] {
        let r = assemble_pure_melt(&FieldState::uniform(&grid, -0.4, phi), &grid, &p).unwrap();
        assert!(r.res_phi.iter().chain(&r.res_u).all(|&v| v == 0.0));
    }
}
