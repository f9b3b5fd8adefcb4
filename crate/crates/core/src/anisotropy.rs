//! Interface-energy anisotropy `a_s(n)` as a function of the phase gradient.

use crate::math;

/// Below this `|grad phi|^2` the interface normal is undefined and the
/// anisotropy falls back to the isotropic value with zero derivatives.
pub const GRAD_CUTOFF_SQ: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisotropyEval {
    pub a_s: f64,
    /// `d a_s / d(d phi / d x_i)` for each axis (unused axes are 0).
    pub d_as_d_gradphi: [f64; 3],
    pub grad_phi_sq: f64,
}

/// Evaluates `a_s` and its gradient-derivative for a 2D or 3D gradient.
///
/// `fold = 4` uses the cubic form `1 - 3e + 4e (sum g_i^4) / |g|^4`, which
/// in 2D equals `1 + e cos 4theta`. `fold = 6` is the planar
/// `1 + e cos 6theta` and only looks at the first two components.
#[inline]
pub fn eval_anisotropy(grad_phi: &[f64], eps4: f64, fold: u32) -> AnisotropyEval {
    let mut g = [0.0; 3];
    g[..grad_phi.len()].copy_from_slice(grad_phi);
    if fold == 6 {
        return eval_sixfold(g, eps4);
    }
    eval_cubic(g, grad_phi.len(), eps4)
}

#[inline(always)]
pub(crate) fn eval_cubic(g: [f64; 3], dim: usize, eps: f64) -> AnisotropyEval {
    let sq = [g[0] * g[0], g[1] * g[1], g[2] * g[2]];
    let q = if dim == 3 {
        sq[0] + sq[1] + sq[2]
    } else {
        sq[0] + sq[1]
    };
    if q < GRAD_CUTOFF_SQ || eps == 0.0 {
        return AnisotropyEval {
            a_s: 1.0,
            d_as_d_gradphi: [0.0; 3],
            grad_phi_sq: q,
        };
    }
    let s4 = if dim == 3 {
        sq[0] * sq[0] + sq[1] * sq[1] + sq[2] * sq[2]
    } else {
        sq[0] * sq[0] + sq[1] * sq[1]
    };
    let inv_q = 1.0 / q;
    let inv_q2 = inv_q * inv_q;
    let a_s = 1.0 - 3.0 * eps + 4.0 * eps * s4 * inv_q2;
    let c = 16.0 * eps * inv_q2 * inv_q;
    let mut d = [0.0; 3];
    for i in 0..dim {
        d[i] = c * g[i] * (sq[i] * q - s4);
    }
    AnisotropyEval {
        a_s,
        d_as_d_gradphi: d,
        grad_phi_sq: q,
    }
}

fn eval_sixfold(g: [f64; 3], eps: f64) -> AnisotropyEval {
    let q = g[0] * g[0] + g[1] * g[1];
    if q < GRAD_CUTOFF_SQ || eps == 0.0 {
        return AnisotropyEval {
            a_s: 1.0,
            d_as_d_gradphi: [0.0; 3],
            grad_phi_sq: q,
        };
    }
    let theta = math::atan2(g[1], g[0]);
    let a_s = 1.0 + eps * math::cos(6.0 * theta);
    let da_dtheta = -6.0 * eps * math::sin(6.0 * theta);
    // d theta / d g = (-g_y, g_x) / |g|^2
    let d = [-da_dtheta * g[1] / q, da_dtheta * g[0] / q, 0.0];
    AnisotropyEval {
        a_s,
        d_as_d_gradphi: d,
        grad_phi_sq: q,
    }
}

/// Direction-dependent interface width and relaxation time.
pub fn lambda_tau_of_n(aniso: &AnisotropyEval, lambda0: f64, tau0: f64) -> (f64, f64) {
    (lambda0 * aniso.a_s, tau0 * aniso.a_s * aniso.a_s)
}

/// Smallest value `a_s` can take over all directions.
pub fn min_anisotropy(eps4: f64, fold: u32, dim: usize) -> f64 {
    match (fold, dim) {
        (6, _) | (_, 2) => 1.0 - eps4,
        // In 3D the cubic form is smallest along <111>: sum g^4 / |g|^4 = 1/3.
        _ => 1.0 - 3.0 * eps4 + 4.0 * eps4 / 3.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    #[test]
    fn extrema_and_regularization() {
        let a = eval_anisotropy(&[1.0, 0.0], 0.05, 4);
        assert!((a.a_s - 1.05).abs() < 1e-15);
        let r = 1.0 / 2f64.sqrt();
        let a = eval_anisotropy(&[r, r], 0.05, 4);
        assert!((a.a_s - 0.95).abs() < 1e-15);
        let a = eval_anisotropy(&[0.0, 0.0], 0.05, 4);
        assert_eq!(a.a_s, 1.0);
        assert_eq!(a.d_as_d_gradphi, [0.0; 3]);
        let a = eval_anisotropy(&[0.0, 0.0, 0.0], 0.05, 4);
        assert_eq!(a.a_s, 1.0);
    }

    #[test]
    fn lambda_tau_examples() {
        let one = eval_anisotropy(&[0.0, 0.0], 0.05, 4);
        assert_eq!(lambda_tau_of_n(&one, 1.0, 1.0), (1.0, 1.0));
        let ax = eval_anisotropy(&[1.0, 0.0], 0.05, 4);
        let (l, t) = lambda_tau_of_n(&ax, 1.0, 1.0);
        assert!((l - 1.05).abs() < 1e-15 && (t - 1.1025).abs() < 1e-14);
        let r = 1.0 / 2f64.sqrt();
        let diag = eval_anisotropy(&[r, r], 0.05, 4);
        let (l, t) = lambda_tau_of_n(&diag, 1.0, 1.0);
        assert!((l - 0.95).abs() < 1e-15 && (t - 0.9025).abs() < 1e-14);
    }

    #[test]
    fn three_d_minimum() {
        let s = 1.0 / 3f64.sqrt();
        let a = eval_anisotropy(&[s, s, s], 0.05, 4);
        assert!((a.a_s - min_anisotropy(0.05, 4, 3)).abs() < 1e-14);
    }

    fn fd_check(g: &[f64], eps: f64, fold: u32) -> Result<(), TestCaseError> {
        let a = eval_anisotropy(g, eps, fold);
        let h = 1e-6;
        for i in 0..g.len() {
            let mut gp = g.to_vec();
            let mut gm = g.to_vec();
            gp[i] += h;
            gm[i] -= h;
            let fd = (eval_anisotropy(&gp, eps, fold).a_s - eval_anisotropy(&gm, eps, fold).a_s)
                / (2.0 * h);
            let an = a.d_as_d_gradphi[i];
            prop_assert!(
                (fd - an).abs() <= 1e-6 * an.abs().max(1.0) * 1.0 + 1e-9,
                "axis {} fd {} analytic {}",
                i,
                fd,
                an
            );
        }
        Ok(())
    }

    proptest! {
        #[test]
        fn fourfold_matches_cosine(theta in 0.0f64..(2.0 * PI), eps in 0.0f64..0.3) {
            let a = eval_anisotropy(&[theta.cos(), theta.sin()], eps, 4);
            prop_assert!((a.a_s - (1.0 + eps * (4.0 * theta).cos())).abs() < 1e-13);
            prop_assert!(a.a_s >= 1.0 - 3.0 * eps - 1e-15 && a.a_s <= 1.0 + eps + 1e-15);
        }

        #[test]
        fn derivative_matches_finite_differences(theta in 0.0f64..(2.0 * PI), z in -1.0f64..1.0) {
            let g2 = [theta.cos(), theta.sin()];
            fd_check(&g2, 0.05, 4)?;
            fd_check(&g2, 0.05, 6)?;
            let g3 = [theta.cos(), theta.sin(), z];
            fd_check(&g3, 0.05, 4)?;
        }

        #[test]
        fn degree_zero_homogeneous(gx in -3.0f64..3.0, gy in -3.0f64..3.0, gz in -3.0f64..3.0, c in 0.1f64..10.0) {
            prop_assume!(gx * gx + gy * gy > 1e-6);
            for g in [vec![gx, gy], vec![gx, gy, gz]] {
                let a = eval_anisotropy(&g, 0.05, 4);
                let gs: Vec<f64> = g.iter().map(|v| v * c).collect();
                let b = eval_anisotropy(&gs, 0.05, 4);
                prop_assert!((a.a_s - b.a_s).abs() < 1e-13);
                let mut euler = 0.0;
                for i in 0..g.len() {
                    prop_assert!((b.d_as_d_gradphi[i] - a.d_as_d_gradphi[i] / c).abs() < 1e-12 * (1.0 + a.d_as_d_gradphi[i].abs() / c));
                    euler += g[i] * a.d_as_d_gradphi[i];
                }
                prop_assert!(euler.abs() < 1e-12);
            }
        }

        #[test]
        fn symmetric_under_permutation_flip_rotation(gx in -3.0f64..3.0, gy in -3.0f64..3.0, gz in -3.0f64..3.0) {
            let a = eval_anisotropy(&[gx, gy], 0.05, 4).a_s;
            prop_assert!((eval_anisotropy(&[gy, gx], 0.05, 4).a_s - a).abs() < 1e-14);
            prop_assert!((eval_anisotropy(&[-gx, gy], 0.05, 4).a_s - a).abs() < 1e-14);
            prop_assert!((eval_anisotropy(&[-gy, gx], 0.05, 4).a_s - a).abs() < 1e-14);
            let a3 = eval_anisotropy(&[gx, gy, gz], 0.05, 4).a_s;
            prop_assert!((eval_anisotropy(&[gz, gx, gy], 0.05, 4).a_s - a3).abs() < 1e-14);
            prop_assert!((eval_anisotropy(&[gx, -gy, gz], 0.05, 4).a_s - a3).abs() < 1e-14);
        }
    }
}
