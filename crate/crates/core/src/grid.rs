//! Structured axis-aligned grids, nodal fields and the Q1 element basis.
//!
//! Nodes are numbered lexicographically with x fastest. Elements are the
//! grid cells; element `(ex, ey[, ez])` has its lowest corner at node
//! `(ex, ey[, ez])`. Corners of an element are numbered by bitmask: bit `d`
//! set means the corner sits on the upper face along axis `d`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Uniform structured grid in two or three dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
}

impl Grid {
    /// Builds a grid from node counts and spacings (one entry per axis).
    pub fn new(nodes: &[usize], spacing: &[f64], origin: &[f64]) -> Result<Self> {
        let dim = nodes.len();
        if !(dim == 2 || dim == 3) {
            return Err(Error::param("dim", "grid must be 2D or 3D"));
        }
        if spacing.len() != dim || origin.len() != dim {
            return Err(Error::param(
                "spacing",
                "one spacing and origin entry per axis",
            ));
        }
        let mut g = Grid {
            dim,
            n: [1; 3],
            spacing: [1.0; 3],
            origin: [0.0; 3],
        };
        for d in 0..dim {
            if nodes[d] < 2 {
                return Err(Error::param(
                    "n_nodes_per_axis",
                    "need at least 2 nodes per axis",
                ));
            }
            if !(spacing[d] > 0.0 && spacing[d].is_finite()) {
                return Err(Error::param("spacing", "must be positive"));
            }
            g.n[d] = nodes[d];
            g.spacing[d] = spacing[d];
            g.origin[d] = origin[d];
        }
        Ok(g)
    }

    /// Grid with origin 0 covering `extent` with spacing close to `dx`.
    ///
    /// The node count per axis is `round(extent / dx) + 1`; the spacing is
    /// exactly `dx`, so the covered extent may differ from the request by
    /// up to half a cell.
    pub fn from_extent(extent: &[f64], dx: f64) -> Result<Self> {
        let mut nodes = [0usize; 3];
        for (d, &l) in extent.iter().enumerate().take(3) {
            if !(l > 0.0) {
                return Err(Error::param("domain_extent", "must be positive"));
            }
            nodes[d] = math::round(l / dx) as usize + 1;
        }
        let dim = extent.len();
        Grid::new(&nodes[..dim], &[dx; 3][..dim], &[0.0; 3][..dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Node counts; unused axes report 1.
    pub fn nodes_per_axis(&self) -> [usize; 3] {
        self.n
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn node_count(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn element_count(&self) -> usize {
        (0..self.dim).map(|d| self.n[d] - 1).product()
    }

    /// Extent actually covered along each used axis.
    pub fn extent(&self) -> [f64; 3] {
        let mut e = [0.0; 3];
        for d in 0..self.dim {
            e[d] = (self.n[d] - 1) as f64 * self.spacing[d];
        }
        e
    }

    /// Volume (area in 2D) of one element.
    pub fn cell_volume(&self) -> f64 {
        self.spacing[..self.dim].iter().product()
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n[0] * (iy + self.n[1] * iz)
    }

    #[inline]
    pub fn node_ijk(&self, idx: usize) -> [usize; 3] {
        let ix = idx % self.n[0];
        let rest = idx / self.n[0];
        [ix, rest % self.n[1], rest / self.n[1]]
    }

    /// Physical coordinate of node `idx` (unused axes are 0).
    #[inline]
    pub fn node_coord(&self, idx: usize) -> [f64; 3] {
        let ijk = self.node_ijk(idx);
        let mut x = [0.0; 3];
        for d in 0..self.dim {
            x[d] = self.origin[d] + ijk[d] as f64 * self.spacing[d];
        }
        x
    }

    /// Node stride along axis `d`.
    #[inline]
    pub fn stride(&self, d: usize) -> usize {
        match d {
            0 => 1,
            1 => self.n[0],
            _ => self.n[0] * self.n[1],
        }
    }

    /// Locates the element containing `point` and the reference coordinate
    /// (in `[-1, 1]` per axis) of the point inside it.
    pub fn locate(&self, point: &[f64]) -> Result<([usize; 3], [f64; 3])> {
        let mut elem = [0usize; 3];
        let mut xi = [0.0; 3];
        for d in 0..self.dim {
            let p = point.get(d).copied().unwrap_or(f64::NAN);
            let s = (p - self.origin[d]) / self.spacing[d];
            let cells = (self.n[d] - 1) as f64;
            let tol = 1e-12 * cells.max(1.0);
            if !(s >= -tol && s <= cells + tol) {
                return Err(Error::OutOfBounds {
                    coord: point.to_vec(),
                });
            }
            let s = s.clamp(0.0, cells);
            let e = (math::floor(s) as usize).min(self.n[d] - 2);
            elem[d] = e;
            xi[d] = 2.0 * (s - e as f64) - 1.0;
        }
        Ok((elem, xi))
    }

    /// Node index of corner `c` of the element whose lowest node is `base`.
    #[inline]
    pub fn corner_node(&self, base: usize, c: usize) -> usize {
        let mut idx = base;
        for d in 0..self.dim {
            if c >> d & 1 == 1 {
                idx += self.stride(d);
            }
        }
        idx
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len == self.node_count() {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.node_count(),
                found: len,
            })
        }
    }
}

/// The two primal nodal fields at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    /// `u` for the pure melt, `u_c` for the alloy.
    pub scalar: Vec<f64>,
    pub phi: Vec<f64>,
    pub time: f64,
}

/// Half-width of the diagnostic band around [-1, 1] that phi may occupy.
pub const PHI_CLIP: f64 = 0.05;

impl FieldState {
    pub fn uniform(grid: &Grid, scalar: f64, phi: f64) -> Self {
        FieldState {
            scalar: vec![scalar; grid.node_count()],
            phi: vec![phi; grid.node_count()],
            time: 0.0,
        }
    }

    pub fn check(&self, grid: &Grid) -> Result<()> {
        grid.check_len(self.scalar.len())?;
        grid.check_len(self.phi.len())
    }

    /// True when every value is finite.
    pub fn is_finite(&self) -> bool {
        self.scalar.iter().chain(&self.phi).all(|v| v.is_finite())
    }

    /// Largest excursion of phi beyond [-1, 1].
    pub fn phi_overshoot(&self) -> f64 {
        self.phi
            .iter()
            .map(|&p| (p.abs() - 1.0).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Basis values and reference-coordinate gradients at one point.
#[derive(Debug, Clone, Copy)]
pub struct BasisEval {
    pub count: usize,
    pub values: [f64; 8],
    pub gradients: [[f64; 3]; 8],
}

/// Evaluates the Q1 basis on the reference element `[-1, 1]^dim`.
pub fn eval_basis(dim: usize, ref_coord: &[f64]) -> BasisEval {
    let count = 1 << dim;
    let mut out = BasisEval {
        count,
        values: [0.0; 8],
        gradients: [[0.0; 3]; 8],
    };
    for c in 0..count {
        let mut value = 1.0;
        let mut factors = [0.0; 3];
        let mut signs = [0.0; 3];
        for d in 0..dim {
            let s = if c >> d & 1 == 1 { 1.0 } else { -1.0 };
            signs[d] = s;
            factors[d] = 0.5 * (1.0 + s * ref_coord[d]);
            value *= factors[d];
        }
        out.values[c] = value;
        for d in 0..dim {
            let mut g = 0.5 * signs[d];
            for e in 0..dim {
                if e != d {
                    g *= factors[e];
                }
            }
            out.gradients[c][d] = g;
        }
    }
    out
}

/// Quadrature on the reference element `[-1, 1]^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub dim: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Tensor 2-point Gauss rule, exact for degree 3 per axis.
    pub fn gauss2(dim: usize) -> Self {
        let a = 1.0 / math::sqrt(3.0);
        Self::tensor(dim, [-a, a])
    }

    /// Tensor trapezoidal rule on the element corners.
    pub fn vertex(dim: usize) -> Self {
        Self::tensor(dim, [-1.0, 1.0])
    }

    fn tensor(dim: usize, abscissae: [f64; 2]) -> Self {
        let count = 1 << dim;
        let mut points = Vec::with_capacity(count);
        for c in 0..count {
            let mut p = [0.0; 3];
            for (d, slot) in p.iter_mut().enumerate().take(dim) {
                *slot = abscissae[c >> d & 1];
            }
            points.push(p);
        }
        QuadratureRule {
            dim,
            points,
            weights: vec![1.0; count],
        }
    }
}

/// Value and physical gradient of a nodal field's Q1 interpolant at a
/// reference point of element `elem`.
pub(crate) fn eval_in_element(
    grid: &Grid,
    field: &[f64],
    elem: [usize; 3],
    xi: &[f64; 3],
) -> (f64, [f64; 3]) {
    let dim = grid.dim();
    let basis = eval_basis(dim, xi);
    let base = grid.index(elem[0], elem[1], elem[2]);
    let h = grid.spacing();
    let mut value = 0.0;
    let mut grad = [0.0; 3];
    for c in 0..basis.count {
        let v = field[grid.corner_node(base, c)];
        value += basis.values[c] * v;
        for d in 0..dim {
            // d(xi)/dx = 2/h
            grad[d] += basis.gradients[c][d] * v * 2.0 / h[d];
        }
    }
    (value, grad)
}

/// Interpolated `(scalar, phi, grad phi)` at a physical point.
pub fn interpolate(state: &FieldState, grid: &Grid, point: &[f64]) -> Result<(f64, f64, [f64; 3])> {
    state.check(grid)?;
    let (elem, xi) = grid.locate(point)?;
    let (s, _) = eval_in_element(grid, &state.scalar, elem, &xi);
    let (p, gp) = eval_in_element(grid, &state.phi, elem, &xi);
    Ok((s, p, gp))
}

/// Iterates over element lowest-corner indices in lexicographic order.
pub(crate) fn for_each_element(grid: &Grid, mut f: impl FnMut([usize; 3])) {
    let n = grid.nodes_per_axis();
    let ez_max = if grid.dim() == 3 { n[2] - 1 } else { 1 };
    for ez in 0..ez_max {
        for ey in 0..n[1] - 1 {
            for ex in 0..n[0] - 1 {
                f([ex, ey, ez]);
            }
        }
    }
}

/// Integral of the Q1 interpolant of `field` (2-point Gauss per axis).
pub fn integrate_nodal(field: &[f64], grid: &Grid) -> Result<f64> {
    grid.check_len(field.len())?;
    let rule = QuadratureRule::gauss2(grid.dim());
    let jac = grid.cell_volume() / (1 << grid.dim()) as f64;
    let bases: Vec<BasisEval> = rule
        .points
        .iter()
        .map(|p| eval_basis(grid.dim(), p))
        .collect();
    let mut total = 0.0;
    for_each_element(grid, |e| {
        let base = grid.index(e[0], e[1], e[2]);
        let mut local = 0.0;
        for (b, w) in bases.iter().zip(&rule.weights) {
            let mut v = 0.0;
            for c in 0..b.count {
                v += b.values[c] * field[grid.corner_node(base, c)];
            }
            local += w * v;
        }
        total += local * jac;
    });
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn center_and_corner_values() {
        let b = eval_basis(2, &[0.0, 0.0]);
        for c in 0..4 {
            assert_eq!(b.values[c], 0.25);
        }
        let b = eval_basis(2, &[-1.0, -1.0]);
        assert_eq!(b.values[0], 1.0);
        for c in 1..4 {
            assert_eq!(b.values[c], 0.0);
        }
        let b = eval_basis(3, &[1.0, -1.0, 1.0]);
        for c in 0..8 {
            assert_eq!(b.values[c], if c == 0b101 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn quadrature_weights_and_exactness() {
        for dim in [2, 3] {
            let r = QuadratureRule::gauss2(dim);
            let s: f64 = r.weights.iter().sum();
            assert!((s - (1 << dim) as f64).abs() < 1e-15);
            // x^3 y^2 over [-1,1]^2 = 0 * 2/3; x^2 y^2 = 4/9.
            let mut acc = 0.0;
            for (p, w) in r.points.iter().zip(&r.weights) {
                acc += w * p[0] * p[0] * p[1] * p[1];
            }
            let exact = if dim == 2 { 4.0 / 9.0 } else { 8.0 / 9.0 };
            assert!((acc - exact).abs() < 1e-15);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn partition_of_unity_and_linear_reproduction(
            x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0, three in any::<bool>()
        ) {
            let dim = if three { 3 } else { 2 };
            let p = [x, y, z];
            let b = eval_basis(dim, &p);
            let sum: f64 = b.values[..b.count].iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-14);
            for d in 0..dim {
                let g: f64 = (0..b.count).map(|c| b.gradients[c][d]).sum();
                prop_assert!(g.abs() < 1e-14);
                // Corner coordinate along d is +-1; the interpolant of xi_d is xi_d.
                let lin: f64 = (0..b.count)
                    .map(|c| b.values[c] * if c >> d & 1 == 1 { 1.0 } else { -1.0 })
                    .sum();
                prop_assert!((lin - p[d]).abs() < 1e-14);
            }
        }
    }

    fn linear_state(
        grid: &Grid,
        fu: impl Fn([f64; 3]) -> f64,
        fp: impl Fn([f64; 3]) -> f64,
    ) -> FieldState {
        let mut s = FieldState::uniform(grid, 0.0, 0.0);
        for i in 0..grid.node_count() {
            let x = grid.node_coord(i);
            s.scalar[i] = fu(x);
            s.phi[i] = fp(x);
        }
        s
    }

    #[test]
    fn interpolation_is_exact_at_nodes_and_for_linears() {
        let grid = Grid::new(&[7, 5], &[0.5, 0.75], &[1.0, -2.0]).unwrap();
        let s = linear_state(&grid, |x| x[0], |x| x[1]);
        let (u, p, g) = interpolate(&s, &grid, &grid.node_coord(12)).unwrap();
        assert_eq!(u, s.scalar[12]);
        assert_eq!(p, s.phi[12]);
        for &pt in &[[1.3, -1.1], [3.99, 0.99], [1.0, -2.0], [4.0, 1.0]] {
            let (u, p, g2) = interpolate(&s, &grid, &pt).unwrap();
            assert!((u - pt[0]).abs() < 1e-13);
            assert!((p - pt[1]).abs() < 1e-13);
            assert!(g2[0].abs() < 1e-13 && (g2[1] - 1.0).abs() < 1e-13);
        }
        assert!(g[0].abs() < 1e-13 && (g[1] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn out_of_bounds_names_coordinate() {
        let grid = Grid::new(&[3, 3], &[1.0, 1.0], &[0.0, 0.0]).unwrap();
        let s = FieldState::uniform(&grid, 0.0, 0.0);
        match interpolate(&s, &grid, &[2.5, 1.0]) {
            Err(Error::OutOfBounds { coord }) => assert_eq!(coord, vec![2.5, 1.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn integrates_constants_and_linears() {
        let l = 50.0;
        let grid = Grid::from_extent(&[l, l], l / 99.0).unwrap();
        assert_eq!(grid.node_count(), 100 * 100);
        let ones = vec![1.0; grid.node_count()];
        let v = integrate_nodal(&ones, &grid).unwrap();
        assert!((v - l * l).abs() < 1e-9);
        let xs: Vec<f64> = (0..grid.node_count())
            .map(|i| grid.node_coord(i)[0])
            .collect();
        let v = integrate_nodal(&xs, &grid).unwrap();
        assert!(((v - l * l * l / 2.0) / (l * l * l / 2.0)).abs() < 1e-12);
        assert!(integrate_nodal(&xs[1..], &grid).is_err());
    }

    /// Midpoint rule on a 4x subdivision of every element, evaluated on the
    /// interpolant via direct bilinear formulas (independent of the basis code).
    fn refined_midpoint(field: &[f64], grid: &Grid, sub: usize) -> f64 {
        let n = grid.nodes_per_axis();
        let h = grid.spacing();
        let mut total = 0.0;
        for ey in 0..n[1] - 1 {
            for ex in 0..n[0] - 1 {
                let f00 = field[grid.index(ex, ey, 0)];
                let f10 = field[grid.index(ex + 1, ey, 0)];
                let f01 = field[grid.index(ex, ey + 1, 0)];
                let f11 = field[grid.index(ex + 1, ey + 1, 0)];
                for j in 0..sub {
                    for i in 0..sub {
                        let s = (i as f64 + 0.5) / sub as f64;
                        let t = (j as f64 + 0.5) / sub as f64;
                        let v = f00 * (1.0 - s) * (1.0 - t)
                            + f10 * s * (1.0 - t)
                            + f01 * (1.0 - s) * t
                            + f11 * s * t;
                        total += v * h[0] * h[1] / (sub * sub) as f64;
                    }
                }
            }
        }
        total
    }

    #[test]
    fn random_field_matches_refined_midpoint() {
        use rand_chacha::ChaCha8Rng;
        use rand_core::{RngCore, SeedableRng};
        let grid = Grid::new(&[13, 9], &[0.7, 1.3], &[0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let field: Vec<f64> = (0..grid.node_count())
            .map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
            .collect();
        let exact = integrate_nodal(&field, &grid).unwrap();
        let oracle = refined_midpoint(&field, &grid, 4);
        // Midpoint on bilinears is exact per sub-cell up to the xy term,
        // which also integrates exactly; agreement is to rounding.
        assert!((exact - oracle).abs() < 1e-6 * oracle.abs().max(1.0));
    }
}
