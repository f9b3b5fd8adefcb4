//! Element assembly engine shared by both models.
//!
//! Two rules are available. The vertex rule is the tensor trapezoidal rule
//! on the element corners: there the Q1 gradient along axis `d` is the
//! difference quotient along the element edge through that corner, and the
//! scalar diffusion operators reduce to the usual compact stencils. The
//! Gauss rule samples the 2-point Gauss points of each axis. It is used for
//! the phase-field gradient energy, where corner sampling underresolves
//! diagonal gradients and slows growth on coarse grids.
//!
//! Assembly runs in two passes. The element pass writes every corner
//! contribution into a flat buffer (one slot per integration point and output),
//! independently per element. The gather pass sums, for each node, the
//! contributions of its surrounding elements in a fixed order that pairs
//! opposite elements, which makes the result invariant under 90 degree
//! rotations of the grid. Neither pass has write conflicts, so the result
//! is bitwise identical for any number of worker threads.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub(crate) const MAX_OUT: usize = 2;

/// Rule used for the phase-field gradient energy and its relaxation mass.
pub(crate) const PHI_RULE: Rule = Rule::Gauss;

/// Where element integrals are sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Rule {
    /// Tensor trapezoidal rule on the element corners.
    Vertex,
    /// Two-point Gauss rule per axis.
    Gauss,
}

/// Identifies the integration point being evaluated.
#[derive(Clone, Copy)]
pub(crate) struct Point {
    /// `element * points_per_element + point`; indexes per-point caches.
    pub slot: usize,
}

/// Per-point outputs: flux vectors are tested against basis gradients,
/// mass values against basis values.
#[derive(Clone, Copy, Default)]
pub(crate) struct PointOut {
    pub flux: [[f64; 3]; MAX_OUT],
    pub mass: [f64; MAX_OUT],
}

#[derive(Clone, Copy)]
pub(crate) struct Outputs {
    pub flux: usize,
    pub mass: usize,
}

impl Outputs {
    fn total(self) -> usize {
        self.flux + self.mass
    }
}

#[cfg(feature = "parallel")]
pub(crate) fn for_chunks<T: Send, F: Fn(usize, &mut [T]) + Sync>(
    data: &mut [T],
    chunk: usize,
    f: F,
) {
    use rayon::prelude::*;
    data.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn for_chunks<T: Send, F: Fn(usize, &mut [T]) + Sync>(
    data: &mut [T],
    chunk: usize,
    f: F,
) {
    data.chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

/// Applies `f(i)` to every node index and stores the result.
pub(crate) fn map_nodes<F: Fn(usize) -> f64 + Sync>(out: &mut [f64], row: usize, f: F) {
    for_chunks(out, row, |r, chunk| {
        let off = r * row;
        for (j, v) in chunk.iter_mut().enumerate() {
            *v = f(off + j);
        }
    });
}

/// Geometric lumped mass: the integral of each basis function.
pub(crate) fn lumped_mass(grid: &Grid) -> Vec<f64> {
    let n = grid.nodes_per_axis();
    let vol = grid.cell_volume();
    let mut m = vec![0.0; grid.node_count()];
    map_nodes(&mut m, n[0], |i| {
        let ijk = grid.node_ijk(i);
        let mut f = vol;
        for d in 0..grid.dim() {
            if ijk[d] == 0 || ijk[d] == n[d] - 1 {
                f *= 0.5;
            }
        }
        f
    });
    m
}

/// Runs both assembly passes.
///
/// `inputs` are nodal fields whose values and gradients at each integration
/// point are handed to `f`. `out` receives `layout.flux` residual arrays
/// followed by `layout.mass` mass-like arrays.
pub(crate) fn assemble<const NIN: usize, F>(
    grid: &Grid,
    rule: Rule,
    inputs: [&[f64]; NIN],
    layout: Outputs,
    buf: &mut Vec<f64>,
    out: &mut [Vec<f64>],
    f: F,
) -> Result<()>
where
    F: Fn(Point, &[f64; NIN], &[[f64; 3]; NIN], &mut PointOut) + Sync,
{
    debug_assert_eq!(out.len(), layout.total());
    match (grid.dim(), rule) {
        (2, Rule::Vertex) => run::<2, 4, NIN, false, F>(grid, inputs, layout, buf, out, f),
        (2, Rule::Gauss) => run::<2, 4, NIN, true, F>(grid, inputs, layout, buf, out, f),
        (_, Rule::Vertex) => run::<3, 8, NIN, false, F>(grid, inputs, layout, buf, out, f),
        (_, Rule::Gauss) => run::<3, 8, NIN, true, F>(grid, inputs, layout, buf, out, f),
    }
}

/// Gauss abscissae on `[0, 1]`: the one nearer to a corner and the one
/// farther from it.
const G_NEAR: f64 = 0.788_675_134_594_812_9;
const G_FAR: f64 = 0.211_324_865_405_187_1;

/// Product of 1D basis weights for a point whose bit pattern differs from a
/// corner's by `x` over `dims` axes.
fn tensor_weight(x: usize, dims: usize) -> f64 {
    (0..dims).fold(1.0, |w, d| w * if x >> d & 1 == 0 { G_NEAR } else { G_FAR })
}

/// Sums values indexed by a bit-pattern distance, pairing each pattern with
/// its complement so the result does not depend on the grid orientation.
#[inline(always)]
fn sym_sum(t: &[f64]) -> f64 {
    match t.len() {
        1 => t[0],
        2 => t[0] + t[1],
        4 => (t[0] + t[3]) + (t[1] + t[2]),
        _ => ((t[0] + t[7]) + (t[3] + t[4])) + ((t[1] + t[6]) + (t[2] + t[5])),
    }
}

/// Inserts a zero bit at position `d` of `x`.
#[inline(always)]
fn unsqueeze(x: usize, d: usize) -> usize {
    (x & ((1 << d) - 1)) | ((x >> d) << (d + 1))
}

fn run<const D: usize, const NC: usize, const NIN: usize, const GAUSS: bool, F>(
    grid: &Grid,
    inputs: [&[f64]; NIN],
    layout: Outputs,
    buf: &mut Vec<f64>,
    out: &mut [Vec<f64>],
    f: F,
) -> Result<()>
where
    F: Fn(Point, &[f64; NIN], &[[f64; 3]; NIN], &mut PointOut) + Sync,
{
    let n = grid.nodes_per_axis();
    let ne = [n[0] - 1, n[1] - 1, if D == 3 { n[2] - 1 } else { 1 }];
    let n_elem = ne[0] * ne[1] * ne[2];
    let k = layout.total();
    let per_elem = NC * k;
    buf.clear();
    buf.resize(n_elem * per_elem, 0.0);

    let h = grid.spacing();
    let mut inv_h = [0.0; 3];
    for d in 0..D {
        inv_h[d] = 1.0 / h[d];
    }
    let w = grid.cell_volume() / NC as f64;
    let mut corner_off = [0usize; NC];
    for (c, off) in corner_off.iter_mut().enumerate() {
        *off = grid.corner_node(0, c);
    }
    let mut w_full = [0.0; NC];
    let mut w_half = [0.0; NC];
    for x in 0..NC {
        w_full[x] = tensor_weight(x, D);
        w_half[x] = tensor_weight(x, D - 1);
    }
    let half = NC / 2;
    for_chunks(buf, ne[0] * per_elem, |row, chunk| {
        let ey = row % ne[1];
        let ez = row / ne[1];
        let mut vals = [[0.0; NC]; NIN];
        let mut pv = [[0.0; NIN]; NC];
        let mut grads = [[[0.0; 3]; NIN]; NC];
        let mut po = [PointOut::default(); NC];
        let mut t = [0.0; NC];
        for ex in 0..ne[0] {
            let elem = ex + ne[0] * row;
            let base = grid.index(ex, ey, ez);
            for (q, field) in inputs.iter().enumerate() {
                for c in 0..NC {
                    vals[q][c] = field[base + corner_off[c]];
                }
            }
            for p in 0..NC {
                for q in 0..NIN {
                    if GAUSS {
                        for x in 0..NC {
                            t[x] = w_full[x] * vals[q][p ^ x];
                        }
                        pv[p][q] = sym_sum(&t);
                        for d in 0..D {
                            let bit = 1 << d;
                            for x in 0..half {
                                let c = (p ^ unsqueeze(x, d)) & !bit;
                                t[x] = w_half[x] * ((vals[q][c | bit] - vals[q][c]) * inv_h[d]);
                            }
                            grads[p][q][d] = sym_sum(&t[..half]);
                        }
                    } else {
                        pv[p][q] = vals[q][p];
                        for d in 0..D {
                            let bit = 1 << d;
                            grads[p][q][d] = (vals[q][p | bit] - vals[q][p & !bit]) * inv_h[d];
                        }
                    }
                }
                f(
                    Point {
                        slot: elem * NC + p,
                    },
                    &pv[p],
                    &grads[p],
                    &mut po[p],
                );
            }
            let dst = &mut chunk[ex * per_elem..(ex + 1) * per_elem];
            for c in 0..NC {
                let o = &mut dst[c * k..(c + 1) * k];
                for j in 0..layout.flux {
                    let mut td = [0.0; D];
                    for d in 0..D {
                        let bit = 1 << d;
                        let s = if c & bit != 0 { inv_h[d] } else { -inv_h[d] };
                        let pair = if GAUSS {
                            for x in 0..half {
                                let p = (c ^ unsqueeze(x, d)) & !bit;
                                t[x] = w_half[x] * (po[p].flux[j][d] + po[p | bit].flux[j][d]);
                            }
                            sym_sum(&t[..half])
                        } else {
                            po[c].flux[j][d] + po[c ^ bit].flux[j][d]
                        };
                        td[d] = s * pair;
                    }
                    let sum = if D == 3 {
                        (td[0] + td[1]) + td[2]
                    } else {
                        td[0] + td[1]
                    };
                    o[j] = w * sum;
                }
                for j in 0..layout.mass {
                    o[layout.flux + j] = if GAUSS {
                        for x in 0..NC {
                            t[x] = w_full[x] * po[c ^ x].mass[j];
                        }
                        w * sym_sum(&t)
                    } else {
                        w * po[c].mass[j]
                    };
                }
            }
        }
    });

    if let Some(pos) = buf.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            element: pos / per_elem,
        });
    }

    let buf = &*buf;
    for (slot, arr) in out.iter_mut().enumerate() {
        arr.clear();
        arr.resize(grid.node_count(), 0.0);
        map_nodes(arr, n[0], |i| {
            let ijk = grid.node_ijk(i);
            let mut p = [0.0; NC];
            for (c, pc) in p.iter_mut().enumerate() {
                // The node is corner `c` of the element displaced by -bit(c).
                let mut e = 0usize;
                let mut stride = 1usize;
                let mut inside = true;
                for d in 0..D {
                    let off = (c >> d) & 1;
                    if ijk[d] < off || ijk[d] - off >= ne[d] {
                        inside = false;
                        break;
                    }
                    e += (ijk[d] - off) * stride;
                    stride *= ne[d];
                }
                if inside {
                    *pc = buf[(e * NC + c) * k + slot];
                }
            }
            if D == 3 {
                ((p[0] + p[7]) + (p[3] + p[4])) + ((p[1] + p[6]) + (p[2] + p[5]))
            } else {
                (p[0] + p[3]) + (p[1] + p[2])
            }
        });
    }
    Ok(())
}
