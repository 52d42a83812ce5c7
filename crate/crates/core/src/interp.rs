//! Local interpolation weights and reusable transfer plans.
//!
//! A [`TransferPlan`] stores, for every target point, the lower corner of the
//! source cell containing it and the `2^d` weights of the chosen underlying
//! method. Corner `c` of a cell is the node offset by bit `k` of `c` along
//! axis `k` (lexicographic, lowest axis fastest).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Field, Grid, Point, MAX_DIM};

const MAX_CORNERS: usize = 1 << MAX_DIM;

/// Underlying local interpolation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Tensor-product (bi/tri)linear interpolation in cell-local coordinates.
    Multilinear,
    /// Evaluation of the least-squares affine fit to the cell's vertices.
    #[serde(rename = "lls")]
    LeastSquares,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Multilinear => "multilinear",
            Method::LeastSquares => "lls",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpError {
    #[error("local coordinate {value} on axis {axis} is outside [0, 1]")]
    LocalOutOfRange { axis: usize, value: f64 },
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("cell vertices are degenerate; the affine fit is rank deficient")]
    RankDeficient,
    #[error("field does not live on the plan's source grid")]
    GridMismatch,
}

/// Fills `out[..2^d]` with tensor-product weights. No range checks.
#[inline]
pub(crate) fn fill_multilinear(local: &[f64], out: &mut [f64]) {
    let d = local.len();
    for (c, w) in out.iter_mut().enumerate().take(1 << d) {
        let mut v = 1.0;
        for (k, &t) in local.iter().enumerate() {
            v *= if (c >> k) & 1 == 1 { t } else { 1.0 - t };
        }
        *w = v;
    }
}

/// Multilinear weights for local coordinates in `[0, 1]^d`.
pub fn multilinear_weights(local: &[f64]) -> Result<Vec<f64>, InterpError> {
    if local.is_empty() || local.len() > MAX_DIM {
        return Err(InterpError::Length {
            expected: MAX_DIM,
            got: local.len(),
        });
    }
    for (axis, &value) in local.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(InterpError::LocalOutOfRange { axis, value });
        }
    }
    let mut out = vec![0.0; 1 << local.len()];
    fill_multilinear(local, &mut out);
    Ok(out)
}

/// Least-squares affine weights. `vertices` holds `n` points of dimension
/// `d`; writes `n` weights to `out`.
///
/// Solves the `(d+1) x (d+1)` normal equations of the fit
/// `f(x) = c0 + c . (x - xbar)` in coordinates centered at the vertex mean and
/// scaled by the vertex extent.
pub(crate) fn fill_lls(
    vertices: &[Point],
    d: usize,
    p: &Point,
    out: &mut [f64],
) -> Result<(), InterpError> {
    let n = vertices.len();
    let m = d + 1;
    let mut mean = [0.0; MAX_DIM];
    for v in vertices {
        for k in 0..d {
            mean[k] += v[k];
        }
    }
    for v in mean.iter_mut().take(d) {
        *v /= n as f64;
    }
    let mut scale = 0.0_f64;
    for v in vertices {
        for k in 0..d {
            scale = scale.max((v[k] - mean[k]).abs());
        }
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(InterpError::RankDeficient);
    }
    let row = |x: &Point| {
        let mut r = [1.0; MAX_DIM + 1];
        for k in 0..d {
            r[k + 1] = (x[k] - mean[k]) / scale;
        }
        r
    };

    let mut gram = [[0.0; MAX_DIM + 1]; MAX_DIM + 1];
    for v in vertices {
        let r = row(v);
        for i in 0..m {
            for j in 0..=i {
                gram[i][j] += r[i] * r[j];
            }
        }
    }
    // Cholesky, lower triangle in place
    let trace: f64 = (0..m).map(|i| gram[i][i]).sum();
    for j in 0..m {
        let mut diag = gram[j][j];
        for k in 0..j {
            diag -= gram[j][k] * gram[j][k];
        }
        if diag <= 1e-12 * trace {
            return Err(InterpError::RankDeficient);
        }
        let diag = diag.sqrt();
        gram[j][j] = diag;
        for i in j + 1..m {
            let mut s = gram[i][j];
            for k in 0..j {
                s -= gram[i][k] * gram[j][k];
            }
            gram[i][j] = s / diag;
        }
    }
    let mut z = row(p);
    for i in 0..m {
        for k in 0..i {
            z[i] -= gram[i][k] * z[k];
        }
        z[i] /= gram[i][i];
    }
    for i in (0..m).rev() {
        for k in i + 1..m {
            z[i] -= gram[k][i] * z[k];
        }
        z[i] /= gram[i][i];
    }
    for (w, v) in out.iter_mut().zip(vertices) {
        let r = row(v);
        *w = (0..m).map(|i| r[i] * z[i]).sum();
    }
    Ok(())
}

/// Weights that evaluate, at `p`, the affine least-squares fit to values at
/// the `d`-dimensional `cell_vertices`.
pub fn lls_weights(cell_vertices: &[Point], d: usize, p: &Point) -> Result<Vec<f64>, InterpError> {
    if d == 0 || d > MAX_DIM {
        return Err(InterpError::Length {
            expected: MAX_DIM,
            got: d,
        });
    }
    let mut out = vec![0.0; cell_vertices.len()];
    fill_lls(cell_vertices, d, p, &mut out)?;
    Ok(out)
}

/// Precomputed stencils from a source grid to a list of target points.
#[derive(Debug, Clone)]
pub struct TransferPlan {
    source: Grid,
    method: Method,
    corners: usize,
    corner_offsets: [usize; MAX_CORNERS],
    base: Vec<usize>,
    weights: Vec<f64>,
    valid: Vec<bool>,
}

/// Output of [`TransferPlan::apply`]. Invalid targets hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Transferred {
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl TransferPlan {
    /// Builds a plan for targets produced by `target_at(0..len)`.
    pub fn from_fn<F>(source: &Grid, len: usize, method: Method, target_at: F) -> Self
    where
        F: Fn(usize) -> Point + Sync,
    {
        let d = source.dim();
        let corners = 1usize << d;
        let corner_offsets = corner_offsets(source);
        let mut base = vec![0usize; len];
        let mut weights = vec![0.0; len * corners];
        let mut valid = vec![false; len];

        base.par_iter_mut()
            .zip(weights.par_chunks_mut(corners))
            .zip(valid.par_iter_mut())
            .enumerate()
            .for_each(|(t, ((b, w), ok))| {
                let p = target_at(t);
                let Ok(loc) = source.locate(&p) else {
                    return;
                };
                if !loc.inside {
                    return;
                }
                *b = source.linear_index(loc.cell);
                *ok = fill_weights(source, method, loc.cell, &loc.local, &p, w);
            });

        TransferPlan {
            source: source.clone(),
            method,
            corners,
            corner_offsets,
            base,
            weights,
            valid,
        }
    }

    /// Plan whose targets are the nodes of `target`.
    pub fn for_grid(source: &Grid, target: &Grid, method: Method) -> Self {
        Self::from_fn(source, target.len(), method, |t| target.position_linear(t))
    }

    pub fn source(&self) -> &Grid {
        &self.source
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn len(&self) -> usize {
        self.valid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valid.is_empty()
    }

    pub fn is_valid(&self, entry: usize) -> bool {
        self.valid[entry]
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn weights(&self, entry: usize) -> &[f64] {
        &self.weights[entry * self.corners..(entry + 1) * self.corners]
    }

    /// Source node indices of an entry's stencil, in weight order.
    pub fn nodes(&self, entry: usize) -> impl Iterator<Item = usize> + '_ {
        let b = self.base[entry];
        self.corner_offsets[..self.corners].iter().map(move |o| b + o)
    }

    /// Stencil nodes that carry a nonzero weight.
    pub fn active_nodes(&self, entry: usize) -> impl Iterator<Item = usize> + '_ {
        self.nodes(entry)
            .zip(self.weights(entry))
            .filter(|(_, w)| **w != 0.0)
            .map(|(n, _)| n)
    }

    /// Weighted sum at one entry; NaN when the entry is invalid.
    #[inline]
    fn eval(&self, entry: usize, values: &[f64]) -> f64 {
        if !self.valid[entry] {
            return f64::NAN;
        }
        let b = self.base[entry];
        let mut nodes = [0usize; MAX_CORNERS];
        for (n, o) in nodes.iter_mut().zip(&self.corner_offsets[..self.corners]) {
            *n = b + o;
        }
        weighted_sum(&nodes[..self.corners], self.weights(entry), values)
    }

    pub(crate) fn apply_values(&self, values: &[f64]) -> Vec<f64> {
        debug_assert_eq!(values.len(), self.source.len());
        let mut out = vec![0.0; self.len()];
        out.par_iter_mut()
            .enumerate()
            .for_each(|(t, o)| *o = self.eval(t, values));
        out
    }

    /// Interpolates `f` to every target.
    pub fn apply(&self, f: &Field) -> Result<Transferred, InterpError> {
        if f.grid() != &self.source {
            return Err(InterpError::GridMismatch);
        }
        Ok(Transferred {
            values: self.apply_values(f.values()),
            valid: self.valid.clone(),
        })
    }
}

/// Fills `w` with the weights of `method` for the point `p` lying at
/// (`cell`, `local`) in `source`. Returns false for degenerate cells.
fn fill_weights(
    source: &Grid,
    method: Method,
    cell: [usize; MAX_DIM],
    local: &Point,
    p: &Point,
    w: &mut [f64],
) -> bool {
    let d = source.dim();
    match method {
        Method::Multilinear => {
            fill_multilinear(&local[..d], w);
            true
        }
        Method::LeastSquares => {
            let corners = 1 << d;
            let mut verts = [[0.0; MAX_DIM]; MAX_CORNERS];
            for (c, v) in verts.iter_mut().enumerate().take(corners) {
                let mut idx = cell;
                for (k, i) in idx.iter_mut().enumerate().take(d) {
                    *i += (c >> k) & 1;
                }
                *v = source.node_position(idx);
            }
            fill_lls(&verts[..corners], d, p, w).is_ok()
        }
    }
}

/// `sum w_c values[nodes_c]`, skipping zero weights so that coincident nodes
/// copy exactly.
#[inline]
pub(crate) fn weighted_sum(nodes: &[usize], w: &[f64], values: &[f64]) -> f64 {
    let mut acc: Option<f64> = None;
    for (&n, &wc) in nodes.iter().zip(w) {
        if wc != 0.0 {
            let term = wc * values[n];
            acc = Some(match acc {
                Some(a) => a + term,
                None => term,
            });
        }
    }
    acc.unwrap_or(0.0)
}

fn corner_offsets(source: &Grid) -> [usize; MAX_CORNERS] {
    let d = source.dim();
    let strides = source.strides();
    let mut out = [0usize; MAX_CORNERS];
    for (c, off) in out.iter_mut().enumerate().take(1 << d) {
        *off = (0..d).map(|k| ((c >> k) & 1) * strides[k]).sum();
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct AxisLocation {
    cell: usize,
    local: f64,
    inside: bool,
}

/// Stencils between two unrotated grids, computed on demand from per-axis
/// locations. Produces the same stencils as a stored plan without holding
/// `2^d` weights per target.
#[derive(Debug, Clone)]
pub(crate) struct SeparableTransfer {
    source: Grid,
    method: Method,
    corner_offsets: [usize; MAX_CORNERS],
    target_counts: [usize; MAX_DIM],
    /// `None` where Newton inversion failed.
    axes: [Vec<Option<AxisLocation>>; MAX_DIM],
    coords: [Vec<f64>; MAX_DIM],
}

impl SeparableTransfer {
    fn new(source: &Grid, target: &Grid, method: Method) -> Self {
        let d = source.dim();
        let mut axes: [Vec<Option<AxisLocation>>; MAX_DIM] = Default::default();
        let mut coords: [Vec<f64>; MAX_DIM] = Default::default();
        for k in 0..d {
            coords[k] = (0..target.counts()[k]).map(|i| target.axis_position(k, i)).collect();
            axes[k] = coords[k]
                .iter()
                .map(|&x| {
                    source
                        .locate_axis_physical(k, x)
                        .ok()
                        .map(|(cell, local, inside)| AxisLocation { cell, local, inside })
                })
                .collect();
        }
        SeparableTransfer {
            source: source.clone(),
            method,
            corner_offsets: corner_offsets(source),
            target_counts: target.counts(),
            axes,
            coords,
        }
    }

    #[inline]
    fn stencil(&self, t: usize, nodes: &mut [usize; MAX_CORNERS], w: &mut [f64; MAX_CORNERS]) -> usize {
        let d = self.source.dim();
        let n = &self.target_counts;
        let idx = [t % n[0], (t / n[0]) % n[1], t / (n[0] * n[1])];
        let mut cell = [0usize; MAX_DIM];
        let mut local = [0.0; MAX_DIM];
        let mut p = [0.0; MAX_DIM];
        for k in 0..d {
            match self.axes[k][idx[k]] {
                Some(a) if a.inside => {
                    cell[k] = a.cell;
                    local[k] = a.local;
                    p[k] = self.coords[k][idx[k]];
                }
                _ => return 0,
            }
        }
        let corners = 1 << d;
        if !fill_weights(&self.source, self.method, cell, &local, &p, &mut w[..corners]) {
            return 0;
        }
        let b = self.source.linear_index(cell);
        for (nd, o) in nodes.iter_mut().zip(&self.corner_offsets[..corners]) {
            *nd = b + o;
        }
        corners
    }
}

/// Stencil provider for grid-to-grid passes: stored weights, or per-axis
/// locations when neither grid is rotated.
#[derive(Debug, Clone)]
pub(crate) enum Transfer {
    Stored(TransferPlan),
    Separable(SeparableTransfer),
}

impl Transfer {
    pub(crate) fn between(source: &Grid, target: &Grid, method: Method) -> Self {
        if source.is_rotated() || target.is_rotated() || source.dim() != target.dim() {
            Transfer::Stored(TransferPlan::for_grid(source, target, method))
        } else {
            Transfer::Separable(SeparableTransfer::new(source, target, method))
        }
    }

    pub(crate) fn len(&self) -> usize {
        match self {
            Transfer::Stored(p) => p.len(),
            Transfer::Separable(s) => s.target_counts.iter().product(),
        }
    }

    /// Writes the stencil of entry `t` and returns its corner count, or 0
    /// when the entry is invalid.
    #[inline]
    pub(crate) fn stencil(
        &self,
        t: usize,
        nodes: &mut [usize; MAX_CORNERS],
        w: &mut [f64; MAX_CORNERS],
    ) -> usize {
        match self {
            Transfer::Stored(p) => {
                if !p.valid[t] {
                    return 0;
                }
                let b = p.base[t];
                for c in 0..p.corners {
                    nodes[c] = b + p.corner_offsets[c];
                }
                w[..p.corners].copy_from_slice(p.weights(t));
                p.corners
            }
            Transfer::Separable(s) => s.stencil(t, nodes, w),
        }
    }

    /// Interpolated values (NaN where invalid) and the validity mask.
    pub(crate) fn apply_with_mask(&self, values: &[f64]) -> (Vec<f64>, Vec<bool>) {
        (0..self.len())
            .into_par_iter()
            .map(|t| {
                let mut nodes = [0usize; MAX_CORNERS];
                let mut w = [0.0; MAX_CORNERS];
                match self.stencil(t, &mut nodes, &mut w) {
                    0 => (f64::NAN, false),
                    c => (weighted_sum(&nodes[..c], &w[..c], values), true),
                }
            })
            .unzip()
    }
}

/// Builds a plan from `source` to explicit target points.
pub fn build_transfer_plan(source: &Grid, targets: &[Point], method: Method) -> TransferPlan {
    TransferPlan::from_fn(source, targets.len(), method, |t| targets[t])
}

pub fn apply_plan(plan: &TransferPlan, f: &Field) -> Result<Transferred, InterpError> {
    plan.apply(f)
}
