//! Structured grids in one to three dimensions.
//!
//! A grid is an index lattice `i = (i0, i1, i2)` together with a coordinate
//! map. The map is axis-separable (uniform spacing plus an optional smooth
//! sinusoidal perturbation per axis) composed with a rigid motion
//! `p = R q + b` on the outside. Shifts only touch `b`, rotations touch both.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

/// A physical point. Components beyond the grid dimension are ignored and
/// conventionally zero.
pub type Point = [f64; MAX_DIM];

/// Slack, in index units, for points sitting on the lattice hull.
const HULL_TOL: f64 = 1e-10;
/// Points this close (in index units) to a node are treated as on it.
const SNAP_TOL: f64 = 1e-11;
/// Newton tolerance on the perturbed axis map, in units of the spacing.
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 25;

const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("dimension must be 1, 2 or 3, got {0}")]
    InvalidDim(usize),
    #[error("expected {expected} components for {what}, got {got}")]
    ComponentCount {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("axis {axis}: need at least 2 nodes, got {count}")]
    TooFewNodes { axis: usize, count: usize },
    #[error("axis {axis}: spacing must be positive and finite, got {spacing}")]
    InvalidSpacing { axis: usize, spacing: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("rotation axis is not a unit vector (norm {0})")]
    NonUnitAxis(f64),
    #[error("rotation needs a 2D or 3D grid")]
    RotationIn1d,
    #[error("perturbation amplitude {0} is too large for a monotone map (amplitude * pi must stay below 1)")]
    AmplitudeTooLarge(f64),
    #[error("{op} is not supported on a {kind} grid")]
    UnsupportedKind { op: &'static str, kind: &'static str },
    #[error("axis {axis}: split factor {factor} leaves a subgrid with fewer than 2 nodes")]
    SplitTooCoarse { axis: usize, factor: usize },
    #[error("Newton iteration on axis {axis} did not converge after {iterations} iterations (step {step:e})")]
    NewtonDivergence {
        axis: usize,
        iterations: usize,
        step: f64,
    },
}

/// Which family of coordinate map a grid uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Uniform,
    Shifted,
    Rotated,
    Perturbed,
}

impl MapKind {
    pub fn name(self) -> &'static str {
        match self {
            MapKind::Uniform => "uniform",
            MapKind::Shifted => "shifted",
            MapKind::Rotated => "rotated",
            MapKind::Perturbed => "perturbed",
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-axis sinusoidal perturbation `s + a * h * sin(pi * s)` of the lattice
/// coordinate `s = -L/2 + i h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub amplitude: f64,
    pub lengths: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    counts: [usize; MAX_DIM],
    spacing: [f64; MAX_DIM],
    origin: Point,
    perturbation: Option<Perturbation>,
    matrix: [[f64; 3]; 3],
    offset: Point,
}

/// Result of locating a physical point in a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellLocation {
    pub cell: [usize; MAX_DIM],
    pub local: Point,
    pub inside: bool,
}

fn expect_len<T>(what: &'static str, v: &[T], dim: usize) -> Result<(), GridError> {
    if v.len() != dim {
        return Err(GridError::ComponentCount {
            what,
            expected: dim,
            got: v.len(),
        });
    }
    Ok(())
}

fn mat_vec(m: &[[f64; 3]; 3], v: &Point) -> Point {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn mat_t_vec(m: &[[f64; 3]; 3], v: &Point) -> Point {
    [
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    ]
}

fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

/// Rotation matrix about a unit axis (Rodrigues).
fn rotation_matrix(angle_rad: f64, axis: &Point) -> [[f64; 3]; 3] {
    let (s, c) = angle_rad.sin_cos();
    let t = 1.0 - c;
    let [x, y, z] = *axis;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

/// Builds a grid with `node_position(i) = origin + i * spacing`.
pub fn make_uniform_grid(
    dim: usize,
    counts: &[usize],
    spacing: &[f64],
    origin: &[f64],
) -> Result<Grid, GridError> {
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(GridError::InvalidDim(dim));
    }
    expect_len("counts", counts, dim)?;
    expect_len("spacing", spacing, dim)?;
    expect_len("origin", origin, dim)?;
    let mut grid = Grid {
        dim,
        counts: [1; MAX_DIM],
        spacing: [1.0; MAX_DIM],
        origin: [0.0; MAX_DIM],
        perturbation: None,
        matrix: IDENTITY,
        offset: [0.0; MAX_DIM],
    };
    for axis in 0..dim {
        if counts[axis] < 2 {
            return Err(GridError::TooFewNodes {
                axis,
                count: counts[axis],
            });
        }
        if !(spacing[axis].is_finite() && spacing[axis] > 0.0) {
            return Err(GridError::InvalidSpacing {
                axis,
                spacing: spacing[axis],
            });
        }
        if !origin[axis].is_finite() {
            return Err(GridError::NonFinite("origin"));
        }
        grid.counts[axis] = counts[axis];
        grid.spacing[axis] = spacing[axis];
        grid.origin[axis] = origin[axis];
    }
    Ok(grid)
}

/// Translates every node by `w`.
pub fn shift_grid(g: &Grid, w: &[f64]) -> Result<Grid, GridError> {
    expect_len("shift", w, g.dim)?;
    if w.iter().any(|v| !v.is_finite()) {
        return Err(GridError::NonFinite("shift"));
    }
    let mut out = g.clone();
    for (o, v) in out.offset.iter_mut().zip(w) {
        *o += v;
    }
    Ok(out)
}

/// Rigidly rotates a grid by `angle_deg` about `axis` through `center`.
///
/// In 2D the axis is always z and `axis` must be `None` or `(0, 0, 1)`.
/// An axis whose norm is within 1e-12 of one is normalized; anything else is
/// rejected.
pub fn rotate_grid(
    g: &Grid,
    angle_deg: f64,
    axis: Option<&[f64]>,
    center: &[f64],
) -> Result<Grid, GridError> {
    if g.dim == 1 {
        return Err(GridError::RotationIn1d);
    }
    if g.perturbation.is_some() {
        return Err(GridError::UnsupportedKind {
            op: "rotate_grid",
            kind: "perturbed",
        });
    }
    expect_len("center", center, g.dim)?;
    if !angle_deg.is_finite() || center.iter().any(|v| !v.is_finite()) {
        return Err(GridError::NonFinite("rotation"));
    }
    let mut unit: Point = [0.0, 0.0, 1.0];
    if let Some(a) = axis {
        expect_len("rotation axis", a, 3)?;
        let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(GridError::NonUnitAxis(norm));
        }
        unit = [a[0] / norm, a[1] / norm, a[2] / norm];
        if g.dim == 2 && (unit[0] != 0.0 || unit[1] != 0.0) {
            return Err(GridError::NonUnitAxis(norm));
        }
    }
    let mut c: Point = [0.0; MAX_DIM];
    c[..g.dim].copy_from_slice(center);
    let rot = rotation_matrix(angle_deg.to_radians(), &unit);

    let mut out = g.clone();
    out.matrix = mat_mul(&rot, &g.matrix);
    let rel = [g.offset[0] - c[0], g.offset[1] - c[1], g.offset[2] - c[2]];
    let moved = mat_vec(&rot, &rel);
    for k in 0..MAX_DIM {
        out.offset[k] = moved[k] + c[k];
    }
    Ok(out)
}

/// Replaces the lattice coordinates by the smoothly perturbed map
/// `x = s + amplitude * h * sin(pi * s)` with `s = i h - L/2`, per axis.
///
/// The lattice is re-centered on the domain of lengths `lengths`; any existing
/// translation is kept.
pub fn perturb_grid(g: &Grid, amplitude: f64, lengths: &[f64]) -> Result<Grid, GridError> {
    if g.is_rotated() || g.perturbation.is_some() {
        return Err(GridError::UnsupportedKind {
            op: "perturb_grid",
            kind: g.kind().name(),
        });
    }
    expect_len("lengths", lengths, g.dim)?;
    if !amplitude.is_finite() || lengths.iter().any(|v| !v.is_finite()) {
        return Err(GridError::NonFinite("perturbation"));
    }
    let max_h = g.spacing[..g.dim].iter().fold(1.0_f64, |m, &h| m.max(h));
    if amplitude.abs() * PI * max_h >= 1.0 || amplitude.abs() * PI >= 1.0 {
        return Err(GridError::AmplitudeTooLarge(amplitude));
    }
    let mut out = g.clone();
    let mut l: Point = [0.0; MAX_DIM];
    l[..g.dim].copy_from_slice(lengths);
    for axis in 0..g.dim {
        out.origin[axis] = -0.5 * l[axis];
    }
    out.perturbation = Some(Perturbation {
        amplitude,
        lengths: l,
    });
    Ok(out)
}

/// One piece of a fine grid split by [`split_fine_grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Subgrid {
    pub grid: Grid,
    pub offset: [usize; MAX_DIM],
    pub factor: [usize; MAX_DIM],
}

impl Subgrid {
    /// Multi-index in the fine grid of subgrid node `idx`.
    pub fn fine_index(&self, idx: [usize; MAX_DIM]) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        for k in 0..MAX_DIM {
            out[k] = self.offset[k] + self.factor[k] * idx[k];
        }
        out
    }
}

/// Splits a fine grid into `prod(factor)` interleaved subgrids: subgrid `s`
/// takes every `factor`-th node starting at offset `s`. Subgrids are ordered
/// lexicographically by offset, lowest axis fastest.
pub fn split_fine_grid(fine: &Grid, factor: &[usize]) -> Result<Vec<Subgrid>, GridError> {
    if fine.perturbation.is_some() || fine.is_rotated() {
        return Err(GridError::UnsupportedKind {
            op: "split_fine_grid",
            kind: fine.kind().name(),
        });
    }
    expect_len("split factor", factor, fine.dim)?;
    let mut fac = [1usize; MAX_DIM];
    for axis in 0..fine.dim {
        let f = factor[axis];
        // the last offset (f - 1) must still see two nodes
        if f == 0 || fine.counts[axis] < f + 1 + (f - 1) {
            return Err(GridError::SplitTooCoarse { axis, factor: f });
        }
        fac[axis] = f;
    }
    let total: usize = fac.iter().product();
    let mut out = Vec::with_capacity(total);
    for s in 0..total {
        let mut off = [0usize; MAX_DIM];
        let mut rest = s;
        for k in 0..MAX_DIM {
            off[k] = rest % fac[k];
            rest /= fac[k];
        }
        let mut g = fine.clone();
        for k in 0..fine.dim {
            let n = fine.counts[k];
            g.counts[k] = (n - off[k]).div_ceil(fac[k]);
            g.spacing[k] = fine.spacing[k] * fac[k] as f64;
            g.origin[k] = fine.origin[k] + off[k] as f64 * fine.spacing[k];
        }
        out.push(Subgrid {
            grid: g,
            offset: off,
            factor: fac,
        });
    }
    Ok(out)
}

/// Free-function form of [`Grid::locate`].
pub fn locate_cell(g: &Grid, p: &Point) -> Result<CellLocation, GridError> {
    g.locate(p)
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Node counts per axis; unused axes report 1.
    pub fn counts(&self) -> [usize; MAX_DIM] {
        self.counts
    }

    pub fn spacing(&self) -> [f64; MAX_DIM] {
        self.spacing
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn perturbation(&self) -> Option<Perturbation> {
        self.perturbation
    }

    /// Rigid part of the map: `p = matrix * q + offset`.
    pub fn rigid_motion(&self) -> ([[f64; 3]; 3], Point) {
        (self.matrix, self.offset)
    }

    pub(crate) fn is_rotated(&self) -> bool {
        self.matrix != IDENTITY
    }

    pub fn kind(&self) -> MapKind {
        if self.is_rotated() {
            MapKind::Rotated
        } else if self.perturbation.is_some() {
            MapKind::Perturbed
        } else if self.offset.iter().any(|&v| v != 0.0) {
            MapKind::Shifted
        } else {
            MapKind::Uniform
        }
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Linear node index, lowest axis fastest.
    #[inline]
    pub fn linear_index(&self, idx: [usize; MAX_DIM]) -> usize {
        idx[0] + self.counts[0] * (idx[1] + self.counts[1] * idx[2])
    }

    #[inline]
    pub fn multi_index(&self, lin: usize) -> [usize; MAX_DIM] {
        let i0 = lin % self.counts[0];
        let rest = lin / self.counts[0];
        [i0, rest % self.counts[1], rest / self.counts[1]]
    }

    /// Linear-index stride per axis.
    pub fn strides(&self) -> [usize; MAX_DIM] {
        [1, self.counts[0], self.counts[0] * self.counts[1]]
    }

    /// Lattice coordinate before the perturbation and rigid motion.
    #[inline]
    fn lattice_coord(&self, axis: usize, i: f64) -> f64 {
        self.origin[axis] + i * self.spacing[axis]
    }

    /// Axis-separable part of the map at integer index `i`.
    #[inline]
    fn axis_node(&self, axis: usize, i: usize) -> f64 {
        let s = self.lattice_coord(axis, i as f64);
        match &self.perturbation {
            Some(p) if axis < self.dim => {
                s + p.amplitude * self.spacing[axis] * (PI * s).sin()
            }
            _ => s,
        }
    }

    #[inline]
    fn to_physical(&self, q: &Point) -> Point {
        if self.is_rotated() {
            let mut p = mat_vec(&self.matrix, q);
            for k in 0..MAX_DIM {
                p[k] += self.offset[k];
            }
            p
        } else {
            [
                q[0] + self.offset[0],
                q[1] + self.offset[1],
                q[2] + self.offset[2],
            ]
        }
    }

    #[inline]
    fn to_lattice(&self, p: &Point) -> Point {
        let rel = [
            p[0] - self.offset[0],
            p[1] - self.offset[1],
            p[2] - self.offset[2],
        ];
        if self.is_rotated() {
            mat_t_vec(&self.matrix, &rel)
        } else {
            rel
        }
    }

    pub fn node_position(&self, idx: [usize; MAX_DIM]) -> Point {
        let mut q = [0.0; MAX_DIM];
        for k in 0..self.dim {
            q[k] = self.axis_node(k, idx[k]);
        }
        let mut p = self.to_physical(&q);
        for v in p.iter_mut().skip(self.dim) {
            *v = 0.0;
        }
        p
    }

    pub fn position_linear(&self, lin: usize) -> Point {
        self.node_position(self.multi_index(lin))
    }

    /// Physical point with cell index `cell` and local coordinates `local`.
    pub fn position_of(&self, cell: [usize; MAX_DIM], local: &Point) -> Point {
        let mut q = [0.0; MAX_DIM];
        for k in 0..self.dim {
            let a = self.axis_node(k, cell[k]);
            let b = self.axis_node(k, cell[k] + 1);
            q[k] = a + local[k] * (b - a);
        }
        let mut p = self.to_physical(&q);
        for v in p.iter_mut().skip(self.dim) {
            *v = 0.0;
        }
        p
    }

    /// Inverts the perturbed axis map `s + a h sin(pi s) = x` for `s`.
    fn invert_perturbed(&self, axis: usize, x: f64, pert: &Perturbation) -> Result<f64, GridError> {
        let h = self.spacing[axis];
        let ah = pert.amplitude * h;
        let mut s = x;
        let mut step = f64::INFINITY;
        for _ in 0..NEWTON_MAX_ITER {
            let (sn, cs) = (PI * s).sin_cos();
            let r = s + ah * sn - x;
            let d = 1.0 + ah * PI * cs;
            step = r / d;
            s -= step;
            if (step / h).abs() <= NEWTON_TOL {
                return Ok(s);
            }
        }
        Err(GridError::NewtonDivergence {
            axis,
            iterations: NEWTON_MAX_ITER,
            step: step / h,
        })
    }

    /// Locates `p` in the lattice.
    ///
    /// Points on an interior node report that node as the lower corner with
    /// zero local coordinates; only the global upper hull yields local = 1.
    /// For points outside the hull, `inside` is false and the returned cell
    /// and local coordinates are clamped.
    pub fn locate(&self, p: &Point) -> Result<CellLocation, GridError> {
        let q = self.to_lattice(p);
        let mut loc = CellLocation {
            cell: [0; MAX_DIM],
            local: [0.0; MAX_DIM],
            inside: true,
        };
        for k in 0..self.dim {
            let (cell, xi, inside) = self.locate_axis(k, q[k])?;
            loc.cell[k] = cell;
            loc.local[k] = xi;
            loc.inside &= inside;
        }
        Ok(loc)
    }

    /// Physical coordinate along `axis` of nodes with index `i` on that axis.
    /// Only meaningful for unrotated grids, where the map is axis-separable.
    pub(crate) fn axis_position(&self, axis: usize, i: usize) -> f64 {
        debug_assert!(!self.is_rotated());
        self.axis_node(axis, i) + self.offset[axis]
    }

    /// One-axis location for unrotated grids; bitwise identical to the
    /// corresponding component of [`Grid::locate`].
    pub(crate) fn locate_axis_physical(&self, axis: usize, x: f64) -> Result<(usize, f64, bool), GridError> {
        debug_assert!(!self.is_rotated());
        self.locate_axis(axis, x - self.offset[axis])
    }

    /// Cell, clamped local coordinate and hull flag along one axis, given the
    /// pre-rigid-motion coordinate `qk`.
    fn locate_axis(&self, k: usize, qk: f64) -> Result<(usize, f64, bool), GridError> {
        let n = self.counts[k];
        let h = self.spacing[k];
        let mut inside = true;
        let s = match &self.perturbation {
            Some(pert) => self.invert_perturbed(k, qk, pert)?,
            None => qk,
        };
        let mut u = (s - self.origin[k]) / h;
        if (u - u.round()).abs() <= SNAP_TOL {
            u = u.round();
        }
        if !u.is_finite() || u < -HULL_TOL || u > (n - 1) as f64 + HULL_TOL {
            inside = false;
        }
        let mut cell = if u.is_finite() {
            (u.floor().max(0.0) as usize).min(n - 2)
        } else {
            0
        };
        let mut xi = match self.perturbation {
            // isoparametric coordinate of the (axis-aligned) cell
            Some(_) => {
                let a = self.axis_node(k, cell);
                let b = self.axis_node(k, cell + 1);
                let mut xi = (qk - a) / (b - a);
                if xi < 0.0 && cell > 0 {
                    cell -= 1;
                    let a = self.axis_node(k, cell);
                    let b = self.axis_node(k, cell + 1);
                    xi = (qk - a) / (b - a);
                } else if xi > 1.0 && cell < n - 2 {
                    cell += 1;
                    let a = self.axis_node(k, cell);
                    let b = self.axis_node(k, cell + 1);
                    xi = (qk - a) / (b - a);
                }
                if xi.abs() <= SNAP_TOL {
                    0.0
                } else if (xi - 1.0).abs() <= SNAP_TOL {
                    1.0
                } else {
                    xi
                }
            }
            None => u - cell as f64,
        };
        if xi.is_nan() {
            xi = 0.0;
            inside = false;
        }
        Ok((cell, xi.clamp(0.0, 1.0), inside))
    }

    /// All node positions in linear-index order.
    pub fn positions(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.position_linear(i))
    }
}

/// Scalar values attached one-to-one to a grid's nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("field has {got} values but the grid has {expected} nodes")]
pub struct FieldLengthError {
    pub expected: usize,
    pub got: usize,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, FieldLengthError> {
        if values.len() != grid.len() {
            return Err(FieldLengthError {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Field { grid, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&Point) -> f64 + Sync) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(&grid.position_linear(i)))
            .collect();
        Field {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}
