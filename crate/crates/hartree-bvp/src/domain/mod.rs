//! Discretized domain: interval or axis-aligned rectangle.
//!
//! The grid owns everything the integral identities need: interior/boundary
//! index sets, trapezoid quadrature weights for volume integrals, surface
//! weights for boundary integrals, and outward unit normals. Nodes are
//! ordered x-fastest: node `(ix, iy)` has flat index `iy * nx + ix`.

mod calculus;
mod xi;

pub use calculus::{
    boundary_integral, gradient, grad_inner_product, inner_product, laplacian, norm, normal_trace,
    NormKind,
};
pub use xi::{build_xi_field, XiField};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A uniform tensor grid on an interval (`dim = 1`) or rectangle (`dim = 2`).
#[derive(Clone, Debug)]
pub struct Grid {
    dim: usize,
    extents: [(f64, f64); 2],
    n: [usize; 2],
    h: [f64; 2],
    id: u64,
    interior_idx: Vec<usize>,
    boundary_idx: Vec<usize>,
    /// Slot of each node in `boundary_idx`, or `usize::MAX` for interior nodes.
    boundary_slot: Vec<usize>,
    quad_w: Vec<f64>,
    boundary_quad_w: Vec<f64>,
    outward_normal: Vec<[f64; 2]>,
}

/// Build a grid. `n` is the per-axis node count (>= 4), `extents` the per-axis
/// intervals with `a < b`.
pub fn build_grid(dim: usize, extents: &[(f64, f64)], n: &[usize]) -> Result<Grid> {
    let mut problems = Vec::new();
    if dim != 1 && dim != 2 {
        problems.push(format!("grid.dim: must be 1 or 2, got {dim}"));
    }
    if extents.len() < dim || n.len() < dim {
        problems.push("grid: extents and node counts must cover every axis".into());
    } else {
        for axis in 0..dim {
            let (a, b) = extents[axis];
            if !(a < b) {
                problems.push(format!("grid axis {axis}: need a < b, got [{a}, {b}]"));
            }
            if n[axis] < 4 {
                problems.push(format!("grid axis {axis}: need at least 4 nodes, got {}", n[axis]));
            }
        }
    }
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }

    let mut ext = [(0.0, 0.0); 2];
    let mut nn = [1usize; 2];
    let mut h = [0.0f64; 2];
    for axis in 0..dim {
        ext[axis] = extents[axis];
        nn[axis] = n[axis];
        h[axis] = (ext[axis].1 - ext[axis].0) / (nn[axis] - 1) as f64;
    }

    let total = nn[0] * nn[1];
    let mut interior_idx = Vec::new();
    let mut boundary_idx = Vec::new();
    let mut boundary_slot = vec![usize::MAX; total];
    let mut quad_w = vec![0.0f64; total];
    let mut boundary_quad_w = Vec::new();
    let mut outward_normal = Vec::new();

    let axis_w = |i: usize, count: usize, step: f64| -> f64 {
        if i == 0 || i == count - 1 {
            0.5 * step
        } else {
            step
        }
    };
    // Surface weight along one face of length (count-1)*step, corners
    // excluded: the half-cell corner contributions are folded into the
    // adjacent nodes so constants integrate to the exact face length.
    let face_w = |i: usize, count: usize, step: f64| -> f64 {
        if i == 1 || i == count - 2 {
            1.5 * step
        } else {
            step
        }
    };

    for iy in 0..nn[1] {
        for ix in 0..nn[0] {
            let idx = iy * nn[0] + ix;
            let on_x_wall = ix == 0 || ix == nn[0] - 1;
            let on_y_wall = dim == 2 && (iy == 0 || iy == nn[1] - 1);
            quad_w[idx] = if dim == 1 {
                axis_w(ix, nn[0], h[0])
            } else {
                axis_w(ix, nn[0], h[0]) * axis_w(iy, nn[1], h[1])
            };
            if !(on_x_wall || on_y_wall) {
                interior_idx.push(idx);
                continue;
            }
            boundary_slot[idx] = boundary_idx.len();
            boundary_idx.push(idx);
            if dim == 1 {
                boundary_quad_w.push(1.0); // counting measure on two endpoints
                outward_normal.push([if ix == 0 { -1.0 } else { 1.0 }, 0.0]);
            } else if on_x_wall && on_y_wall {
                // corner: normal undefined; agree with both faces, weight 0
                let sx = if ix == 0 { -1.0 } else { 1.0 };
                let sy = if iy == 0 { -1.0 } else { 1.0 };
                let r = std::f64::consts::FRAC_1_SQRT_2;
                boundary_quad_w.push(0.0);
                outward_normal.push([sx * r, sy * r]);
            } else if on_x_wall {
                boundary_quad_w.push(face_w(iy, nn[1], h[1]));
                outward_normal.push([if ix == 0 { -1.0 } else { 1.0 }, 0.0]);
            } else {
                boundary_quad_w.push(face_w(ix, nn[0], h[0]));
                outward_normal.push([0.0, if iy == 0 { -1.0 } else { 1.0 }]);
            }
        }
    }

    let id = fingerprint(dim, &ext, &nn);
    Ok(Grid {
        dim,
        extents: ext,
        n: nn,
        h,
        id,
        interior_idx,
        boundary_idx,
        boundary_slot,
        quad_w,
        boundary_quad_w,
        outward_normal,
    })
}

fn fingerprint(dim: usize, ext: &[(f64, f64); 2], n: &[usize; 2]) -> u64 {
    // FNV-1a over the defining parameters: equal grids get equal ids.
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(&(dim as u64).to_le_bytes());
    for axis in 0..2 {
        eat(&ext[axis].0.to_bits().to_le_bytes());
        eat(&ext[axis].1.to_bits().to_le_bytes());
        eat(&(n[axis] as u64).to_le_bytes());
    }
    hash
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// Per-axis node count; axis 1 reports 1 on an interval.
    pub fn n(&self) -> [usize; 2] {
        self.n
    }

    pub fn h(&self) -> [f64; 2] {
        self.h
    }

    pub fn extents(&self) -> [(f64, f64); 2] {
        self.extents
    }

    pub fn node_count(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn interior_idx(&self) -> &[usize] {
        &self.interior_idx
    }

    pub fn boundary_idx(&self) -> &[usize] {
        &self.boundary_idx
    }

    pub fn quad_w(&self) -> &[f64] {
        &self.quad_w
    }

    pub fn boundary_quad_w(&self) -> &[f64] {
        &self.boundary_quad_w
    }

    pub fn outward_normal(&self) -> &[[f64; 2]] {
        &self.outward_normal
    }

    /// Slot of `node` inside the boundary arrays, if it is a boundary node.
    pub fn boundary_slot(&self, node: usize) -> Option<usize> {
        match self.boundary_slot[node] {
            usize::MAX => None,
            s => Some(s),
        }
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary_slot[node] != usize::MAX
    }

    pub fn coords(&self, node: usize) -> [f64; 2] {
        let ix = node % self.n[0];
        let iy = node / self.n[0];
        [
            self.extents[0].0 + ix as f64 * self.h[0],
            if self.dim == 2 {
                self.extents[1].0 + iy as f64 * self.h[1]
            } else {
                0.0
            },
        ]
    }

    pub fn measure(&self) -> f64 {
        let mut m = self.extents[0].1 - self.extents[0].0;
        if self.dim == 2 {
            m *= self.extents[1].1 - self.extents[1].0;
        }
        m
    }

    pub(crate) fn check_bound(&self, field_grid: u64) -> Result<()> {
        if field_grid != self.id {
            return Err(Error::GridMismatch {
                field_grid,
                op_grid: self.id,
            });
        }
        Ok(())
    }
}

/// Complex grid function: one value per node, bound to the grid it was built
/// on through `grid_id`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    pub values: Vec<Complex64>,
    pub grid_id: u64,
}

impl ComplexField {
    pub fn zeros(grid: &Grid) -> Self {
        ComplexField {
            values: vec![Complex64::new(0.0, 0.0); grid.node_count()],
            grid_id: grid.id(),
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.node_count()).map(|i| f(grid.coords(i))).collect();
        ComplexField {
            values,
            grid_id: grid.id(),
        }
    }

    pub fn constant(grid: &Grid, c: Complex64) -> Self {
        ComplexField {
            values: vec![c; grid.node_count()],
            grid_id: grid.id(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scale(&self, c: Complex64) -> ComplexField {
        ComplexField {
            values: self.values.iter().map(|v| c * v).collect(),
            grid_id: self.grid_id,
        }
    }

    pub fn add(&self, other: &ComplexField) -> ComplexField {
        assert_eq!(self.grid_id, other.grid_id, "fields on different grids");
        ComplexField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
            grid_id: self.grid_id,
        }
    }

    pub fn sub(&self, other: &ComplexField) -> ComplexField {
        assert_eq!(self.grid_id, other.grid_id, "fields on different grids");
        ComplexField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
            grid_id: self.grid_id,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Largest |value| over boundary nodes.
    pub fn max_boundary_abs(&self, grid: &Grid) -> f64 {
        grid.boundary_idx()
            .iter()
            .map(|&i| self.values[i].norm())
            .fold(0.0, f64::max)
    }
}

/// Complex values on the boundary nodes, ordered like `Grid::boundary_idx`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace {
    pub values: Vec<Complex64>,
    pub grid_id: u64,
}

impl BoundaryTrace {
    pub fn zeros(grid: &Grid) -> Self {
        BoundaryTrace {
            values: vec![Complex64::new(0.0, 0.0); grid.boundary_idx().len()],
            grid_id: grid.id(),
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(usize, [f64; 2]) -> Complex64) -> Self {
        let values = grid
            .boundary_idx()
            .iter()
            .enumerate()
            .map(|(slot, &node)| f(slot, grid.coords(node)))
            .collect();
        BoundaryTrace {
            values,
            grid_id: grid.id(),
        }
    }
}
