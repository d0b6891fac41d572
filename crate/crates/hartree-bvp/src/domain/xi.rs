//! The multiplier field for the virial identity.
//!
//! On an interval `[a, b]` the field is the affine `xi(x) = (2x - a - b) /
//! (b - a)`, which equals the outward normal at both endpoints. On a
//! rectangle each component follows the same 1D formula in its own axis, so
//! `xi . n = 1` holds exactly at every face node; at the corners the normal
//! is undefined and `xi` agrees with both adjacent faces componentwise.

use super::Grid;

/// Discrete `xi`, its divergence `eta` and gradient of `eta`. The built-in
/// constructions have a constant diagonal Jacobian, carried along for the
/// strain term of the virial identity.
#[derive(Clone, Debug)]
pub struct XiField {
    pub xi: Vec<[f64; 2]>,
    pub eta: Vec<f64>,
    pub grad_eta: Vec<[f64; 2]>,
    /// Diagonal of `d xi_j / d x_k` (constant in space, zero off-diagonal).
    pub jacobian_diag: [f64; 2],
    pub grid_id: u64,
}

pub fn build_xi_field(grid: &Grid) -> XiField {
    let ext = grid.extents();
    let mut slope = [0.0f64; 2];
    for axis in 0..grid.dim() {
        slope[axis] = 2.0 / (ext[axis].1 - ext[axis].0);
    }
    let eta_value: f64 = slope.iter().sum();
    let component = |x: f64, axis: usize| -> f64 {
        let (a, b) = ext[axis];
        (2.0 * x - a - b) / (b - a)
    };
    let total = grid.node_count();
    let mut xi = Vec::with_capacity(total);
    for i in 0..total {
        let p = grid.coords(i);
        let mut v = [0.0f64; 2];
        for axis in 0..grid.dim() {
            v[axis] = component(p[axis], axis);
        }
        xi.push(v);
    }
    XiField {
        xi,
        eta: vec![eta_value; total],
        grad_eta: vec![[0.0, 0.0]; total],
        jacobian_diag: slope,
        grid_id: grid.id(),
    }
}
