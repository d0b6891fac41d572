//! The Hartree nonlinearity and its companions.
//!
//! The potential is the kernel-convolved density `f(u) = k * |u|^2`, the
//! gradient-kernel convolution `(grad k) * |u|^2` feeds the virial identity,
//! and the probe submodules measure the empirical constants behind the
//! Lipschitz and Hardy estimates.

mod conv;
pub mod hardy;
pub mod probes;
pub mod sampling;

pub use hardy::{hardy_max_quotient, hardy_quotient, HardyBox};
pub use probes::{
    linfty_max_ratio, lipschitz_max_ratio, lipschitz_probe, potential_linfty_bound_check,
    LinftyRecord, LipschitzRecord,
};

use serde::{Deserialize, Serialize};

use crate::domain::{ComplexField, Grid};
use crate::error::{Error, Result};

use conv::{convolve_direct, convolve_fast, LagTable};

/// Kernel family. `Coulomb` is `1/r` (admissible on rectangles only, where
/// the diagonal is handled by singularity subtraction); `Softened` is the
/// integrable surrogate `1/sqrt(r^2 + a^2)` and the only choice on intervals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Coulomb,
    Softened,
}

/// Convolution backend: `Direct` double loop or the FFT `Fast` path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Direct,
    Fast,
}

/// Kernel configuration. `coupling` is the interaction constant multiplying
/// the potential (1 for the normalized equation; 0 disables the nonlinearity,
/// which the linear-regime tests rely on).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub soften_a: f64,
    pub backend: Backend,
    pub coupling: f64,
}

impl KernelSpec {
    pub fn softened(a: f64, backend: Backend) -> Self {
        KernelSpec {
            family: KernelFamily::Softened,
            soften_a: a,
            backend,
            coupling: 1.0,
        }
    }

    pub fn coulomb(backend: Backend) -> Self {
        KernelSpec {
            family: KernelFamily::Coulomb,
            soften_a: 0.0,
            backend,
            coupling: 1.0,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self.family {
            KernelFamily::Softened if !(self.soften_a > 0.0) => Err(Error::Kernel(format!(
                "softened kernel requires soften_a > 0, got {}",
                self.soften_a
            ))),
            KernelFamily::Coulomb if dim != 2 => Err(Error::Kernel(
                "coulomb requires dim=2: 1/r is not locally integrable on an interval".into(),
            )),
            _ if self.coupling < 0.0 => Err(Error::Kernel(format!(
                "coupling must be nonnegative, got {}",
                self.coupling
            ))),
            _ => Ok(()),
        }
    }
}

/// The convolved potential `f(u)`, bound to the kernel that produced it.
#[derive(Clone, Debug)]
pub struct HartreePotential {
    pub values: Vec<f64>,
    pub kernel: KernelSpec,
    pub grid_id: u64,
}

/// Integral of `1/|x|` over an `hx` by `hy` rectangle centered at the origin
/// (closed form). Dividing by the cell area gives the effective zero-lag
/// sample for the subtracted Coulomb diagonal; half and quarter cells at
/// walls scale out because the quadrature weight carries the same fraction.
fn coulomb_cell_integral(hx: f64, hy: f64) -> f64 {
    let a = 0.5 * hx;
    let b = 0.5 * hy;
    4.0 * (a * (b / a).asinh() + b * (a / b).asinh())
}

fn potential_table(grid: &Grid, spec: &KernelSpec) -> LagTable {
    match spec.family {
        KernelFamily::Softened => {
            let a2 = spec.soften_a * spec.soften_a;
            LagTable::even(grid, |dx, dy| 1.0 / (dx * dx + dy * dy + a2).sqrt())
        }
        KernelFamily::Coulomb => {
            let [hx, hy] = grid.h();
            let diag = coulomb_cell_integral(hx, hy) / (hx * hy);
            LagTable::even(grid, move |dx, dy| {
                let r = (dx * dx + dy * dy).sqrt();
                if r == 0.0 {
                    diag
                } else {
                    1.0 / r
                }
            })
        }
    }
}

fn gradient_table(grid: &Grid, spec: &KernelSpec, axis: usize) -> LagTable {
    match spec.family {
        KernelFamily::Softened => {
            let a2 = spec.soften_a * spec.soften_a;
            LagTable::odd(grid, axis, move |dx, dy| {
                let lag = if axis == 0 { dx } else { dy };
                -lag / (dx * dx + dy * dy + a2).powf(1.5)
            })
        }
        KernelFamily::Coulomb => LagTable::odd(grid, axis, move |dx, dy| {
            let r2 = dx * dx + dy * dy;
            if r2 == 0.0 {
                0.0 // odd integrand about the singularity
            } else {
                let lag = if axis == 0 { dx } else { dy };
                -lag / (r2 * r2.sqrt())
            }
        }),
    }
}

fn weighted_density(u: &ComplexField, grid: &Grid) -> Vec<f64> {
    grid.quad_w()
        .iter()
        .zip(&u.values)
        .map(|(w, v)| w * v.norm_sqr())
        .collect()
}

fn convolve(table: &LagTable, c: &[f64], backend: Backend, clamp: bool) -> Vec<f64> {
    match backend {
        Backend::Direct => convolve_direct(table, c),
        Backend::Fast => {
            let mut out = convolve_fast(table, c);
            if clamp {
                // FFT roundoff can turn an exact zero into -1e-17; the
                // potential is nonnegative by construction.
                for v in &mut out {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            out
        }
    }
}

/// The Hartree potential `f(u)(x_i) = coupling * sum_j w_j k(x_i - x_j) |u_j|^2`.
pub fn hartree_potential(u: &ComplexField, grid: &Grid, spec: &KernelSpec) -> Result<HartreePotential> {
    grid.check_bound(u.grid_id)?;
    spec.validate(grid.dim())?;
    let c = weighted_density(u, grid);
    let table = potential_table(grid, spec);
    let mut values = convolve(&table, &c, spec.backend, true);
    if spec.coupling != 1.0 {
        for v in &mut values {
            *v *= spec.coupling;
        }
    }
    Ok(HartreePotential {
        values,
        kernel: *spec,
        grid_id: grid.id(),
    })
}

/// The nonlinear term `f(u) u` of the evolution equation.
pub fn apply_nonlinearity(u: &ComplexField, grid: &Grid, spec: &KernelSpec) -> Result<ComplexField> {
    let f = hartree_potential(u, grid, spec)?;
    Ok(ComplexField {
        values: f
            .values
            .iter()
            .zip(&u.values)
            .map(|(fv, uv)| fv * uv)
            .collect(),
        grid_id: u.grid_id,
    })
}

/// Componentwise `(grad k) * |u|^2`, the gradient-kernel convolution of the
/// virial identity. Matches centered differences of `hartree_potential` at
/// second order.
pub fn gradient_kernel_convolution(
    u: &ComplexField,
    grid: &Grid,
    spec: &KernelSpec,
) -> Result<Vec<[f64; 2]>> {
    grid.check_bound(u.grid_id)?;
    spec.validate(grid.dim())?;
    let c = weighted_density(u, grid);
    let mut out = vec![[0.0f64; 2]; grid.node_count()];
    for axis in 0..grid.dim() {
        let table = gradient_table(grid, spec, axis);
        let comp = convolve(&table, &c, spec.backend, false);
        for (o, v) in out.iter_mut().zip(comp) {
            o[axis] = spec.coupling * v;
        }
    }
    Ok(out)
}
