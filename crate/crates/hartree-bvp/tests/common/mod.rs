//! Shared fixtures: the acceptance template and refinement levels.
//!
//! Template: interval [0, 1], 128 nodes, softened kernel a = 0.1 (FAST
//! backend), dt = 1e-3, T = 0.5, Gaussian initial datum (center 0.5, width
//! 0.07, unit amplitude) and windowed left-endpoint forcing on [0, 0.4].
//! The Gaussian's boundary trace is ~8e-12, inside the 1e-10 compatibility
//! tolerance against the closed window.

use hartree_bvp::domain::{build_grid, ComplexField, Grid};
use hartree_bvp::kernel::{Backend, KernelSpec};
use hartree_bvp::lifting::{BoundaryData, BoundaryProfile};
use hartree_bvp::stepper::{SolveInputs, StepperConfig};
use num_complex::Complex64;

pub const TEMPLATE_N: usize = 128;
pub const TEMPLATE_DT: f64 = 1e-3;
pub const TEMPLATE_T: f64 = 0.5;
pub const TEMPLATE_AMPLITUDE: f64 = 0.5;
pub const TEMPLATE_WINDOW: (f64, f64) = (0.0, 0.4);

pub fn template_grid(n: usize) -> Grid {
    build_grid(1, &[(0.0, 1.0)], &[n]).unwrap()
}

pub fn template_kernel() -> KernelSpec {
    KernelSpec::softened(0.1, Backend::Fast)
}

pub fn gaussian_phi(grid: &Grid) -> ComplexField {
    ComplexField::from_fn(grid, |x| {
        Complex64::new((-(x[0] - 0.5).powi(2) / (2.0 * 0.07f64.powi(2))).exp(), 0.0)
    })
}

/// The acceptance template at an arbitrary resolution and forcing amplitude.
pub fn template(n: usize, dt: f64, amplitude: f64, t_final: f64) -> SolveInputs {
    let grid = template_grid(n);
    let bd = BoundaryData::new(&grid, amplitude, TEMPLATE_WINDOW, BoundaryProfile::Left).unwrap();
    let phi = gaussian_phi(&grid);
    let cfg = StepperConfig {
        dt,
        ..Default::default()
    };
    SolveInputs::new(grid, template_kernel(), bd, phi, cfg, t_final)
}

/// Refinement level `l`: nested nodes (`n -> 2n - 1`) and halved dt, so h
/// halves exactly.
pub fn template_level(level: usize, amplitude: f64) -> SolveInputs {
    let factor = 1usize << level;
    let n = TEMPLATE_N * factor - (factor - 1);
    template(
        n,
        TEMPLATE_DT / factor as f64,
        amplitude,
        TEMPLATE_T,
    )
}
