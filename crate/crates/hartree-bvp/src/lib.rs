//! Solver and verification harness for the Hartree equation on a bounded
//! domain with time-dependent Dirichlet forcing.
//!
//! The equation is `i u_t = lap u - (k * |u|^2) u` on an interval or
//! rectangle, with prescribed boundary values `u = Q(x, t)` and a convolution
//! kernel `k` (Coulomb `1/r` or its softened surrogate). Mass and energy are
//! not conserved under forcing; instead they obey boundary-flux identities,
//! and the solver ships with evaluators that measure both sides of each
//! identity independently on every run.
//!
//! Quick tour:
//!
//! ```
//! use hartree_bvp::domain::{build_grid, ComplexField};
//! use hartree_bvp::kernel::{Backend, KernelSpec};
//! use hartree_bvp::lifting::{BoundaryData, BoundaryProfile};
//! use hartree_bvp::stepper::{solve, SolveInputs, StepperConfig};
//! use num_complex::Complex64;
//!
//! let grid = build_grid(1, &[(0.0, 1.0)], &[64]).unwrap();
//! let kernel = KernelSpec::softened(0.1, Backend::Fast);
//! let forcing = BoundaryData::new(&grid, 0.3, (0.0, 0.2), BoundaryProfile::Left).unwrap();
//! let phi = ComplexField::from_fn(&grid, |x| {
//!     Complex64::new((-(x[0] - 0.5).powi(2) / 0.005).exp(), 0.0)
//! });
//! let cfg = StepperConfig { dt: 1e-3, ..Default::default() };
//! let inputs = SolveInputs::new(grid, kernel, forcing, phi, cfg, 0.02);
//! let out = solve(&inputs).unwrap();
//! assert_eq!(out.states.len(), 21);
//! let last = out.rows.last().unwrap();
//! assert!(last.mass > 0.0 && last.j_cum.is_finite());
//! ```

pub mod app;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod guide;
pub mod kernel;
pub mod lifting;
mod linalg;
pub mod stepper;

pub use error::{Error, Result};
