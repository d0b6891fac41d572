//! Boundary data and its interior extension.
//!
//! Dirichlet data is a separable family `Q(x, t) = A w(t) g(x)`: a degree-7
//! smoothstep bump `w` (compactly supported in `[t0, t1]`, three vanishing
//! derivatives at both ends) times a spatial profile on the boundary nodes.
//! The time derivative is always analytic, never a finite difference.
//!
//! The extension used to homogenize the problem is the harmonic lift: solve
//! the discrete Laplace equation with the data imposed on the boundary rows.
//! Any extension matching the data works for the change of unknown; the
//! harmonic one decouples lift construction from the nonlinear solve and
//! reuses one factorization per grid.

use num_complex::Complex64;

use crate::domain::{laplacian, BoundaryTrace, ComplexField, Grid};
use crate::error::{Error, Result};
use crate::kernel::{apply_nonlinearity, KernelSpec};
use crate::linalg::{BandedLu, BandedMatrix};

/// Default tolerance for the trace compatibility check.
pub const DEFAULT_COMPAT_TOL: f64 = 1e-10;

/// Degree-7 smoothstep: 0 at 0 and 1 at 1 with three vanishing derivatives
/// at both ends, so piecewise constructions built from it are C^3.
pub fn smoothstep7(theta: f64) -> f64 {
    // S(theta) = 1 - S(1 - theta); evaluating the reflected form on the
    // upper half avoids cancellation of the large coefficients near 1.
    fn lower_half(theta: f64) -> f64 {
        let t2 = theta * theta;
        let t4 = t2 * t2;
        t4 * (35.0 + theta * (-84.0 + theta * (70.0 - 20.0 * theta)))
    }
    if theta <= 0.0 {
        0.0
    } else if theta >= 1.0 {
        1.0
    } else if theta <= 0.5 {
        lower_half(theta)
    } else {
        1.0 - lower_half(1.0 - theta)
    }
}

fn smoothstep7_deriv(theta: f64) -> f64 {
    if theta <= 0.0 || theta >= 1.0 {
        0.0
    } else {
        let a = theta * (1.0 - theta);
        140.0 * a * a * a
    }
}

/// C^3 bump on `[0, 1]`: rises along the smoothstep, peaks at 1 in the
/// middle, falls symmetrically; identically zero outside.
pub fn bump_c3(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else if s <= 0.5 {
        smoothstep7(2.0 * s)
    } else {
        smoothstep7(2.0 - 2.0 * s)
    }
}

fn bump_c3_deriv(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else if s <= 0.5 {
        2.0 * smoothstep7_deriv(2.0 * s)
    } else {
        -2.0 * smoothstep7_deriv(2.0 - 2.0 * s)
    }
}

/// Which rectangle face a profile lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Face {
    XMin,
    XMax,
    YMin,
    YMax,
}

/// Spatial profile of the boundary data.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryProfile {
    /// 1 on every boundary node.
    Uniform,
    /// Interval endpoints (1D only).
    Left,
    Right,
    Both,
    /// C^3 bump along one face in the face-arclength fraction, supported
    /// strictly inside the face so it vanishes near the corners (2D only).
    FaceBump {
        face: Face,
        center_frac: f64,
        width_frac: f64,
    },
}

/// Time-windowed Dirichlet data on the boundary nodes of one grid.
#[derive(Clone, Debug)]
pub struct BoundaryData {
    pub amplitude: f64,
    pub t0: f64,
    pub t1: f64,
    pub profile: BoundaryProfile,
    /// Profile value per boundary slot.
    profile_values: Vec<f64>,
    /// Arc-length derivative of the profile per boundary slot (tangential
    /// direction along the face; zero on intervals).
    profile_tangent: Vec<f64>,
    grid_id: u64,
}

impl BoundaryData {
    pub fn new(
        grid: &Grid,
        amplitude: f64,
        window: (f64, f64),
        profile: BoundaryProfile,
    ) -> Result<Self> {
        let (t0, t1) = window;
        let mut problems = Vec::new();
        if !(t0 < t1) {
            problems.push(format!("boundary window: need t0 < t1, got [{t0}, {t1}]"));
        }
        match &profile {
            BoundaryProfile::Left | BoundaryProfile::Right | BoundaryProfile::Both
                if grid.dim() != 1 =>
            {
                problems.push("boundary profile: endpoint profiles require dim=1".into());
            }
            BoundaryProfile::FaceBump {
                center_frac,
                width_frac,
                ..
            } => {
                if grid.dim() != 2 {
                    problems.push("boundary profile: face_bump requires dim=2".into());
                } else if !(*width_frac > 0.0)
                    || center_frac - width_frac / 2.0 <= 0.0
                    || center_frac + width_frac / 2.0 >= 1.0
                {
                    problems.push(format!(
                        "boundary profile: bump support [{}, {}] must lie strictly inside the face",
                        center_frac - width_frac / 2.0,
                        center_frac + width_frac / 2.0
                    ));
                }
            }
            _ => {}
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }

        let nb = grid.boundary_idx().len();
        let mut profile_values = vec![0.0; nb];
        let mut profile_tangent = vec![0.0; nb];
        let ext = grid.extents();
        let [nx, ny] = grid.n();
        for (slot, &node) in grid.boundary_idx().iter().enumerate() {
            let ix = node % nx;
            let iy = node / nx;
            match &profile {
                BoundaryProfile::Uniform => profile_values[slot] = 1.0,
                BoundaryProfile::Left => {
                    profile_values[slot] = if ix == 0 { 1.0 } else { 0.0 };
                }
                BoundaryProfile::Right => {
                    profile_values[slot] = if ix == nx - 1 { 1.0 } else { 0.0 };
                }
                BoundaryProfile::Both => profile_values[slot] = 1.0,
                BoundaryProfile::FaceBump {
                    face,
                    center_frac,
                    width_frac,
                } => {
                    let on_face = match face {
                        Face::XMin => ix == 0,
                        Face::XMax => ix == nx - 1,
                        Face::YMin => iy == 0,
                        Face::YMax => iy == ny - 1,
                    };
                    let corner = (ix == 0 || ix == nx - 1) && (iy == 0 || iy == ny - 1);
                    if on_face && !corner {
                        let (pos, len) = match face {
                            Face::XMin | Face::XMax => {
                                (iy as f64 * grid.h()[1], ext[1].1 - ext[1].0)
                            }
                            Face::YMin | Face::YMax => {
                                (ix as f64 * grid.h()[0], ext[0].1 - ext[0].0)
                            }
                        };
                        let frac = pos / len;
                        let s = (frac - (center_frac - width_frac / 2.0)) / width_frac;
                        profile_values[slot] = bump_c3(s);
                        // d/d(arclength) = d/d(frac) / face_length
                        profile_tangent[slot] = bump_c3_deriv(s) / (width_frac * len);
                    }
                }
            }
        }
        Ok(BoundaryData {
            amplitude,
            t0,
            t1,
            profile,
            profile_values,
            profile_tangent,
            grid_id: grid.id(),
        })
    }

    /// Zero data on the whole boundary for all time.
    pub fn homogeneous(grid: &Grid) -> Self {
        BoundaryData::new(grid, 0.0, (0.0, 1.0), BoundaryProfile::Uniform)
            .expect("homogeneous data is always valid")
    }

    pub fn grid_id(&self) -> u64 {
        self.grid_id
    }

    pub fn support(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    /// The temporal window `w(t)` in `[0, 1]`.
    pub fn window(&self, t: f64) -> f64 {
        bump_c3((t - self.t0) / (self.t1 - self.t0))
    }

    /// Analytic `dw/dt`.
    pub fn window_dt(&self, t: f64) -> f64 {
        bump_c3_deriv((t - self.t0) / (self.t1 - self.t0)) / (self.t1 - self.t0)
    }

    pub fn q_at(&self, slot: usize, t: f64) -> Complex64 {
        Complex64::new(self.amplitude * self.window(t) * self.profile_values[slot], 0.0)
    }

    pub fn q_t_at(&self, slot: usize, t: f64) -> Complex64 {
        Complex64::new(
            self.amplitude * self.window_dt(t) * self.profile_values[slot],
            0.0,
        )
    }

    /// Tangential gradient of the data along the boundary (zero in 1D).
    pub fn tangential_grad_at(&self, slot: usize, t: f64) -> Complex64 {
        Complex64::new(
            self.amplitude * self.window(t) * self.profile_tangent[slot],
            0.0,
        )
    }

    pub fn trace(&self, grid: &Grid, t: f64) -> Result<BoundaryTrace> {
        grid.check_bound(self.grid_id)?;
        Ok(BoundaryTrace {
            values: (0..grid.boundary_idx().len())
                .map(|slot| self.q_at(slot, t))
                .collect(),
            grid_id: self.grid_id,
        })
    }

    pub fn trace_dt(&self, grid: &Grid, t: f64) -> Result<BoundaryTrace> {
        grid.check_bound(self.grid_id)?;
        Ok(BoundaryTrace {
            values: (0..grid.boundary_idx().len())
                .map(|slot| self.q_t_at(slot, t))
                .collect(),
            grid_id: self.grid_id,
        })
    }
}

/// Report from the trace compatibility check `phi = Q(., 0)` on the boundary.
#[derive(Clone, Copy, Debug)]
pub struct CompatibilityReport {
    pub max_mismatch: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Largest boundary mismatch between the initial datum and the data at t = 0.
pub fn validate_compatibility(
    phi: &ComplexField,
    bd: &BoundaryData,
    grid: &Grid,
    tol: f64,
) -> Result<CompatibilityReport> {
    grid.check_bound(phi.grid_id)?;
    grid.check_bound(bd.grid_id)?;
    let mut max_mismatch = 0.0f64;
    for (slot, &node) in grid.boundary_idx().iter().enumerate() {
        max_mismatch = max_mismatch.max((phi.values[node] - bd.q_at(slot, 0.0)).norm());
    }
    Ok(CompatibilityReport {
        max_mismatch,
        tol,
        pass: max_mismatch <= tol,
    })
}

/// The extension of the boundary data at one time: `qtilde` matches the data
/// on the boundary bit-exactly and is discretely harmonic inside; `qtilde_t`
/// is the lift of the analytic time derivative (the lift is linear in the
/// data, so this is the time derivative of the lift).
#[derive(Clone, Debug)]
pub struct Lift {
    pub qtilde: ComplexField,
    pub qtilde_t: ComplexField,
}

/// Dirichlet Laplace solver with a cached factorization, reused across times
/// and right-hand sides.
#[derive(Debug)]
pub struct HarmonicLift {
    lu: BandedLu,
    grid_id: u64,
}

impl HarmonicLift {
    pub fn new(grid: &Grid) -> Result<Self> {
        let n = grid.node_count();
        let bw = if grid.dim() == 1 { 1 } else { grid.n()[0] };
        let mut m = BandedMatrix::zeros(n, bw);
        let one = Complex64::new(1.0, 0.0);
        for &b in grid.boundary_idx() {
            m.set(b, b, one);
        }
        let [hx, hy] = grid.h();
        let nx = grid.n()[0];
        for &i in grid.interior_idx() {
            let cx = Complex64::new(1.0 / (hx * hx), 0.0);
            m.add(i, i - 1, cx);
            m.add(i, i + 1, cx);
            m.add(i, i, -2.0 * cx);
            if grid.dim() == 2 {
                let cy = Complex64::new(1.0 / (hy * hy), 0.0);
                m.add(i, i - nx, cy);
                m.add(i, i + nx, cy);
                m.add(i, i, -2.0 * cy);
            }
        }
        Ok(HarmonicLift {
            lu: m.factorize()?,
            grid_id: grid.id(),
        })
    }

    /// Lift an arbitrary boundary trace to a discretely harmonic field.
    pub fn lift_trace(&self, grid: &Grid, trace: &BoundaryTrace) -> Result<ComplexField> {
        grid.check_bound(self.grid_id)?;
        grid.check_bound(trace.grid_id)?;
        let mut rhs = vec![Complex64::new(0.0, 0.0); grid.node_count()];
        for (slot, &node) in grid.boundary_idx().iter().enumerate() {
            rhs[node] = trace.values[slot];
        }
        self.lu.solve_in_place(&mut rhs);
        Ok(ComplexField {
            values: rhs,
            grid_id: grid.id(),
        })
    }

    /// The lift of the data and of its time derivative at time `t`.
    pub fn lift(&self, grid: &Grid, bd: &BoundaryData, t: f64) -> Result<Lift> {
        let qtilde = self.lift_trace(grid, &bd.trace(grid, t)?)?;
        let qtilde_t = self.lift_trace(grid, &bd.trace_dt(grid, t)?)?;
        Ok(Lift { qtilde, qtilde_t })
    }
}

/// Right side of the homogenized evolution minus the Laplacian of the
/// unknown: `lap(qtilde) - i qtilde_t - f(v + qtilde)(v + qtilde)`, evaluated
/// at interior nodes (boundary entries are zero). `v` must vanish on the
/// boundary.
pub fn homogenized_source(
    v: &ComplexField,
    lift: &Lift,
    grid: &Grid,
    spec: &KernelSpec,
) -> Result<ComplexField> {
    grid.check_bound(v.grid_id)?;
    let worst = v.max_boundary_abs(grid);
    if worst > 1e-12 {
        return Err(Error::BoundaryNotZero(worst));
    }
    let u = v.add(&lift.qtilde);
    let nonlinear = apply_nonlinearity(&u, grid, spec)?;
    let lap_q = laplacian(&lift.qtilde, grid)?;
    let i_unit = Complex64::new(0.0, 1.0);
    let mut out = ComplexField::zeros(grid);
    for &i in grid.interior_idx() {
        out.values[i] = lap_q.values[i] - i_unit * lift.qtilde_t.values[i] - nonlinear.values[i];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, norm, NormKind};
    use crate::kernel::Backend;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn window_is_a_compact_c3_bump() {
        let g = build_grid(1, &[(0.0, 1.0)], &[9]).unwrap();
        let bd = BoundaryData::new(&g, 1.0, (0.2, 0.8), BoundaryProfile::Both).unwrap();
        assert_eq!(bd.window(0.1), 0.0);
        assert_eq!(bd.window(0.2), 0.0);
        assert_eq!(bd.window(0.9), 0.0);
        assert!((bd.window(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(bd.window_dt(0.19), 0.0);
        assert_eq!(bd.window_dt(0.81), 0.0);

        // analytic derivative matches centered differences at second order
        let t = 0.37;
        let mut errs = Vec::new();
        for delta in [1e-3, 5e-4, 2.5e-4] {
            let fd = (bd.window(t + delta) - bd.window(t - delta)) / (2.0 * delta);
            errs.push((fd - bd.window_dt(t)).abs());
        }
        let p = (errs[0] / errs[2]).ln() / 4.0f64.ln();
        assert!((p - 2.0).abs() < 0.3, "window derivative order {p}");
    }

    #[test]
    fn compatibility_reports() {
        let g = build_grid(1, &[(0.0, 1.0)], &[17]).unwrap();
        let zero_data = BoundaryData::homogeneous(&g);
        let phi = ComplexField::zeros(&g);
        let rep = validate_compatibility(&phi, &zero_data, &g, DEFAULT_COMPAT_TOL).unwrap();
        assert_eq!(rep.max_mismatch, 0.0);
        assert!(rep.pass);

        // constant-1 data at t=0 against zero phi: mismatch 1, fail.
        // window(0) = 0, so shift the window to straddle t = 0.
        let ones = BoundaryData::new(&g, 1.0, (-1.0, 1.0), BoundaryProfile::Both).unwrap();
        let rep = validate_compatibility(&phi, &ones, &g, DEFAULT_COMPAT_TOL).unwrap();
        assert!((rep.max_mismatch - 1.0).abs() < 1e-15);
        assert!(!rep.pass);
    }

    #[test]
    fn constant_data_lifts_to_constant() {
        let g = build_grid(2, &[(0.0, 1.0), (0.0, 1.0)], &[8, 8]).unwrap();
        let op = HarmonicLift::new(&g).unwrap();
        let trace = BoundaryTrace::from_fn(&g, |_, _| Complex64::new(2.5, -1.0));
        let lifted = op.lift_trace(&g, &trace).unwrap();
        for v in &lifted.values {
            assert!((v - Complex64::new(2.5, -1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn interval_lift_is_affine() {
        let g = build_grid(1, &[(0.0, 1.0)], &[17]).unwrap();
        let op = HarmonicLift::new(&g).unwrap();
        let (qa, qb) = (Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.5));
        let trace = BoundaryTrace {
            values: vec![qa, qb],
            grid_id: g.id(),
        };
        let lifted = op.lift_trace(&g, &trace).unwrap();
        for i in 0..g.node_count() {
            let x = g.coords(i)[0];
            let expected = qa + (qb - qa) * x;
            assert!((lifted.values[i] - expected).norm() < 1e-12);
        }
        // boundary values are imposed, not solved for
        assert_eq!(lifted.values[0], qa);
        assert_eq!(lifted.values[16], qb);
    }

    #[test]
    fn maximum_principle_on_random_data() {
        let g = build_grid(2, &[(0.0, 1.0), (0.0, 2.0)], &[10, 14]).unwrap();
        let op = HarmonicLift::new(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let trace = BoundaryTrace::from_fn(&g, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let lifted = op.lift_trace(&g, &trace).unwrap();
        for part in [0usize, 1] {
            let pick = |v: Complex64| if part == 0 { v.re } else { v.im };
            let lo = trace.values.iter().map(|&v| pick(v)).fold(f64::INFINITY, f64::min);
            let hi = trace.values.iter().map(|&v| pick(v)).fold(f64::NEG_INFINITY, f64::max);
            for &i in g.interior_idx() {
                let v = pick(lifted.values[i]);
                assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "max principle violated");
            }
        }
    }

    #[test]
    fn lift_is_linear_in_the_data() {
        let g = build_grid(2, &[(0.0, 1.0), (0.0, 1.0)], &[9, 9]).unwrap();
        let op = HarmonicLift::new(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let mut rand_trace = || BoundaryTrace {
            values: (0..g.boundary_idx().len())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
            grid_id: g.id(),
        };
        let t1 = rand_trace();
        let t2 = rand_trace();
        let (alpha, beta) = (Complex64::new(0.7, -0.3), Complex64::new(-1.2, 0.4));
        let combo = BoundaryTrace {
            values: t1
                .values
                .iter()
                .zip(&t2.values)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
            grid_id: g.id(),
        };
        let lhs = op.lift_trace(&g, &combo).unwrap();
        let rhs = op
            .lift_trace(&g, &t1)
            .unwrap()
            .scale(alpha)
            .add(&op.lift_trace(&g, &t2).unwrap().scale(beta));
        for (a, b) in lhs.values.iter().zip(&rhs.values) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn lift_time_derivative_is_consistent() {
        let g = build_grid(1, &[(0.0, 1.0)], &[17]).unwrap();
        let op = HarmonicLift::new(&g).unwrap();
        let bd = BoundaryData::new(&g, 0.8, (0.0, 1.0), BoundaryProfile::Left).unwrap();
        let t = 0.31;
        let reference = op.lift(&g, &bd, t).unwrap();
        let mut errs = Vec::new();
        for delta in [2e-3, 1e-3, 5e-4] {
            let plus = op.lift(&g, &bd, t + delta).unwrap().qtilde;
            let minus = op.lift(&g, &bd, t - delta).unwrap().qtilde;
            let fd = plus.sub(&minus).scale(c(1.0 / (2.0 * delta)));
            errs.push(norm(&fd.sub(&reference.qtilde_t), &g, NormKind::L2).unwrap());
        }
        let p = (errs[0] / errs[2]).ln() / 4.0f64.ln();
        assert!((p - 2.0).abs() < 0.3, "lift_t order {p}");
    }

    #[test]
    fn lifted_initial_data_is_compatible() {
        // construct phi as interior bump plus the lift of q(., 0), then check
        let g = build_grid(1, &[(0.0, 1.0)], &[33]).unwrap();
        let op = HarmonicLift::new(&g).unwrap();
        let bd = BoundaryData::new(&g, 0.5, (-0.5, 0.5), BoundaryProfile::Both).unwrap();
        let lifted = op.lift_trace(&g, &bd.trace(&g, 0.0).unwrap()).unwrap();
        let bump = ComplexField::from_fn(&g, |x| c(bump_c3(x[0])));
        let phi = lifted.add(&bump);
        let rep = validate_compatibility(&phi, &bd, &g, 1e-12).unwrap();
        assert!(rep.pass, "mismatch {}", rep.max_mismatch);
    }

    #[test]
    fn source_reduces_to_negated_nonlinearity_without_lift() {
        let g = build_grid(1, &[(0.0, 1.0)], &[33]).unwrap();
        let k = KernelSpec::softened(0.1, Backend::Direct);
        let zero_lift = Lift {
            qtilde: ComplexField::zeros(&g),
            qtilde_t: ComplexField::zeros(&g),
        };
        let zero = ComplexField::zeros(&g);
        let s0 = homogenized_source(&zero, &zero_lift, &g, &k).unwrap();
        assert!(s0.values.iter().all(|v| v.norm() == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let v = crate::kernel::sampling::smooth_random_field(&g, &mut rng, 6);
        let src = homogenized_source(&v, &zero_lift, &g, &k).unwrap();
        let neg = apply_nonlinearity(&v, &g, &k).unwrap();
        for &i in g.interior_idx() {
            assert!((src.values[i] + neg.values[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn source_rejects_nonzero_boundary() {
        let g = build_grid(1, &[(0.0, 1.0)], &[17]).unwrap();
        let k = KernelSpec::softened(0.1, Backend::Direct);
        let zero_lift = Lift {
            qtilde: ComplexField::zeros(&g),
            qtilde_t: ComplexField::zeros(&g),
        };
        let mut v = ComplexField::zeros(&g);
        v.values[0] = c(1e-6);
        assert!(matches!(
            homogenized_source(&v, &zero_lift, &g, &k),
            Err(Error::BoundaryNotZero(_))
        ));
    }
}
