//! Independent evaluation of the flux identities and the a priori bound.
//!
//! Each identity is checked by computing both sides from recorded states:
//! left sides are centered time differences of an observable, right sides
//! are single-time boundary and volume integrals. Nothing on a right side
//! references the time difference, so a small residual is evidence, not
//! bookkeeping.
//!
//! Sign conventions follow from writing the equation as
//! `i u_t = lap u - f(u) u` with a positive kernel. The gradient-kernel term
//! of the virial identity enters with a minus sign against the convolution
//! with the analytic kernel gradient; the finite-difference oracle in the
//! kernel module pins that convention before this evaluator trusts it.

use num_complex::Complex64;
use serde::Serialize;

use crate::domain::{
    boundary_integral, gradient, norm, normal_trace, BoundaryTrace, ComplexField, Grid, NormKind,
    XiField,
};
use crate::error::{Error, Result};
use crate::kernel::{gradient_kernel_convolution, hartree_potential, KernelSpec};
use crate::lifting::BoundaryData;

/// `||u||^2_L2`, the L2 mass.
pub fn mass(u: &ComplexField, grid: &Grid) -> Result<f64> {
    let n = norm(u, grid, NormKind::L2)?;
    Ok(n * n)
}

/// `E(u) = 1/2 ||grad u||^2 + 1/4 sum w f(u) |u|^2`. Nonnegative: both terms
/// are, for a positive kernel and nonnegative coupling.
pub fn energy(u: &ComplexField, grid: &Grid, spec: &KernelSpec) -> Result<f64> {
    let g = norm(u, grid, NormKind::Grad)?;
    let f = hartree_potential(u, grid, spec)?;
    let hartree: f64 = grid
        .quad_w()
        .iter()
        .zip(f.values.iter().zip(&u.values))
        .map(|(w, (fv, uv))| w * fv * uv.norm_sqr())
        .sum();
    Ok(0.5 * g * g + 0.25 * hartree)
}

/// The virial observable `sum w u (xi . grad conj(u))`.
pub fn virial_functional(u: &ComplexField, grid: &Grid, xi: &XiField) -> Result<Complex64> {
    grid.check_bound(u.grid_id)?;
    grid.check_bound(xi.grid_id)?;
    let gr = gradient(u, grid)?;
    Ok(grid
        .quad_w()
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let dot = xi.xi[i][0] * gr[i][0].conj() + xi.xi[i][1] * gr[i][1].conj();
            w * u.values[i] * dot
        })
        .sum())
}

/// Both sides of a real-valued identity and their difference.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityRecord {
    pub lhs: f64,
    pub rhs: f64,
    pub res: f64,
}

/// Three consecutive states at uniform spacing.
pub type Window<'a> = [(f64, &'a ComplexField); 3];

fn window_spacing(window: &Window) -> Result<f64> {
    let d1 = window[1].0 - window[0].0;
    let d2 = window[2].0 - window[1].0;
    if d1 <= 0.0 || (d2 - d1).abs() > 1e-9 * d1.max(d2) {
        return Err(Error::NonuniformSpacing(format!(
            "t = {}, {}, {}",
            window[0].0, window[1].0, window[2].0
        )));
    }
    Ok(d1)
}

/// Mass identity: `d/dt ||u||^2 = 2 Im int_bdry conj(Q) (P.n) dS`.
pub fn mass_identity_residual(
    window: &Window,
    bd: &BoundaryData,
    grid: &Grid,
) -> Result<IdentityRecord> {
    let delta = window_spacing(window)?;
    let lhs = (mass(window[2].1, grid)? - mass(window[0].1, grid)?) / (2.0 * delta);
    let t = window[1].0;
    let pn = normal_trace(window[1].1, grid)?;
    let integrand = BoundaryTrace {
        values: (0..pn.values.len())
            .map(|slot| bd.q_at(slot, t).conj() * pn.values[slot])
            .collect(),
        grid_id: grid.id(),
    };
    let rhs = 2.0 * boundary_integral(&integrand, grid)?.im;
    Ok(IdentityRecord {
        lhs,
        rhs,
        res: lhs - rhs,
    })
}

/// Energy identity: `d/dt E(u) = Re int_bdry (P.n) conj(Q_t) dS`.
pub fn energy_identity_residual(
    window: &Window,
    bd: &BoundaryData,
    grid: &Grid,
    spec: &KernelSpec,
) -> Result<IdentityRecord> {
    let delta = window_spacing(window)?;
    let lhs = (energy(window[2].1, grid, spec)? - energy(window[0].1, grid, spec)?) / (2.0 * delta);
    let t = window[1].0;
    let pn = normal_trace(window[1].1, grid)?;
    let integrand = BoundaryTrace {
        values: (0..pn.values.len())
            .map(|slot| pn.values[slot] * bd.q_t_at(slot, t).conj())
            .collect(),
        grid_id: grid.id(),
    };
    let rhs = boundary_integral(&integrand, grid)?.re;
    Ok(IdentityRecord {
        lhs,
        rhs,
        res: lhs - rhs,
    })
}

/// The eight right-side terms of the virial identity, reported separately.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct VirialTerms {
    /// `2i Re sum_{j,k} int d_k xi_j d_j conj(u) d_k u`
    pub strain: Complex64,
    /// `i int (grad eta . grad conj(u)) u`
    pub grad_eta: Complex64,
    /// `-i sum_j int ((d_j k) * |u|^2) xi_j |u|^2`
    pub gradient_kernel: Complex64,
    /// `i int_bdry f(u) |Q|^2 dS`
    pub boundary_hartree: Complex64,
    /// `i int_bdry |P|^2 dS`
    pub p_sq: Complex64,
    /// `-2i int_bdry |P.n|^2 dS`
    pub pn_sq: Complex64,
    /// `int_bdry Q conj(Q_t) dS`
    pub q_qt: Complex64,
    /// `-i int_bdry conj(P.n) eta Q dS`
    pub pn_eta_q: Complex64,
}

impl VirialTerms {
    pub fn sum(&self) -> Complex64 {
        self.strain
            + self.grad_eta
            + self.gradient_kernel
            + self.boundary_hartree
            + self.p_sq
            + self.pn_sq
            + self.q_qt
            + self.pn_eta_q
    }
}

/// Both sides of the virial identity; complex-valued.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct VirialRecord {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub res: Complex64,
    pub terms: VirialTerms,
}

/// Virial identity: centered time difference of the virial observable
/// against the eight-term right side, every term evaluated from the middle
/// state alone.
pub fn virial_identity_residual(
    window: &Window,
    bd: &BoundaryData,
    grid: &Grid,
    spec: &KernelSpec,
    xi: &XiField,
) -> Result<VirialRecord> {
    let delta = window_spacing(window)?;
    grid.check_bound(xi.grid_id)?;
    let lhs = (virial_functional(window[2].1, grid, xi)?
        - virial_functional(window[0].1, grid, xi)?)
        / (2.0 * delta);

    let t = window[1].0;
    let u = window[1].1;
    let i_unit = Complex64::new(0.0, 1.0);
    let gr = gradient(u, grid)?;

    // volume terms
    let mut strain_re = 0.0f64;
    let mut grad_eta = Complex64::new(0.0, 0.0);
    let mut grad_kernel_re = 0.0f64;
    let gk = gradient_kernel_convolution(u, grid, spec)?;
    for (i, &w) in grid.quad_w().iter().enumerate() {
        for axis in 0..grid.dim() {
            strain_re += w * xi.jacobian_diag[axis] * gr[i][axis].norm_sqr();
        }
        let ge = xi.grad_eta[i][0] * gr[i][0].conj() + xi.grad_eta[i][1] * gr[i][1].conj();
        grad_eta += w * ge * u.values[i];
        let dot = gk[i][0] * xi.xi[i][0] + gk[i][1] * xi.xi[i][1];
        grad_kernel_re += w * dot * u.values[i].norm_sqr();
    }
    let strain = 2.0 * i_unit * strain_re;
    let grad_eta = i_unit * grad_eta;
    let gradient_kernel = -i_unit * grad_kernel_re;

    // boundary terms
    let f = hartree_potential(u, grid, spec)?;
    let pn = normal_trace(u, grid)?;
    let mut boundary_hartree = Complex64::new(0.0, 0.0);
    let mut p_sq = Complex64::new(0.0, 0.0);
    let mut pn_sq = Complex64::new(0.0, 0.0);
    let mut q_qt = Complex64::new(0.0, 0.0);
    let mut pn_eta_q = Complex64::new(0.0, 0.0);
    for (slot, &node) in grid.boundary_idx().iter().enumerate() {
        let bw = grid.boundary_quad_w()[slot];
        if bw == 0.0 {
            continue;
        }
        let q = bd.q_at(slot, t);
        let qt = bd.q_t_at(slot, t);
        boundary_hartree += bw * f.values[node] * q.norm_sqr();
        p_sq += bw * (gr[node][0].norm_sqr() + gr[node][1].norm_sqr());
        pn_sq += bw * pn.values[slot].norm_sqr();
        q_qt += bw * q * qt.conj();
        pn_eta_q += bw * pn.values[slot].conj() * xi.eta[node] * q;
    }
    let terms = VirialTerms {
        strain,
        grad_eta,
        gradient_kernel,
        boundary_hartree: i_unit * boundary_hartree,
        p_sq: i_unit * p_sq,
        pn_sq: -2.0 * i_unit * pn_sq,
        q_qt,
        pn_eta_q: -i_unit * pn_eta_q,
    };
    let rhs = terms.sum();
    Ok(VirialRecord {
        lhs,
        rhs,
        res: lhs - rhs,
        terms,
    })
}

/// `int_bdry |P.n|^2 dS` for one state.
pub fn boundary_flux_density(u: &ComplexField, grid: &Grid) -> Result<f64> {
    let pn = normal_trace(u, grid)?;
    Ok(grid
        .boundary_quad_w()
        .iter()
        .zip(&pn.values)
        .map(|(w, v)| w * v.norm_sqr())
        .sum())
}

/// The cumulative boundary flux `J(t) = sqrt(int_0^t int_bdry |P.n|^2)`,
/// one value per state; nondecreasing by construction.
pub fn boundary_flux_series(
    times: &[f64],
    fields: &[&ComplexField],
    grid: &Grid,
) -> Result<Vec<f64>> {
    assert_eq!(times.len(), fields.len());
    let mut j = Vec::with_capacity(times.len());
    let mut j_sq = 0.0f64;
    for (s, (&_t, u)) in times.iter().zip(fields).enumerate() {
        if s > 0 {
            let dt = times[s] - times[s - 1];
            j_sq += dt * boundary_flux_density(u, grid)?;
        }
        j.push(j_sq.sqrt());
    }
    Ok(j)
}

/// Per-state term histories entering the a priori inequality. All time
/// integrals use the same right-rectangle rule as `J`.
#[derive(Clone, Debug, Serialize)]
pub struct AprioriSeries {
    pub times: Vec<f64>,
    pub j: Vec<f64>,
    pub j_sq: Vec<f64>,
    pub virial_abs: Vec<f64>,
    pub int_grad_sq: Vec<f64>,
    pub int_h1_sq: Vec<f64>,
    pub int_h1_quart: Vec<f64>,
    pub int_tangential_sq: Vec<f64>,
    pub int_q_qt_sq: Vec<f64>,
    pub int_pn_q: Vec<f64>,
}

/// Assemble the term histories from a recorded trajectory.
pub fn apriori_series(
    times: &[f64],
    fields: &[&ComplexField],
    bd: &BoundaryData,
    grid: &Grid,
    xi: &XiField,
) -> Result<AprioriSeries> {
    assert_eq!(times.len(), fields.len());
    let n = times.len();
    let j = boundary_flux_series(times, fields, grid)?;
    let mut series = AprioriSeries {
        times: times.to_vec(),
        j_sq: j.iter().map(|v| v * v).collect(),
        j,
        virial_abs: Vec::with_capacity(n),
        int_grad_sq: Vec::with_capacity(n),
        int_h1_sq: Vec::with_capacity(n),
        int_h1_quart: Vec::with_capacity(n),
        int_tangential_sq: Vec::with_capacity(n),
        int_q_qt_sq: Vec::with_capacity(n),
        int_pn_q: Vec::with_capacity(n),
    };
    let (mut ig, mut ih, mut ih4, mut itan, mut iqqt, mut ipnq) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (s, u) in fields.iter().enumerate() {
        let t = times[s];
        series
            .virial_abs
            .push(virial_functional(u, grid, xi)?.norm());
        if s > 0 {
            let dt = times[s] - times[s - 1];
            let gn = norm(u, grid, NormKind::Grad)?;
            let h1 = norm(u, grid, NormKind::H1)?;
            ig += dt * gn * gn;
            ih += dt * h1 * h1;
            ih4 += dt * h1.powi(4);
            let pn = normal_trace(u, grid)?;
            let mut tan = 0.0;
            let mut qqt = 0.0;
            let mut pnq = 0.0;
            for (slot, _node) in grid.boundary_idx().iter().enumerate() {
                let bw = grid.boundary_quad_w()[slot];
                if bw == 0.0 {
                    continue;
                }
                tan += bw * bd.tangential_grad_at(slot, t).norm_sqr();
                qqt += bw * (bd.q_at(slot, t) * bd.q_t_at(slot, t).conj()).norm_sqr();
                pnq += bw * pn.values[slot].norm() * bd.q_at(slot, t).norm();
            }
            itan += dt * tan;
            iqqt += dt * qqt;
            ipnq += dt * pnq;
        }
        series.int_grad_sq.push(ig);
        series.int_h1_sq.push(ih);
        series.int_h1_quart.push(ih4);
        series.int_tangential_sq.push(itan);
        series.int_q_qt_sq.push(iqqt);
        series.int_pn_q.push(ipnq);
    }
    Ok(series)
}

/// The one generic constant of the a priori inequality, fitted once on a
/// calibration run and then frozen.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AprioriConstants {
    pub c: f64,
    pub safety: f64,
}

fn apriori_fixed(series: &AprioriSeries, s: usize) -> f64 {
    series.virial_abs[s]
        + series.virial_abs[0]
        + series.int_tangential_sq[s]
        + series.int_q_qt_sq[s]
}

fn apriori_group(series: &AprioriSeries, s: usize) -> f64 {
    series.int_grad_sq[s] + series.int_h1_sq[s] + series.int_h1_quart[s] + series.int_pn_q[s]
}

/// Smallest constant making the inequality hold on the calibration series,
/// inflated by `safety`.
pub fn calibrate_apriori(series: &AprioriSeries, safety: f64) -> AprioriConstants {
    let mut needed = 0.0f64;
    for s in 0..series.times.len() {
        let deficit = series.j_sq[s] - apriori_fixed(series, s);
        let group = apriori_group(series, s);
        if deficit > 0.0 && group > 0.0 {
            needed = needed.max(deficit / group);
        }
    }
    AprioriConstants {
        c: safety * needed,
        safety,
    }
}

/// Result of checking `J^2(t) <= rhs(t)` at every sampled time.
#[derive(Clone, Debug, Serialize)]
pub struct AprioriReport {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Smallest `rhs - lhs` over the run (negative means a violation).
    pub worst_margin: f64,
    pub pass: bool,
}

/// Evaluate the inequality with frozen constants on any trajectory.
pub fn apriori_inequality_check(series: &AprioriSeries, constants: &AprioriConstants) -> AprioriReport {
    let n = series.times.len();
    let mut lhs = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    let mut worst = f64::INFINITY;
    for s in 0..n {
        let l = series.j_sq[s];
        let r = apriori_fixed(series, s) + constants.c * apriori_group(series, s);
        worst = worst.min(r - l);
        lhs.push(l);
        rhs.push(r);
    }
    AprioriReport {
        lhs,
        rhs,
        worst_margin: worst,
        pass: worst >= 0.0,
    }
}

/// Constants of the closed inequality `J^2 <= c1 + c2 J + c3 int J^2`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GronwallConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

fn int_j_sq(series: &AprioriSeries) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(series.times.len());
    for s in 0..series.times.len() {
        if s > 0 {
            acc += (series.times[s] - series.times[s - 1]) * series.j_sq[s];
        }
        out.push(acc);
    }
    out
}

/// Fit the closed-form envelope on a calibration run.
pub fn calibrate_gronwall(series: &AprioriSeries, safety: f64) -> GronwallConstants {
    let ij = int_j_sq(series);
    let mut needed = 0.0f64;
    for s in 0..series.times.len() {
        let denom = 1.0 + series.j[s] + ij[s];
        needed = needed.max(series.j_sq[s] / denom);
    }
    let c = safety * needed;
    GronwallConstants {
        c1: c,
        c2: c,
        c3: c,
    }
}

/// Check that the frozen envelope dominates `J^2` pointwise.
pub fn gronwall_envelope_check(series: &AprioriSeries, k: &GronwallConstants) -> AprioriReport {
    let ij = int_j_sq(series);
    let n = series.times.len();
    let mut lhs = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    let mut worst = f64::INFINITY;
    for s in 0..n {
        let l = series.j_sq[s];
        let r = k.c1 + k.c2 * series.j[s] + k.c3 * ij[s];
        worst = worst.min(r - l);
        lhs.push(l);
        rhs.push(r);
    }
    AprioriReport {
        lhs,
        rhs,
        worst_margin: worst,
        pass: worst >= 0.0,
    }
}

/// Per-step record of all observables and identity residuals; the unit of
/// the CSV output.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub mass_lhs: f64,
    pub mass_rhs: f64,
    pub mass_res: f64,
    pub energy_lhs: f64,
    pub energy_rhs: f64,
    pub energy_res: f64,
    /// Modulus of the complex-valued virial identity sides.
    pub virial_lhs: f64,
    pub virial_rhs: f64,
    pub virial_res: f64,
    pub j_cum: f64,
    pub h1_norm: f64,
    pub picard_iters: usize,
    pub contraction_est: f64,
    /// Filled by the a priori check when one runs; zero otherwise.
    pub apriori_lhs: f64,
    pub apriori_rhs: f64,
}

/// Evaluate one row per `cadence` steps over an in-memory trajectory. Entries
/// are `(t, field, picard_iters, contraction_est)`; rows exist for steps with
/// a full three-state window.
pub fn rows_for_trajectory(
    traj: &[(f64, &ComplexField, usize, f64)],
    bd: &BoundaryData,
    grid: &Grid,
    spec: &KernelSpec,
    xi: &XiField,
    cadence: usize,
) -> Result<Vec<DiagnosticsRow>> {
    let cadence = cadence.max(1);
    if traj.len() < 3 {
        return Ok(Vec::new());
    }
    let times: Vec<f64> = traj.iter().map(|e| e.0).collect();
    let fields: Vec<&ComplexField> = traj.iter().map(|e| e.1).collect();
    let j = boundary_flux_series(&times, &fields, grid)?;
    let mut rows = Vec::new();
    let mut s = 1usize;
    while s + 1 < traj.len() {
        let window: Window = [
            (times[s - 1], fields[s - 1]),
            (times[s], fields[s]),
            (times[s + 1], fields[s + 1]),
        ];
        let m = mass_identity_residual(&window, bd, grid)?;
        let e = energy_identity_residual(&window, bd, grid, spec)?;
        let v = virial_identity_residual(&window, bd, grid, spec, xi)?;
        rows.push(DiagnosticsRow {
            step: s,
            t: times[s],
            mass: mass(fields[s], grid)?,
            energy: energy(fields[s], grid, spec)?,
            mass_lhs: m.lhs,
            mass_rhs: m.rhs,
            mass_res: m.res,
            energy_lhs: e.lhs,
            energy_rhs: e.rhs,
            energy_res: e.res,
            virial_lhs: v.lhs.norm(),
            virial_rhs: v.rhs.norm(),
            virial_res: v.res.norm(),
            j_cum: j[s],
            h1_norm: norm(fields[s], grid, NormKind::H1)?,
            picard_iters: traj[s].2,
            contraction_est: traj[s].3,
            apriori_lhs: 0.0,
            apriori_rhs: 0.0,
        });
        s += cadence;
    }
    Ok(rows)
}

/// Max residuals of one refinement level.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RefinementLevel {
    pub level: usize,
    pub h: f64,
    pub dt: f64,
    pub mass_res: f64,
    pub energy_res: f64,
    pub virial_res: f64,
}

/// Observed convergence orders per identity. `inf` entries mean both
/// residuals sat at the roundoff floor ("exact").
#[derive(Clone, Debug, Serialize)]
pub struct RefinementReport {
    pub levels: Vec<RefinementLevel>,
    pub mass_orders: Vec<f64>,
    pub energy_orders: Vec<f64>,
    pub virial_orders: Vec<f64>,
    pub mass_mean_order: f64,
    pub energy_mean_order: f64,
    pub virial_mean_order: f64,
}

const RESIDUAL_FLOOR: f64 = 1e-13;

fn order_between(coarse: f64, fine: f64) -> f64 {
    if coarse < RESIDUAL_FLOOR && fine < RESIDUAL_FLOOR {
        f64::INFINITY
    } else {
        (coarse / fine).log2()
    }
}

fn mean_order(first: f64, last: f64, halvings: usize) -> f64 {
    if first < RESIDUAL_FLOOR && last < RESIDUAL_FLOOR {
        f64::INFINITY
    } else {
        (first / last).log2() / halvings as f64
    }
}

/// Run `levels` solves produced by `build_level` (level 0 coarsest, each
/// next level halving dx and dt) and report per-identity max residuals and
/// observed orders.
pub fn refinement_study(
    build_level: &dyn Fn(usize) -> Result<crate::stepper::SolveInputs>,
    levels: usize,
) -> Result<RefinementReport> {
    assert!(levels >= 2, "a refinement study needs at least two levels");
    let mut level_results = Vec::with_capacity(levels);
    for level in 0..levels {
        let inputs = build_level(level)?;
        let out = crate::stepper::solve(&inputs).map_err(|e| Error::RefinementLevel {
            level,
            source: Box::new(e),
        })?;
        let fold = |pick: &dyn Fn(&DiagnosticsRow) -> f64| -> f64 {
            out.rows.iter().map(|r| pick(r).abs()).fold(0.0, f64::max)
        };
        level_results.push(RefinementLevel {
            level,
            h: inputs.grid.h()[0],
            dt: inputs.cfg.dt,
            mass_res: fold(&|r| r.mass_res),
            energy_res: fold(&|r| r.energy_res),
            virial_res: fold(&|r| r.virial_res),
        });
    }
    let seq = |pick: &dyn Fn(&RefinementLevel) -> f64| -> Vec<f64> {
        level_results.iter().map(pick).collect()
    };
    let orders = |vals: &[f64]| -> Vec<f64> {
        vals.windows(2).map(|w| order_between(w[0], w[1])).collect()
    };
    let mass_seq = seq(&|l| l.mass_res);
    let energy_seq = seq(&|l| l.energy_res);
    let virial_seq = seq(&|l| l.virial_res);
    Ok(RefinementReport {
        mass_orders: orders(&mass_seq),
        energy_orders: orders(&energy_seq),
        virial_orders: orders(&virial_seq),
        mass_mean_order: mean_order(mass_seq[0], mass_seq[levels - 1], levels - 1),
        energy_mean_order: mean_order(energy_seq[0], energy_seq[levels - 1], levels - 1),
        virial_mean_order: mean_order(virial_seq[0], virial_seq[levels - 1], levels - 1),
        levels: level_results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, build_xi_field};
    use crate::kernel::{Backend, KernelSpec};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn zero_field_gives_zero_everything() {
        let g = build_grid(1, &[(0.0, 1.0)], &[17]).unwrap();
        let k = KernelSpec::softened(0.1, Backend::Direct);
        let xi = build_xi_field(&g);
        let z = ComplexField::zeros(&g);
        assert_eq!(mass(&z, &g).unwrap(), 0.0);
        assert_eq!(energy(&z, &g, &k).unwrap(), 0.0);
        let bd = BoundaryData::homogeneous(&g);
        let window: Window = [(0.0, &z), (0.1, &z), (0.2, &z)];
        let m = mass_identity_residual(&window, &bd, &g).unwrap();
        assert_eq!((m.lhs, m.rhs, m.res), (0.0, 0.0, 0.0));
        let e = energy_identity_residual(&window, &bd, &g, &k).unwrap();
        assert_eq!((e.lhs, e.rhs, e.res), (0.0, 0.0, 0.0));
        let v = virial_identity_residual(&window, &bd, &g, &k, &xi).unwrap();
        assert_eq!(v.lhs.norm(), 0.0);
        assert_eq!(v.rhs.norm(), 0.0);
        for term in [
            v.terms.strain,
            v.terms.grad_eta,
            v.terms.gradient_kernel,
            v.terms.boundary_hartree,
            v.terms.p_sq,
            v.terms.pn_sq,
            v.terms.q_qt,
            v.terms.pn_eta_q,
        ] {
            assert_eq!(term.norm(), 0.0);
        }
    }

    #[test]
    fn energy_scales_by_homogeneity() {
        let g = build_grid(1, &[(0.0, 1.0)], &[65]).unwrap();
        let k = KernelSpec::softened(0.1, Backend::Direct);
        let u = ComplexField::from_fn(&g, |x| {
            Complex64::new((3.0 * x[0]).sin(), x[0] * (1.0 - x[0]))
        });
        let grad_part = |u: &ComplexField| -> f64 {
            let gn = norm(u, &g, NormKind::Grad).unwrap();
            0.5 * gn * gn
        };
        let e1 = energy(&u, &g, &k).unwrap();
        let g1 = grad_part(&u);
        let h1 = e1 - g1;
        let u2 = u.scale(c(2.0));
        let e2 = energy(&u2, &g, &k).unwrap();
        let g2 = grad_part(&u2);
        let h2 = e2 - g2;
        assert!((g2 - 4.0 * g1).abs() < 1e-12 * g2.max(1.0), "gradient term scales as c^2");
        assert!((h2 - 16.0 * h1).abs() < 1e-12 * h2.max(1.0), "hartree term scales as c^4");
    }

    #[test]
    fn constant_field_energy_matches_double_sum_oracle() {
        let g = build_grid(1, &[(0.0, 1.0)], &[33]).unwrap();
        let k = KernelSpec::softened(0.25, Backend::Direct);
        let one = ComplexField::constant(&g, c(1.0));
        let e = energy(&one, &g, &k).unwrap();
        // independent brute-force double sum
        let mut oracle = 0.0;
        for i in 0..g.node_count() {
            for j in 0..g.node_count() {
                let dx = g.coords(i)[0] - g.coords(j)[0];
                oracle += g.quad_w()[i] * g.quad_w()[j] / (dx * dx + 0.0625).sqrt();
            }
        }
        oracle *= 0.25;
        assert!((e - oracle).abs() < 1e-12 * oracle, "{e} vs {oracle}");
    }

    #[test]
    fn strain_term_matches_interval_closed_form() {
        // on [0,1] the strain term is 2i * 2 * sum w |du|^2
        let g = build_grid(1, &[(0.0, 1.0)], &[33]).unwrap();
        let k = KernelSpec::softened(0.1, Backend::Direct);
        let xi = build_xi_field(&g);
        let bd = BoundaryData::homogeneous(&g);
        let u = ComplexField::from_fn(&g, |x| {
            Complex64::new((2.0 * x[0]).cos(), (1.5 * x[0]).sin())
        });
        let window: Window = [(0.0, &u), (0.001, &u), (0.002, &u)];
        let v = virial_identity_residual(&window, &bd, &g, &k, &xi).unwrap();
        let gn = norm(&u, &g, NormKind::Grad).unwrap();
        let expected = Complex64::new(0.0, 2.0 * 2.0 * gn * gn);
        assert!((v.terms.strain - expected).norm() < 1e-12 * expected.norm());
        assert_eq!(v.terms.grad_eta.norm(), 0.0, "eta constant, term vanishes");
    }

    #[test]
    fn j_series_is_nondecreasing_and_zero_for_zero_runs() {
        let g = build_grid(1, &[(0.0, 1.0)], &[17]).unwrap();
        let z = ComplexField::zeros(&g);
        let u = ComplexField::from_fn(&g, |x| c(x[0] * x[0]));
        let times = [0.0, 0.1, 0.2, 0.3];
        let zeros = boundary_flux_series(&times, &[&z, &z, &z, &z], &g).unwrap();
        assert!(zeros.iter().all(|&v| v == 0.0));
        let j = boundary_flux_series(&times, &[&z, &u, &u, &u], &g).unwrap();
        for w in j.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!(j[3] > 0.0);
    }

    #[test]
    fn nonuniform_window_is_rejected() {
        let g = build_grid(1, &[(0.0, 1.0)], &[17]).unwrap();
        let bd = BoundaryData::homogeneous(&g);
        let z = ComplexField::zeros(&g);
        let window: Window = [(0.0, &z), (0.1, &z), (0.3, &z)];
        assert!(matches!(
            mass_identity_residual(&window, &bd, &g),
            Err(Error::NonuniformSpacing(_))
        ));
    }

    #[test]
    fn apriori_zero_run_passes_with_zero_constant() {
        let g = build_grid(1, &[(0.0, 1.0)], &[17]).unwrap();
        let xi = build_xi_field(&g);
        let bd = BoundaryData::homogeneous(&g);
        let z = ComplexField::zeros(&g);
        let times = [0.0, 0.1, 0.2];
        let series = apriori_series(&times, &[&z, &z, &z], &bd, &g, &xi).unwrap();
        let constants = calibrate_apriori(&series, 2.0);
        assert_eq!(constants.c, 0.0);
        let rep = apriori_inequality_check(&series, &constants);
        assert!(rep.pass);
        let env = calibrate_gronwall(&series, 2.0);
        assert!(gronwall_envelope_check(&series, &env).pass);
    }

    #[test]
    fn orders_report_exact_at_the_floor() {
        assert!(order_between(1e-15, 1e-16).is_infinite());
        let p = order_between(1e-3, 2.5e-4);
        assert!((p - 2.0).abs() < 1e-12);
    }
}
