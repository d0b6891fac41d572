//! Acceptance suite: nine runnable criteria over the fixed template
//! (interval [0, 1], n = 128, softened kernel a = 0.1, dt = 1e-3, T = 0.5,
//! Gaussian initial datum, windowed boundary forcing A = 0.5).
//!
//! Each test prints one pass/fail line (visible with `--nocapture`) and
//! pins its tolerance and runtime budget in code.

mod common;

use std::time::Instant;

use common::*;
use hartree_bvp::app::{parse_config_str, run_solve};
use hartree_bvp::diagnostics::{
    apriori_inequality_check, apriori_series, calibrate_apriori, calibrate_gronwall, energy,
    gronwall_envelope_check, refinement_study, virial_identity_residual, Window,
};
use hartree_bvp::domain::{build_grid, build_xi_field, ComplexField};
use hartree_bvp::kernel::{
    hardy_max_quotient, hartree_potential, lipschitz_max_ratio, Backend, KernelSpec,
};
use hartree_bvp::stepper::{contraction_probe, solve};
use num_complex::Complex64;

struct Budget {
    name: &'static str,
    cap_s: f64,
    started: Instant,
}

impl Budget {
    fn start(name: &'static str, cap_s: f64) -> Self {
        Budget {
            name,
            cap_s,
            started: Instant::now(),
        }
    }

    fn finish(self, detail: String) {
        let elapsed = self.started.elapsed().as_secs_f64();
        println!(
            "acceptance {}: PASS — {detail} [{elapsed:.1}s / {:.0}s budget]",
            self.name, self.cap_s
        );
        assert!(
            elapsed <= self.cap_s,
            "{} exceeded its runtime budget: {elapsed:.1}s > {:.0}s",
            self.name,
            self.cap_s
        );
    }
}

#[test]
fn criterion_1_mass_identity() {
    let budget = Budget::start("1 (mass identity)", 30.0);

    // homogeneous forcing: relative mass drift at the roundoff floor
    let out = solve(&template(TEMPLATE_N, TEMPLATE_DT, 0.0, 0.5)).unwrap();
    let m0 = out.rows.first().unwrap().mass;
    let drift = out
        .rows
        .iter()
        .map(|r| (r.mass - m0).abs())
        .fold(0.0f64, f64::max)
        / m0;
    assert!(drift <= 1e-8, "mass drift {drift:e} over 500 steps");

    // forced run: residual drops by 4 +- 30% per simultaneous halving
    let report = refinement_study(&|l| Ok(template_level(l, TEMPLATE_AMPLITUDE)), 3).unwrap();
    let res: Vec<f64> = report.levels.iter().map(|l| l.mass_res).collect();
    let factors = [res[0] / res[1], res[1] / res[2]];
    for f in factors {
        assert!((2.8..=5.2).contains(&f), "per-halving factor {f} outside 4 +- 30%");
    }
    budget.finish(format!(
        "homogeneous drift {drift:.2e} (<= 1e-8), forced per-halving factors {:.2} and {:.2} in [2.8, 5.2]",
        factors[0], factors[1]
    ));
}

#[test]
fn criterion_2_energy_identity() {
    let budget = Budget::start("2 (energy identity)", 30.0);

    // forced run: observed order 2.0 +- 0.3 over 3 levels
    let report = refinement_study(&|l| Ok(template_level(l, TEMPLATE_AMPLITUDE)), 3).unwrap();
    let order = report.energy_mean_order;
    assert!(
        (1.7..=2.3).contains(&order),
        "forced energy residual order {order}"
    );

    // homogeneous run: energy drift decreases at order >= 2
    let mut drifts = Vec::new();
    for level in 0..2usize {
        let factor = 1usize << level;
        let inputs = template(
            TEMPLATE_N * factor - (factor - 1),
            TEMPLATE_DT / factor as f64,
            0.0,
            0.1,
        );
        let out = solve(&inputs).unwrap();
        let e0 = energy(&out.states[0].u, &inputs.grid, &inputs.kernel).unwrap();
        let e1 = energy(&out.states.last().unwrap().u, &inputs.grid, &inputs.kernel).unwrap();
        drifts.push((e1 - e0).abs());
    }
    let drift_order = (drifts[0] / drifts[1]).log2();
    assert!(drift_order >= 2.0, "homogeneous energy drift order {drift_order}");
    budget.finish(format!(
        "forced residual order {order:.2} in [1.7, 2.3], homogeneous drift order {drift_order:.2} >= 2"
    ));
}

#[test]
fn criterion_3_virial_identity() {
    let budget = Budget::start("3 (virial identity)", 60.0);

    let report = refinement_study(&|l| Ok(template_level(l, TEMPLATE_AMPLITUDE)), 3).unwrap();
    let order = report.virial_mean_order;
    assert!(order >= 1.0, "virial residual order {order}");
    let res: Vec<f64> = report.levels.iter().map(|l| l.virial_res).collect();
    assert!(res[0] > res[1] && res[1] > res[2], "virial residual not decreasing: {res:?}");

    // all eight right-side terms reported term-by-term on a mid-run window
    let inputs = template_level(0, TEMPLATE_AMPLITUDE);
    let out = solve(&inputs).unwrap();
    let s = out.states.len() / 2;
    let window: Window = [
        (out.states[s - 1].t, &out.states[s - 1].u),
        (out.states[s].t, &out.states[s].u),
        (out.states[s + 1].t, &out.states[s + 1].u),
    ];
    let xi = build_xi_field(&inputs.grid);
    let rec =
        virial_identity_residual(&window, &inputs.bd, &inputs.grid, &inputs.kernel, &xi).unwrap();
    let terms = [
        ("strain", rec.terms.strain),
        ("grad_eta", rec.terms.grad_eta),
        ("gradient_kernel", rec.terms.gradient_kernel),
        ("boundary_hartree", rec.terms.boundary_hartree),
        ("p_sq", rec.terms.p_sq),
        ("pn_sq", rec.terms.pn_sq),
        ("q_qt", rec.terms.q_qt),
        ("pn_eta_q", rec.terms.pn_eta_q),
    ];
    for (name, v) in terms {
        assert!(
            v.re.is_finite() && v.im.is_finite(),
            "virial term {name} not finite"
        );
        println!("  virial term {name}: {:.6e} + {:.6e}i", v.re, v.im);
    }
    budget.finish(format!(
        "residual order {order:.2} >= 1.0 over 3 levels, residuals {res:.3?}, 8 terms reported"
    ));
}

#[test]
fn criterion_4_lipschitz_probe() {
    let budget = Budget::start("4 (nonlinearity Lipschitz probe)", 20.0);
    let kernel = template_kernel();
    let seed = 42u64;
    let coarse_grid = template_grid(64);
    let fine_grid = template_grid(128);
    let coarse = lipschitz_max_ratio(&coarse_grid, &kernel, 1000, seed).unwrap();
    let fine = lipschitz_max_ratio(&fine_grid, &kernel, 1000, seed).unwrap();
    assert!(coarse.is_finite() && coarse > 0.0, "max ratio {coarse}");
    let shift = (fine - coarse).abs() / coarse;
    assert!(shift <= 0.10, "ratio shifted {shift:.3} between n = 64 and n = 128");
    budget.finish(format!(
        "max ratio {coarse:.4} at n=64, {fine:.4} at n=128, shift {:.2}% <= 10%",
        100.0 * shift
    ));
}

#[test]
fn criterion_5_contraction() {
    let budget = Budget::start("5 (contraction)", 20.0);

    // homogenized probe on the template: psi is the initial datum with its
    // (already tiny) boundary trace zeroed
    let inputs = template(TEMPLATE_N, TEMPLATE_DT, TEMPLATE_AMPLITUDE, TEMPLATE_T);
    let mut psi = inputs.phi.clone();
    for &b in inputs.grid.boundary_idx() {
        psi.values[b] = Complex64::new(0.0, 0.0);
    }
    let t0 = 0.04;
    let full = contraction_probe(&psi, &inputs.bd, &inputs.grid, &inputs.kernel, t0, 16, 8.0, 8)
        .unwrap();
    assert!(full.factor_est < 0.5, "factor {}", full.factor_est);
    let half =
        contraction_probe(&psi, &inputs.bd, &inputs.grid, &inputs.kernel, t0 / 2.0, 16, 8.0, 8)
            .unwrap();
    let ratio = half.factor_est / full.factor_est;
    assert!(
        (0.375..=0.625).contains(&ratio),
        "halving T0 changed the factor by {ratio:.3}, expected 0.5 +- 25%"
    );

    // Picard successive differences decrease geometrically once below 0.9
    let out = solve(&inputs).unwrap();
    let mut checked = 0usize;
    for state in &out.states {
        let mut below = false;
        for &r in &state.picard_ratios {
            if below {
                assert!(r <= 1.0, "ratio rose to {r} after dropping below 0.9");
                checked += 1;
            }
            if r < 0.9 {
                below = true;
            }
        }
    }
    budget.finish(format!(
        "factor {:.4} < 0.5 at T0={t0}, halving ratio {ratio:.3} in [0.375, 0.625], {checked} post-0.9 Picard ratios all <= 1",
        full.factor_est
    ));
}

#[test]
fn criterion_6_boundary_flux_and_apriori() {
    let budget = Budget::start("6 (J and the a priori inequality)", 40.0);

    // J nondecreasing on the calibration run
    let cal_inputs = template(TEMPLATE_N, TEMPLATE_DT, TEMPLATE_AMPLITUDE, TEMPLATE_T);
    let cal = solve(&cal_inputs).unwrap();
    for pair in cal.rows.windows(2) {
        assert!(pair[1].j_cum >= pair[0].j_cum, "J decreased");
    }
    let j_final = cal.rows.last().unwrap().j_cum;

    // J(T) stable within 5% under dt halving at fixed n
    let halved = solve(&template(TEMPLATE_N, TEMPLATE_DT / 2.0, TEMPLATE_AMPLITUDE, TEMPLATE_T))
        .unwrap();
    let j_halved = halved.rows.last().unwrap().j_cum;
    let j_shift = (j_final - j_halved).abs() / j_final;
    assert!(j_shift <= 0.05, "J(T) shifted {j_shift:.4} under dt halving");

    // calibrate on A = 0.5, freeze, validate on A = 0.25
    let xi = build_xi_field(&cal_inputs.grid);
    let times: Vec<f64> = cal.states.iter().map(|s| s.t).collect();
    let fields: Vec<&ComplexField> = cal.states.iter().map(|s| &s.u).collect();
    let cal_series = apriori_series(&times, &fields, &cal_inputs.bd, &cal_inputs.grid, &xi).unwrap();
    let constants = calibrate_apriori(&cal_series, 2.0);
    let envelope = calibrate_gronwall(&cal_series, 2.0);

    let val_inputs = template(TEMPLATE_N, TEMPLATE_DT, 0.25, TEMPLATE_T);
    let val = solve(&val_inputs).unwrap();
    let vt: Vec<f64> = val.states.iter().map(|s| s.t).collect();
    let vf: Vec<&ComplexField> = val.states.iter().map(|s| &s.u).collect();
    let val_series = apriori_series(&vt, &vf, &val_inputs.bd, &val_inputs.grid, &xi).unwrap();
    let check = apriori_inequality_check(&val_series, &constants);
    assert!(
        check.pass,
        "a priori inequality violated on A = 0.25 with frozen constants: margin {}",
        check.worst_margin
    );
    let env_check = gronwall_envelope_check(&val_series, &envelope);
    assert!(
        env_check.pass,
        "closed envelope violated on A = 0.25: margin {}",
        env_check.worst_margin
    );
    budget.finish(format!(
        "J nondecreasing, J(T) shift {:.2}% <= 5%, frozen C = {:.3} holds on A=0.25 (margin {:.3e}), envelope holds (margin {:.3e})",
        100.0 * j_shift, constants.c, check.worst_margin, env_check.worst_margin
    ));
}

#[test]
fn criterion_7_hardy_probe() {
    let budget = Budget::start("7 (Hardy probe)", 30.0);
    let max_q = hardy_max_quotient(3, 33, 500, 2024).unwrap();
    assert!(max_q <= 4.5, "max Hardy quotient {max_q} exceeds 4.5");
    assert!(max_q > 0.0);
    budget.finish(format!(
        "max quotient {max_q:.4} <= 4.5 over 500 seeded fields on a 33^3 offset box"
    ));
}

#[test]
fn criterion_8_kernel_backends() {
    let budget = Budget::start("8 (kernel backends)", 20.0);

    let rel_disagreement = |fd: &[f64], ff: &[f64]| -> f64 {
        let denom = fd.iter().cloned().fold(0.0f64, f64::max);
        fd.iter()
            .zip(ff)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max)
            / denom
    };

    // 1D softened at n = 256
    let g1 = template_grid(256);
    let u1 = gaussian_phi(&g1);
    let d1 = hartree_potential(&u1, &g1, &KernelSpec::softened(0.1, Backend::Direct)).unwrap();
    let f1 = hartree_potential(&u1, &g1, &KernelSpec::softened(0.1, Backend::Fast)).unwrap();
    let rel1 = rel_disagreement(&d1.values, &f1.values);
    assert!(rel1 <= 1e-12, "1D backend disagreement {rel1:e}");

    // 2D coulomb at 64 x 64
    let g2 = build_grid(2, &[(0.0, 1.0), (0.0, 1.0)], &[64, 64]).unwrap();
    let u2 = ComplexField::from_fn(&g2, |x| {
        Complex64::new(
            (-(x[0] - 0.4).powi(2) - (x[1] - 0.6).powi(2)).exp(),
            x[0] * x[1],
        )
    });
    let d2 = hartree_potential(&u2, &g2, &KernelSpec::coulomb(Backend::Direct)).unwrap();
    let f2 = hartree_potential(&u2, &g2, &KernelSpec::coulomb(Backend::Fast)).unwrap();
    let rel2 = rel_disagreement(&d2.values, &f2.values);
    assert!(rel2 <= 1e-12, "2D backend disagreement {rel2:e}");

    // FAST at least 5x faster at n = 512 (best of 5, plans warmed)
    let g5 = template_grid(512);
    let u5 = gaussian_phi(&g5);
    let direct = KernelSpec::softened(0.1, Backend::Direct);
    let fast = KernelSpec::softened(0.1, Backend::Fast);
    let _ = hartree_potential(&u5, &g5, &fast).unwrap();
    let best_of = |spec: &KernelSpec| -> f64 {
        (0..5)
            .map(|_| {
                let t = Instant::now();
                let _ = hartree_potential(&u5, &g5, spec).unwrap();
                t.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let td = best_of(&direct);
    let tf = best_of(&fast);
    let speedup = td / tf;
    assert!(speedup >= 5.0, "FAST only {speedup:.1}x faster at n = 512");
    budget.finish(format!(
        "agreement {rel1:.2e} (1D n=256) and {rel2:.2e} (2D 64x64) <= 1e-12, speedup {speedup:.1}x >= 5x at n=512"
    ));
}

#[test]
fn criterion_9_global_existence_smoke() {
    let budget = Budget::start("9 (long forced run)", 120.0);
    // T = 5 with the forcing window [0, 1]; driven through the app layer so
    // the dt-halving retry policy is in the loop
    let cfg = parse_config_str(
        "grid.dim = 1\n\
         grid.x.min = 0.0\n\
         grid.x.max = 1.0\n\
         grid.x.n = 128\n\
         kernel.family = softened\n\
         kernel.soften_a = 0.1\n\
         kernel.backend = fast\n\
         boundary.amplitude = 0.5\n\
         boundary.t0 = 0.0\n\
         boundary.t1 = 1.0\n\
         boundary.profile = left\n\
         ic.kind = gaussian\n\
         ic.center_x = 0.5\n\
         ic.width = 0.07\n\
         stepper.dt = 0.001\n\
         stepper.t_final = 5.0\n\
         retry.max_halvings = 3\n",
    )
    .unwrap();
    let artifacts = run_solve(&cfg).map_err(|(e, _)| e).unwrap();
    assert_eq!(artifacts.summary.steps, 5000);
    assert!(artifacts.summary.truncated.is_none(), "run was truncated");
    assert!(
        artifacts.summary.retries.len() <= 3,
        "needed {} retries",
        artifacts.summary.retries.len()
    );
    let max_h1 = artifacts.summary.h1_norm_max;
    assert!(max_h1.is_finite() && max_h1 > 0.0, "max H1 {max_h1}");
    assert!(artifacts.summary.j_final.is_finite());
    budget.finish(format!(
        "5000 steps completed with {} retries, max H1 = {max_h1:.4}, J(T) = {:.4}",
        artifacts.summary.retries.len(),
        artifacts.summary.j_final
    ));
}
