//! Empirical probes for the nonlinearity estimates.
//!
//! The continuum analysis bounds `||f(v)v - f(w)w||_H1` by a constant times
//! `(||v||^2 + ||w||^2) ||v - w||_H1` and `||f(u)||_inf` by a constant times
//! `||u||^2_H1`, without naming the constants. The probes measure the
//! realized ratios on seeded random fields; tests assert finiteness and
//! stability under refinement, never a specific constant.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::{norm, ComplexField, Grid, NormKind};
use crate::error::Result;
use crate::kernel::sampling::{derive_seed, smooth_random_field};
use crate::kernel::{apply_nonlinearity, hartree_potential, KernelSpec};

/// One evaluation of the Lipschitz quotient.
#[derive(Clone, Copy, Debug)]
pub struct LipschitzRecord {
    pub numerator: f64,
    pub bound_factor: f64,
    pub ratio: f64,
}

/// `numerator = ||f(v)v - f(w)w||_H1`,
/// `bound_factor = (||v||^2_H1 + ||w||^2_H1) ||v - w||_H1`.
pub fn lipschitz_probe(
    v: &ComplexField,
    w: &ComplexField,
    grid: &Grid,
    spec: &KernelSpec,
) -> Result<LipschitzRecord> {
    let nv = apply_nonlinearity(v, grid, spec)?;
    let nw = apply_nonlinearity(w, grid, spec)?;
    let numerator = norm(&nv.sub(&nw), grid, NormKind::H1)?;
    let v1 = norm(v, grid, NormKind::H1)?;
    let w1 = norm(w, grid, NormKind::H1)?;
    let diff = norm(&v.sub(w), grid, NormKind::H1)?;
    let bound_factor = (v1 * v1 + w1 * w1) * diff;
    let ratio = if bound_factor == 0.0 {
        0.0
    } else {
        numerator / bound_factor
    };
    Ok(LipschitzRecord {
        numerator,
        bound_factor,
        ratio,
    })
}

/// One evaluation of the sup-norm bound on the potential.
#[derive(Clone, Copy, Debug)]
pub struct LinftyRecord {
    pub lhs: f64,
    pub rhs: f64,
}

/// `lhs = max_i f(u)(x_i)`, `rhs = ||u||^2_H1`. The test layer owns the
/// calibrated constant relating them.
pub fn potential_linfty_bound_check(
    u: &ComplexField,
    grid: &Grid,
    spec: &KernelSpec,
) -> Result<LinftyRecord> {
    let f = hartree_potential(u, grid, spec)?;
    let lhs = f.values.iter().cloned().fold(0.0f64, f64::max);
    let h1 = norm(u, grid, NormKind::H1)?;
    Ok(LinftyRecord { lhs, rhs: h1 * h1 })
}

/// Thread pool for probe sweeps, capped by `HARTREE_BVP_THREADS` when set.
fn probe_pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(cap) = std::env::var("HARTREE_BVP_THREADS") {
        if let Ok(threads) = cap.trim().parse::<usize>() {
            if threads >= 1 {
                builder = builder.num_threads(threads);
            }
        }
    }
    builder.build().expect("failed to build probe thread pool")
}

fn random_pair(grid: &Grid, seed: u64) -> (ComplexField, ComplexField) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = smooth_random_field(grid, &mut rng, 8);
    let w = smooth_random_field(grid, &mut rng, 8);
    // spread the amplitude scales over two decades
    let sv = 10f64.powf(rand::Rng::gen_range(&mut rng, -1.0..1.0));
    let sw = 10f64.powf(rand::Rng::gen_range(&mut rng, -1.0..1.0));
    (
        v.scale(num_complex::Complex64::new(sv, 0.0)),
        w.scale(num_complex::Complex64::new(sw, 0.0)),
    )
}

/// Max Lipschitz ratio over `samples` seeded random pairs. Deterministic for
/// a fixed seed regardless of thread count: each sample derives its own rng.
pub fn lipschitz_max_ratio(
    grid: &Grid,
    spec: &KernelSpec,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    spec.validate(grid.dim())?;
    let ratios: Result<Vec<f64>> = probe_pool().install(|| {
        (0..samples)
            .into_par_iter()
            .map(|i| {
                let (v, w) = random_pair(grid, derive_seed(seed, i as u64));
                Ok(lipschitz_probe(&v, &w, grid, spec)?.ratio)
            })
            .collect()
    });
    Ok(ratios?.into_iter().fold(0.0, f64::max))
}

/// Max of `lhs / rhs` for the sup-norm bound over seeded random fields.
pub fn linfty_max_ratio(grid: &Grid, spec: &KernelSpec, samples: usize, seed: u64) -> Result<f64> {
    spec.validate(grid.dim())?;
    let ratios: Result<Vec<f64>> = probe_pool().install(|| {
        (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
                let u = smooth_random_field(grid, &mut rng, 8);
                let rec = potential_linfty_bound_check(&u, grid, spec)?;
                Ok(if rec.rhs == 0.0 { 0.0 } else { rec.lhs / rec.rhs })
            })
            .collect()
    });
    Ok(ratios?.into_iter().fold(0.0, f64::max))
}
