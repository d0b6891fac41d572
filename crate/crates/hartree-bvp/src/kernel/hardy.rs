//! Discrete Hardy quotient on an offset box.
//!
//! The continuum inequality `int |u|^2 / |x|^2 <= C ||grad u||^2` (dimension
//! >= 3, sharp constant `4/(d-2)^2`) is what bounds the Hartree potential in
//! sup norm. The probe evaluates the quotient for boundary-vanishing fields
//! on a box containing the origin; the node lattice is shifted by a quarter
//! spacing so no node sits on the singularity. Boundary-vanishing on the box
//! stands in for extension by zero to the whole space, which is the only
//! property the quotient needs.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::sampling::derive_seed;

/// Tensor box in 2 or 3 dimensions, nominally `[-1, 1]^d`, shifted by a
/// quarter spacing so the origin falls strictly between nodes.
#[derive(Clone, Debug)]
pub struct HardyBox {
    dim: usize,
    n: usize,
    h: f64,
    lo: f64,
}

impl HardyBox {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Hardy(format!("dim_embed must be 2 or 3, got {dim}")));
        }
        if n < 4 {
            return Err(Error::Hardy(format!("need at least 4 nodes per axis, got {n}")));
        }
        let h = 2.0 / (n - 1) as f64;
        let b = HardyBox {
            dim,
            n,
            h,
            lo: -1.0 + 0.25 * h,
        };
        let nearest = (0..n)
            .map(|i| b.axis_coord(i).abs())
            .fold(f64::INFINITY, f64::min);
        if nearest < 0.125 * h {
            return Err(Error::Hardy("a node coincides with the origin".into()));
        }
        Ok(b)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    #[inline]
    fn axis_coord(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.h
    }

    #[inline]
    fn axis_pos(&self, node: usize, axis: usize) -> usize {
        (node / self.n.pow(axis as u32)) % self.n
    }

    #[inline]
    fn axis_weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5 * self.h
        } else {
            self.h
        }
    }

    fn is_wall(&self, node: usize) -> bool {
        (0..self.dim).any(|a| {
            let p = self.axis_pos(node, a);
            p == 0 || p == self.n - 1
        })
    }

    fn weight(&self, node: usize) -> f64 {
        (0..self.dim)
            .map(|a| self.axis_weight(self.axis_pos(node, a)))
            .product()
    }

    fn radius_sq(&self, node: usize) -> f64 {
        (0..self.dim)
            .map(|a| self.axis_coord(self.axis_pos(node, a)).powi(2))
            .sum()
    }

    fn partial(&self, u: &[Complex64], node: usize, axis: usize) -> Complex64 {
        let s = self.n.pow(axis as u32);
        let p = self.axis_pos(node, axis);
        if p == 0 {
            (-3.0 * u[node] + 4.0 * u[node + s] - u[node + 2 * s]) / (2.0 * self.h)
        } else if p == self.n - 1 {
            (3.0 * u[node] - 4.0 * u[node - s] + u[node - 2 * s]) / (2.0 * self.h)
        } else {
            (u[node + s] - u[node - s]) / (2.0 * self.h)
        }
    }

    /// Random boundary-vanishing field: a handful of product-sine modes with
    /// random complex coefficients; wall nodes zeroed exactly.
    pub fn random_vanishing_field(&self, rng: &mut impl Rng) -> Vec<Complex64> {
        let span = self.h * (self.n - 1) as f64;
        let modes: Vec<([usize; 3], Complex64)> = (0..5)
            .map(|_| {
                let m = [
                    rng.gen_range(1..=4usize),
                    rng.gen_range(1..=4usize),
                    rng.gen_range(1..=4usize),
                ];
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                (m, c)
            })
            .collect();
        let mut u = vec![Complex64::new(0.0, 0.0); self.node_count()];
        for (node, v) in u.iter_mut().enumerate() {
            if self.is_wall(node) {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, c) in &modes {
                let mut prod = 1.0;
                for axis in 0..self.dim {
                    let s = (self.axis_coord(self.axis_pos(node, axis)) - self.lo) / span;
                    prod *= (m[axis] as f64 * std::f64::consts::PI * s).sin();
                }
                acc += c * prod;
            }
            *v = acc;
        }
        u
    }
}

/// The Hardy quotient `(sum w |u|^2 / |x|^2) / sum w |grad u|^2`. Zero fields
/// return 0 by convention; the quotient is invariant under scaling.
pub fn hardy_quotient(u: &[Complex64], bx: &HardyBox) -> Result<f64> {
    if u.len() != bx.node_count() {
        return Err(Error::Hardy(format!(
            "field has {} values, box has {} nodes",
            u.len(),
            bx.node_count()
        )));
    }
    let wall_max = u
        .iter()
        .enumerate()
        .filter(|(i, _)| bx.is_wall(*i))
        .map(|(_, v)| v.norm())
        .fold(0.0f64, f64::max);
    if wall_max > 0.0 {
        return Err(Error::BoundaryNotZero(wall_max));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for node in 0..bx.node_count() {
        let w = bx.weight(node);
        num += w * u[node].norm_sqr() / bx.radius_sq(node);
        let mut g = 0.0;
        for axis in 0..bx.dim {
            g += bx.partial(u, node, axis).norm_sqr();
        }
        den += w * g;
    }
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

/// Max Hardy quotient over seeded random boundary-vanishing fields.
pub fn hardy_max_quotient(dim: usize, n: usize, samples: usize, seed: u64) -> Result<f64> {
    let bx = HardyBox::new(dim, n)?;
    let quotients: Result<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let u = bx.random_vanishing_field(&mut rng);
            hardy_quotient(&u, &bx)
        })
        .collect();
    Ok(quotients?.into_iter().fold(0.0, f64::max))
}
