//! Complex banded LU factorization.
//!
//! The Crank-Nicolson matrix and the discrete Laplace operator are banded:
//! bandwidth 1 in one dimension (tridiagonal) and `nx` in two dimensions with
//! x-fastest node ordering. Both assemblies are strictly diagonally dominant,
//! so the factorization runs without pivoting and a zero pivot is reported as
//! an assembly bug rather than recovered from.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Banded matrix in LAPACK-style diagonal storage: entry `(i, j)` with
/// `|i - j| <= bw` lives at `data[i * (2*bw + 1) + (j - i + bw)]`.
#[derive(Clone, Debug)]
pub struct BandedMatrix {
    n: usize,
    bw: usize,
    data: Vec<Complex64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        assert!(n > 0 && bw < n, "bandwidth must be smaller than the matrix");
        BandedMatrix {
            n,
            bw,
            data: vec![Complex64::new(0.0, 0.0); n * (2 * bw + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(j + self.bw >= i && j <= i + self.bw, "outside band");
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// Factorize in place into L (unit lower) and U, both inside the band.
    pub fn factorize(mut self) -> Result<BandedLu> {
        let (n, bw) = (self.n, self.bw);
        for k in 0..n {
            let pivot = self.get(k, k);
            if pivot.norm_sqr() == 0.0 {
                return Err(Error::LinearSolve(format!("zero pivot at row {k}")));
            }
            let imax = (k + bw).min(n - 1);
            for i in (k + 1)..=imax {
                let l = self.get(i, k) / pivot;
                self.set(i, k, l);
                let jmax = (k + bw).min(n - 1);
                for j in (k + 1)..=jmax {
                    let upd = l * self.get(k, j);
                    let idx = self.idx(i, j);
                    self.data[idx] -= upd;
                }
            }
        }
        Ok(BandedLu { m: self })
    }
}

/// Factorized form; reusable for many right-hand sides.
#[derive(Clone, Debug)]
pub struct BandedLu {
    m: BandedMatrix,
}

impl BandedLu {
    /// Solve `A x = b`, overwriting `x` (initialized to `b` by the caller).
    pub fn solve_in_place(&self, x: &mut [Complex64]) {
        let (n, bw) = (self.m.n, self.m.bw);
        assert_eq!(x.len(), n);
        // forward: L y = b
        for i in 0..n {
            let jmin = i.saturating_sub(bw);
            let mut acc = x[i];
            for j in jmin..i {
                acc -= self.m.get(i, j) * x[j];
            }
            x[i] = acc;
        }
        // backward: U x = y
        for i in (0..n).rev() {
            let jmax = (i + bw).min(n - 1);
            let mut acc = x[i];
            for j in (i + 1)..=jmax {
                acc -= self.m.get(i, j) * x[j];
            }
            x[i] = acc / self.m.get(i, i);
        }
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dominant(n: usize, bw: usize, seed: u64) -> (BandedMatrix, Vec<Vec<Complex64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = BandedMatrix::zeros(n, bw);
        let mut dense = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            let mut offsum = 0.0;
            for j in i.saturating_sub(bw)..=(i + bw).min(n - 1) {
                if j == i {
                    continue;
                }
                let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m.set(i, j, v);
                dense[i][j] = v;
                offsum += v.norm();
            }
            let d = Complex64::new(offsum + 1.0, rng.gen_range(-1.0..1.0));
            m.set(i, i, d);
            dense[i][i] = d;
        }
        (m, dense)
    }

    #[test]
    fn solves_random_banded_systems() {
        for (n, bw, seed) in [(7usize, 1usize, 1u64), (40, 1, 2), (50, 7, 3), (64, 8, 4)] {
            let (m, dense) = random_dominant(n, bw, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let b: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let lu = m.factorize().unwrap();
            let mut x = b.clone();
            lu.solve_in_place(&mut x);
            // residual check against the dense product
            let mut worst = 0.0f64;
            for i in 0..n {
                let mut ax = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    ax += dense[i][j] * x[j];
                }
                worst = worst.max((ax - b[i]).norm());
            }
            assert!(worst < 1e-12, "residual {worst} for n={n} bw={bw}");
        }
    }

    #[test]
    fn tridiagonal_identity_roundtrip() {
        let mut m = BandedMatrix::zeros(5, 1);
        for i in 0..5 {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        let lu = m.factorize().unwrap();
        let b: Vec<Complex64> = (0..5).map(|i| Complex64::new(i as f64, -1.0)).collect();
        let mut x = b.clone();
        lu.solve_in_place(&mut x);
        assert_eq!(x, b);
    }

    #[test]
    fn zero_pivot_is_reported() {
        let mut m = BandedMatrix::zeros(3, 1);
        m.set(0, 0, Complex64::new(0.0, 0.0));
        m.set(1, 1, Complex64::new(1.0, 0.0));
        m.set(2, 2, Complex64::new(1.0, 0.0));
        assert!(m.factorize().is_err());
    }
}
