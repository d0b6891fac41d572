//! Convolution engines shared by the potential and gradient-kernel operators.
//!
//! Both backends consume the same lag table of kernel samples, so they agree
//! to roundoff by construction. DIRECT is a serial double loop with a fixed
//! summation order; FAST embeds the Toeplitz (block-Toeplitz in 2D) matrix in
//! a zero-padded circular convolution evaluated with FFTs.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};

use crate::domain::Grid;

/// Kernel samples on the lag grid. Entry for lag `(dx, dy)` (in node steps,
/// `|dx| < nx`, `|dy| < ny`) sits at `(dy + ny - 1) * (2 nx - 1) + dx + nx - 1`.
pub(crate) struct LagTable {
    pub values: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
}

impl LagTable {
    /// Build from a radial profile evaluated at nonnegative lag offsets; the
    /// table is even bit-exactly because only `|dx|, |dy|` enter.
    pub fn even(grid: &Grid, sample: impl Fn(f64, f64) -> f64) -> Self {
        let [nx, ny] = grid.n();
        let [hx, hy] = grid.h();
        let mut values = vec![0.0; (2 * nx - 1) * (2 * ny - 1)];
        for dy in 0..ny {
            for dx in 0..nx {
                let v = sample(dx as f64 * hx, dy as f64 * hy);
                for (sy, sx) in [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)] {
                    let px = (nx as i64 - 1 + sx * dx as i64) as usize;
                    let py = (ny as i64 - 1 + sy * dy as i64) as usize;
                    values[py * (2 * nx - 1) + px] = v;
                }
            }
        }
        LagTable { values, nx, ny }
    }

    /// Build from an odd profile along `axis`: entries flip sign with the lag
    /// sign on that axis.
    pub fn odd(grid: &Grid, axis: usize, sample: impl Fn(f64, f64) -> f64) -> Self {
        let [nx, ny] = grid.n();
        let [hx, hy] = grid.h();
        let mut values = vec![0.0; (2 * nx - 1) * (2 * ny - 1)];
        for dy in 0..ny {
            for dx in 0..nx {
                let v = sample(dx as f64 * hx, dy as f64 * hy);
                for (sy, sx) in [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)] {
                    let px = (nx as i64 - 1 + sx * dx as i64) as usize;
                    let py = (ny as i64 - 1 + sy * dy as i64) as usize;
                    let sign = if axis == 0 { sx as f64 } else { sy as f64 };
                    values[py * (2 * nx - 1) + px] = sign * v;
                }
            }
        }
        LagTable { values, nx, ny }
    }

    #[inline]
    fn at(&self, dx: i64, dy: i64) -> f64 {
        let px = (dx + self.nx as i64 - 1) as usize;
        let py = (dy + self.ny as i64 - 1) as usize;
        self.values[py * (2 * self.nx - 1) + px]
    }
}

/// `out[i] = sum_j table(x_i - x_j) * c[j]` by direct summation.
pub(crate) fn convolve_direct(table: &LagTable, c: &[f64]) -> Vec<f64> {
    let (nx, ny) = (table.nx, table.ny);
    let mut out = vec![0.0; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            let mut acc = 0.0;
            for jy in 0..ny {
                for jx in 0..nx {
                    acc += table.at(ix as i64 - jx as i64, iy as i64 - jy as i64) * c[jy * nx + jx];
                }
            }
            out[iy * nx + ix] = acc;
        }
    }
    out
}

static PLANS: Lazy<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut cache = PLANS.lock().unwrap();
    cache
        .entry((len, forward))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if forward {
                planner.plan_fft_forward(len)
            } else {
                planner.plan_fft_inverse(len)
            }
        })
        .clone()
}

/// In-place 2D FFT over a row-major `lx * ly` buffer.
fn fft_2d(data: &mut [Complex64], lx: usize, ly: usize, forward: bool) {
    let row_fft = plan(lx, forward);
    for row in data.chunks_exact_mut(lx) {
        row_fft.process(row);
    }
    if ly > 1 {
        let col_fft = plan(ly, forward);
        let mut scratch = vec![Complex64::new(0.0, 0.0); ly];
        for x in 0..lx {
            for y in 0..ly {
                scratch[y] = data[y * lx + x];
            }
            col_fft.process(&mut scratch);
            for y in 0..ly {
                data[y * lx + x] = scratch[y];
            }
        }
    }
}

/// Same sum as `convolve_direct`, via zero-padded circular convolution.
pub(crate) fn convolve_fast(table: &LagTable, c: &[f64]) -> Vec<f64> {
    let (nx, ny) = (table.nx, table.ny);
    let lx = (2 * nx - 1).next_power_of_two();
    let ly = if ny == 1 {
        1
    } else {
        (2 * ny - 1).next_power_of_two()
    };
    let zero = Complex64::new(0.0, 0.0);

    let mut kbuf = vec![zero; lx * ly];
    for dy in -(ny as i64 - 1)..=(ny as i64 - 1) {
        let py = dy.rem_euclid(ly as i64) as usize;
        for dx in -(nx as i64 - 1)..=(nx as i64 - 1) {
            let px = dx.rem_euclid(lx as i64) as usize;
            kbuf[py * lx + px] = Complex64::new(table.at(dx, dy), 0.0);
        }
    }
    let mut cbuf = vec![zero; lx * ly];
    for jy in 0..ny {
        for jx in 0..nx {
            cbuf[jy * lx + jx] = Complex64::new(c[jy * nx + jx], 0.0);
        }
    }

    fft_2d(&mut kbuf, lx, ly, true);
    fft_2d(&mut cbuf, lx, ly, true);
    for (k, x) in kbuf.iter().zip(cbuf.iter_mut()) {
        *x *= k;
    }
    fft_2d(&mut cbuf, lx, ly, false);

    let scale = 1.0 / (lx * ly) as f64;
    let mut out = vec![0.0; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            out[iy * nx + ix] = cbuf[iy * lx + ix].re * scale;
        }
    }
    out
}
