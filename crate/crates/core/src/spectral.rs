//! Fourier-side application of the axes operator on periodic grids.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::geometry::AnisotropyIndices;
use crate::grid::{GridFunction, TensorGrid};
use crate::operator::symbol_constant;

/// Angular frequency of Fourier index `m` on an axis of `n` nodes and period `len`.
pub fn grid_frequency(m: usize, n: usize, len: f64) -> f64 {
    let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
    2.0 * std::f64::consts::PI * signed / len
}

/// In-place transform of every line along every axis.
fn transform(grid: &TensorGrid, data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    for axis in 0..grid.dim() {
        let n = grid.dims()[axis];
        let s = grid.strides()[axis];
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for start in 0..grid.len() {
            if grid.axis_index(start, axis) != 0 {
                continue;
            }
            for (i, c) in line.iter_mut().enumerate() {
                *c = data[start + i * s];
            }
            fft.process(&mut line);
            for (i, c) in line.iter().enumerate() {
                data[start + i * s] = *c;
            }
        }
    }
}

/// Per-node multiplier `-sum_k C(alpha_k) |xi_k|^{alpha_k}` in FFT order.
fn symbol_field(idx: &AnisotropyIndices, grid: &TensorGrid) -> Vec<f64> {
    let lengths = grid.lengths();
    let consts: Vec<f64> = idx.alphas().iter().map(|a| symbol_constant(*a)).collect();
    (0..grid.len())
        .map(|f| {
            let multi = grid.multi_index(f);
            -multi
                .iter()
                .enumerate()
                .map(|(k, &m)| {
                    let xi = grid_frequency(m, grid.dims()[k], lengths[k]);
                    consts[k] * xi.abs().powf(idx.alpha(k))
                })
                .sum::<f64>()
        })
        .collect()
}

/// Inverse DFT of `-m(xi) * DFT(u)` with `m(xi) = sum_k C(alpha_k)|xi_k|^{alpha_k}`.
pub fn spectral_apply(idx: &AnisotropyIndices, u: &GridFunction) -> Result<GridFunction> {
    let grid = &u.grid;
    if !grid.is_periodic() {
        return Err(Error::SpectralPathUnavailable);
    }
    if grid.dim() != idx.dim() {
        return Err(Error::DimensionMismatch {
            expected: idx.dim(),
            got: grid.dim(),
        });
    }
    let mut data: Vec<Complex64> = u.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    transform(grid, &mut data, false);
    for (c, m) in data.iter_mut().zip(symbol_field(idx, grid)) {
        *c *= m;
    }
    transform(grid, &mut data, true);
    let n = grid.len() as f64;
    Ok(u.with_values(data.iter().map(|c| c.re / n).collect()))
}

/// `int u (-L u)` over the period cell computed on the Fourier side,
/// `|cell| / N^2 sum_xi m(xi) |u_hat(xi)|^2`.
pub fn spectral_energy(idx: &AnisotropyIndices, u: &GridFunction) -> Result<f64> {
    let grid = &u.grid;
    if !grid.is_periodic() {
        return Err(Error::SpectralPathUnavailable);
    }
    let mut data: Vec<Complex64> = u.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    transform(grid, &mut data, false);
    let n = grid.len() as f64;
    let vol: f64 = grid.lengths().iter().product();
    let field = symbol_field(idx, grid);
    let s: Vec<f64> = data
        .iter()
        .zip(&field)
        .map(|(c, m)| -m * c.norm_sqr())
        .collect();
    Ok(vol * crate::numerics::compensated_sum(&s) / (n * n))
}
