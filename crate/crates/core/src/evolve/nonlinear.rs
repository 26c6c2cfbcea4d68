use ndarray::Array2;
use num_complex::Complex64;

use super::StepperConfig;
use crate::fft::fft2;
use crate::field::FourierField;
use crate::grid::SpectralGrid;

/// `true` for modes kept by the truncation `max(|k1|, |k2|) <= fraction n / 2`.
pub fn dealias_mask(grid: &SpectralGrid, fraction: f64) -> Array2<bool> {
    let n = grid.n();
    // absorbs roundoff in e.g. (2/3) * 6
    let cutoff = fraction * n as f64 / 2.0 + 1e-9;
    Array2::from_shape_fn((n, n), |(i, j)| {
        let k = grid.wavenumber(i).abs().max(grid.wavenumber(j).abs());
        k as f64 <= cutoff
    })
}

/// Fourier coefficients of `-1/2 d/dx1 (u^2)`.
///
/// `u` is truncated by [`dealias_mask`] before squaring, and the result is
/// truncated by the same mask. The mean mode of the output is exactly zero,
/// as is the `k1 = -n/2` row, whose derivative has no real counterpart.
pub fn nonlinear_term(u: &FourierField, cfg: &StepperConfig) -> FourierField {
    let grid = *u.grid();
    let n = grid.n();
    let mask = dealias_mask(&grid, cfg.dealias_fraction);
    let mut data: Array2<Complex64> = Array2::zeros((n, n));
    for ((idx, keep), c) in mask.indexed_iter().zip(u.coeffs().iter()) {
        if *keep {
            data[idx] = *c;
        }
    }
    fft2(&mut data, true);
    if u.is_real() {
        data.mapv_inplace(|v| Complex64::new(v.re * v.re, 0.0));
    } else {
        data.mapv_inplace(|v| v * v);
    }
    fft2(&mut data, false);
    let norm = 1.0 / (n * n) as f64;
    let nyquist = grid.index_of(-(n as i64) / 2);
    for ((i, j), c) in data.indexed_iter_mut() {
        if !mask[[i, j]] || Some(i) == nyquist {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let xi1 = grid.xi(i, j)[0];
        *c *= Complex64::new(0.0, -0.5 * xi1) * norm;
    }
    data[[0, 0]] = Complex64::new(0.0, 0.0);
    FourierField::from_coeffs(grid, data, u.is_real()).expect("shape matches grid")
}
