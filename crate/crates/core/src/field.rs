//! Fourier-series representation of fields on a [`SpectralGrid`].
//!
//! Coefficients follow the series convention
//! `u(x) = sum_k c_k exp(i xi_k . x)`, so the forward transform carries the
//! `1/n^2` factor and `||u||_{L^2}^2 = L^2 sum_k |c_k|^2`.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::fft2;
use crate::grid::SpectralGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct FourierField {
    grid: SpectralGrid,
    coeffs: Array2<Complex64>,
    real: bool,
}

impl FourierField {
    pub fn zeros(grid: SpectralGrid) -> Self {
        let n = grid.n();
        Self {
            grid,
            coeffs: Array2::zeros((n, n)),
            real: true,
        }
    }

    /// Wraps a coefficient array in FFT index order. `real` records whether
    /// the coefficients describe a real-valued function (Hermitian symmetric).
    pub fn from_coeffs(grid: SpectralGrid, coeffs: Array2<Complex64>, real: bool) -> Result<Self> {
        check_shape(&grid, coeffs.nrows(), coeffs.ncols())?;
        Ok(Self { grid, coeffs, real })
    }

    pub fn from_physical(grid: SpectralGrid, values: &Array2<f64>) -> Result<Self> {
        check_shape(&grid, values.nrows(), values.ncols())?;
        let mut data = values.mapv(|v| Complex64::new(v, 0.0));
        forward(&grid, &mut data);
        Ok(Self {
            grid,
            coeffs: data,
            real: true,
        })
    }

    pub fn from_physical_complex(grid: SpectralGrid, values: &Array2<Complex64>) -> Result<Self> {
        check_shape(&grid, values.nrows(), values.ncols())?;
        let mut data = values.clone();
        forward(&grid, &mut data);
        Ok(Self {
            grid,
            coeffs: data,
            real: false,
        })
    }

    /// Physical values; for real fields the (roundoff-level) imaginary part
    /// is dropped.
    pub fn to_physical(&self) -> Array2<f64> {
        self.to_physical_complex().mapv(|c| c.re)
    }

    pub fn to_physical_complex(&self) -> Array2<Complex64> {
        let mut data = self.coeffs.clone();
        fft2(&mut data, true);
        data
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Array2<Complex64> {
        self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Coefficient at integer wavenumber `(k1, k2)`.
    pub fn mode(&self, k1: i64, k2: i64) -> Option<Complex64> {
        let i = self.grid.index_of(k1)?;
        let j = self.grid.index_of(k2)?;
        Some(self.coeffs[[i, j]])
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs[[0, 0]]
    }

    /// Applies a per-mode map `(xi, c) -> c'`. The result keeps the realness
    /// flag, so the map must commute with `xi -> -xi` conjugation for real
    /// fields.
    pub fn map_modes<F>(&self, f: F) -> Self
    where
        F: Fn([f64; 2], Complex64) -> Complex64,
    {
        let grid = self.grid;
        let coeffs = Array2::from_shape_fn(self.coeffs.dim(), |(i, j)| f(grid.xi(i, j), self.coeffs[[i, j]]));
        Self {
            grid,
            coeffs,
            real: self.real,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: &self.coeffs * c,
            real: self.real,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            coeffs: &self.coeffs + &other.coeffs,
            real: self.real && other.real,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            coeffs: &self.coeffs - &other.coeffs,
            real: self.real && other.real,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `max |c(-k) - conj(c(k))|` over non-Nyquist modes.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if self.grid.is_nyquist(i, j) {
                    continue;
                }
                let mi = (n - i) % n;
                let mj = (n - j) % n;
                let d = (self.coeffs[[mi, mj]] - self.coeffs[[i, j]].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub(crate) fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Spectral resampling onto a grid with the same box length: shared
    /// modes are copied, modes at or beyond the smaller Nyquist index are
    /// dropped or zero-filled.
    pub fn resample(&self, grid: SpectralGrid) -> Result<Self> {
        if grid.length() != self.grid.length() {
            return Err(Error::GridMismatch);
        }
        let kmax = (self.grid.n().min(grid.n()) / 2) as i64;
        let mut coeffs = Array2::zeros((grid.n(), grid.n()));
        for k1 in 1 - kmax..kmax {
            for k2 in 1 - kmax..kmax {
                let src = [self.grid.index_of(k1), self.grid.index_of(k2)];
                let dst = [grid.index_of(k1), grid.index_of(k2)];
                if let ([Some(a), Some(b)], [Some(c), Some(d)]) = (src, dst) {
                    coeffs[[c, d]] = self.coeffs[[a, b]];
                }
            }
        }
        Ok(Self {
            grid,
            coeffs,
            real: self.real,
        })
    }
}

/// Forward transform of physical samples on `grid`.
pub fn to_fourier(grid: SpectralGrid, values: &Array2<f64>) -> Result<FourierField> {
    FourierField::from_physical(grid, values)
}

/// Inverse transform back to physical samples.
pub fn to_physical(field: &FourierField) -> Array2<f64> {
    field.to_physical()
}

fn forward(grid: &SpectralGrid, data: &mut Array2<Complex64>) {
    fft2(data, false);
    let norm = 1.0 / (grid.n() * grid.n()) as f64;
    data.mapv_inplace(|c| c * norm);
}

fn check_shape(grid: &SpectralGrid, rows: usize, cols: usize) -> Result<()> {
    if rows != grid.n() || cols != grid.n() {
        return Err(Error::SizeMismatch {
            expected: grid.n(),
            rows,
            cols,
        });
    }
    Ok(())
}
