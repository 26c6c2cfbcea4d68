//! Periodic square box `[0, L)^2` with an `n x n` Fourier lattice.
//!
//! Array index `i` along either axis maps to the integer wavenumber
//! `k = i` for `i < n/2` and `k = i - n` otherwise (FFT order), so that
//! `k` ranges over `[-n/2, n/2)`. The physical wavevector is
//! `xi = (2 pi / L) k`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    length: f64,
    n: usize,
}

impl SpectralGrid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {length}")));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "mode count must be even and at least 8, got {n}"
            )));
        }
        Ok(Self { length, n })
    }

    /// The `[0, 2 pi)^2` box.
    pub fn periodic_2pi(n: usize) -> Result<Self> {
        Self::new(2.0 * PI, n)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Lattice spacing `2 pi / L` of the wavevector lattice.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Largest positive wavevector component, `(n/2) * dxi`.
    pub fn max_wavenumber(&self) -> f64 {
        (self.n / 2) as f64 * self.dxi()
    }

    /// Integer wavenumber for an array index.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Array index for an integer wavenumber, if it is on the lattice.
    #[inline]
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + self.n as i64) as usize)
        }
    }

    /// Physical wavevector at array position `(i, j)`.
    #[inline]
    pub fn xi(&self, i: usize, j: usize) -> [f64; 2] {
        let d = self.dxi();
        [d * self.wavenumber(i) as f64, d * self.wavenumber(j) as f64]
    }

    /// `true` when either component sits on the unpaired Nyquist wavenumber `-n/2`.
    #[inline]
    pub fn is_nyquist(&self, i: usize, j: usize) -> bool {
        i == self.n / 2 || j == self.n / 2
    }

    /// Physical grid spacing `L / n`.
    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Per-axis physical coordinates `j * L / n`.
    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.dx()).collect()
    }

    /// Same box, refined lattice.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.length, self.n * factor)
    }
}
