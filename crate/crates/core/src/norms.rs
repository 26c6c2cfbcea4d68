//! L^2 and H^s norms on the torus.
//!
//! `||u||_{H^s}^2 = L^2 sum_k (1 + |xi_k|^2)^s |c_k|^2`, which reduces to the
//! Parseval identity for `s = 0`. Nyquist modes are included.

use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FourierField;
use crate::grid::SpectralGrid;

/// Regularity exponent `s` of `H^s`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub const L2: SobolevIndex = SobolevIndex(0.0);

    /// # Panics
    /// If `s` is not finite.
    pub fn new(s: f64) -> Self {
        Self::try_new(s).expect("Sobolev index must be finite")
    }

    pub fn try_new(s: f64) -> Result<Self> {
        if s.is_finite() {
            Ok(Self(s))
        } else {
            Err(Error::InvalidSobolev(format!("{s} is not finite")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SobolevIndex {
    type Error = Error;

    fn try_from(s: f64) -> Result<Self> {
        Self::try_new(s)
    }
}

impl From<SobolevIndex> for f64 {
    fn from(s: SobolevIndex) -> f64 {
        s.0
    }
}

impl fmt::Display for SobolevIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Squared H^s norm, summed in array order.
pub fn sobolev_norm_sq(f: &FourierField, s: SobolevIndex) -> f64 {
    let grid = f.grid();
    let n = grid.n();
    let s = s.value();
    let coeffs = f.coeffs();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let c = coeffs[[i, j]];
            let m = c.norm_sqr();
            if m == 0.0 {
                continue;
            }
            let [a, b] = grid.xi(i, j);
            let w = if s == 0.0 { 1.0 } else { (1.0 + a * a + b * b).powf(s) };
            acc += w * m;
        }
    }
    grid.length() * grid.length() * acc
}

pub fn sobolev_norm(f: &FourierField, s: SobolevIndex) -> f64 {
    sobolev_norm_sq(f, s).sqrt()
}

pub fn lebesgue2_norm(f: &FourierField) -> f64 {
    sobolev_norm(f, SobolevIndex::L2)
}

/// Riemann-sum L^2 norm of physical samples; the independent side of the
/// Parseval check.
pub fn physical_l2_norm(grid: &SpectralGrid, values: &Array2<f64>) -> f64 {
    let cell = grid.dx() * grid.dx();
    (values.iter().map(|v| v * v).sum::<f64>() * cell).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_constant_has_norm_2pi_for_every_s() {
        let g = SpectralGrid::periodic_2pi(8).unwrap();
        let u = FourierField::from_physical(g, &Array2::from_elem((8, 8), 1.0)).unwrap();
        for s in [-3.0, -1.0, 0.0, 0.5, 2.0] {
            assert!((sobolev_norm(&u, SobolevIndex::new(s)) - 2.0 * PI).abs() < 1e-13);
        }
        assert!((lebesgue2_norm(&u) - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let g = SpectralGrid::periodic_2pi(8).unwrap();
        assert_eq!(lebesgue2_norm(&FourierField::zeros(g)), 0.0);
    }

    #[test]
    fn sine_h1_by_direct_mode_sum() {
        // two modes (+-1, 0), |c| = 1/2, weight (1 + 1)^1
        let oracle = ((2.0 * PI).powi(2) * 2.0 * 0.25 * 2.0f64).sqrt();
        let g = SpectralGrid::periodic_2pi(16).unwrap();
        let x = g.coordinates();
        let vals = Array2::from_shape_fn((16, 16), |(i, _)| x[i].sin());
        let u = FourierField::from_physical(g, &vals).unwrap();
        let h1 = sobolev_norm(&u, SobolevIndex::new(1.0));
        assert!((h1 - oracle).abs() < 1e-12);
        assert!((h1 - 2.0 * PI).abs() < 1e-12);
        // sqrt(2) times the L^2 norm sqrt(2) * pi
        assert!((h1 - 2f64.sqrt() * lebesgue2_norm(&u)).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite_index() {
        assert!(SobolevIndex::try_new(f64::INFINITY).is_err());
        assert!(SobolevIndex::try_new(f64::NAN).is_err());
    }
}
