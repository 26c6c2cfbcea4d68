//! Seeded random fields for experiments and tests.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::field::FourierField;
use crate::grid::SpectralGrid;
use crate::norms::{sobolev_norm, SobolevIndex};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Real random field with Gaussian coefficients on `max(|k1|, |k2|) <= kmax`,
/// rescaled to the given `H^s` norm. Modes are drawn in lexicographic
/// wavenumber order over the upper half plane, so output depends only on
/// the RNG state.
pub fn random_band_limited<R: Rng>(
    grid: SpectralGrid,
    kmax: usize,
    norm: f64,
    s: SobolevIndex,
    include_mean: bool,
    rng: &mut R,
) -> FourierField {
    let n = grid.n();
    let kmax = kmax.min(n / 2 - 1) as i64;
    let mut coeffs = Array2::<Complex64>::zeros((n, n));
    for k1 in -kmax..=kmax {
        for k2 in -kmax..=kmax {
            let upper = k1 > 0 || (k1 == 0 && k2 > 0);
            let zero = k1 == 0 && k2 == 0;
            if !(upper || zero) {
                continue;
            }
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let i = grid.index_of(k1).expect("inside lattice");
            let j = grid.index_of(k2).expect("inside lattice");
            if zero {
                if include_mean {
                    coeffs[[i, j]] = Complex64::new(re, 0.0);
                }
                continue;
            }
            let c = Complex64::new(re, im);
            coeffs[[i, j]] = c;
            let mi = grid.index_of(-k1).expect("inside lattice");
            let mj = grid.index_of(-k2).expect("inside lattice");
            coeffs[[mi, mj]] = c.conj();
        }
    }
    let field = FourierField::from_coeffs(grid, coeffs, true).expect("shape matches grid");
    normalize(&field, norm, s)
}

/// Rescales `field` to `H^s` norm `norm`; the zero field is returned as is.
pub fn normalize(field: &FourierField, norm: f64, s: SobolevIndex) -> FourierField {
    let current = sobolev_norm(field, s);
    if current == 0.0 {
        field.clone()
    } else {
        field.scale(norm / current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_band_limited_and_normalized() {
        let g = SpectralGrid::periodic_2pi(32).unwrap();
        let mut rng = rng_from_seed(11);
        let u = random_band_limited(g, 5, 0.3, SobolevIndex::new(2.0), false, &mut rng);
        assert!(u.hermitian_defect() == 0.0);
        assert!((sobolev_norm(&u, SobolevIndex::new(2.0)) - 0.3).abs() < 1e-14);
        assert_eq!(u.mean().norm(), 0.0);
        for ((i, j), c) in u.coeffs().indexed_iter() {
            if g.wavenumber(i).abs() > 5 || g.wavenumber(j).abs() > 5 {
                assert_eq!(c.norm(), 0.0);
            }
        }
        let phys = u.to_physical_complex();
        assert!(phys.iter().all(|v| v.im.abs() < 1e-14));
    }

    #[test]
    fn same_seed_same_field() {
        let g = SpectralGrid::periodic_2pi(16).unwrap();
        let a = random_band_limited(g, 3, 1.0, SobolevIndex::L2, true, &mut rng_from_seed(3));
        let b = random_band_limited(g, 3, 1.0, SobolevIndex::L2, true, &mut rng_from_seed(3));
        assert_eq!(a, b);
    }
}
