//! Fourier symbol of the linear operator, its semigroup, and numerical
//! certificates for the kernel estimates.
//!
//! With `f(xi) = -(R - kappa) xi1^2 + kappa xi2^2 - alpha |xi|^3 + |xi|^4`
//! the linear flow multiplies each Fourier mode by `exp(-f(xi) t)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::FourierField;
use crate::grid::SpectralGrid;
use crate::norms::{sobolev_norm, SobolevIndex};
use crate::params::PhysicalParams;
use crate::report::{json_num, ExperimentReport};

#[inline]
pub fn symbol_f(xi: [f64; 2], p: &PhysicalParams) -> f64 {
    let [a, b] = xi;
    let r2 = a * a + b * b;
    let r = r2.sqrt();
    -(p.r - p.kappa) * a * a + p.kappa * b * b - p.alpha * r2 * r + r2 * r2
}

#[inline]
pub fn kernel_hat(t: f64, xi: [f64; 2], p: &PhysicalParams) -> f64 {
    (-symbol_f(xi, p) * t).exp()
}

/// Per-mode multiplication by `kernel_hat(t, xi, p)`.
pub fn apply_semigroup(f: &FourierField, t: f64, p: &PhysicalParams) -> FourierField {
    if t == 0.0 {
        return f.clone();
    }
    f.map_modes(|xi, c| c * kernel_hat(t, xi, p))
}

/// Frequency split for the pointwise kernel bounds: above `m` the symbol
/// dominates `eta |xi|^4`, below it the kernel grows at most like
/// `exp(c_low t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighFreqBound {
    pub m: f64,
    pub eta: f64,
    /// `max(0, -f)` over the continuum disk `|xi| <= m`; bounds the lattice value.
    pub c_low: f64,
    /// `max(0, -f)` over lattice modes with `|xi| <= m`.
    pub c_low_lattice: f64,
    /// Lattice modes with `|xi| > m` and `f(xi) < eta |xi|^4`.
    pub violations: usize,
    /// Lattice modes examined above the threshold.
    pub checked: usize,
}

/// Builds the bound with `M = R + alpha + 1 + margin` and
/// `eta = 1 - (R + alpha) / M`, certifying it over every mode of `grid`.
pub fn high_freq_bound(p: &PhysicalParams, grid: &SpectralGrid, margin: f64) -> Result<HighFreqBound> {
    if !(margin.is_finite() && margin > 0.0) {
        return Err(Error::InvalidConfig(format!("margin must be positive, got {margin}")));
    }
    p.validate()?;
    let m = p.r + p.alpha + 1.0 + margin;
    let eta = 1.0 - (p.r + p.alpha) / m;
    let n = grid.n();
    let rows: Vec<(f64, usize, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut low: f64 = 0.0;
            let mut bad = 0;
            let mut checked = 0;
            for j in 0..n {
                let xi = grid.xi(i, j);
                let r2 = xi[0] * xi[0] + xi[1] * xi[1];
                let f = symbol_f(xi, p);
                if r2.sqrt() > m {
                    checked += 1;
                    if f < eta * r2 * r2 {
                        bad += 1;
                    }
                } else {
                    low = low.max(-f);
                }
            }
            (low, bad, checked)
        })
        .collect();
    let c_low_lattice = rows.iter().fold(0.0f64, |a, r| a.max(r.0));
    let violations = rows.iter().map(|r| r.1).sum();
    let checked = rows.iter().map(|r| r.2).sum();
    Ok(HighFreqBound {
        m,
        eta,
        c_low: continuum_c_low(p, m),
        c_low_lattice,
        violations,
        checked,
    })
}

/// `max(0, -f(xi))` over the disk `|xi| <= radius`.
///
/// For fixed `|xi| = rho`, `-f` is largest along the `xi1` axis, where it
/// reads `(R - kappa) rho^2 + alpha rho^3 - rho^4`; its interior critical
/// point solves `4 rho^2 - 3 alpha rho - 2 (R - kappa) = 0`.
pub fn continuum_c_low(p: &PhysicalParams, radius: f64) -> f64 {
    let a = p.r - p.kappa;
    let g = |rho: f64| a * rho * rho + p.alpha * rho.powi(3) - rho.powi(4);
    let mut best = g(radius).max(0.0);
    let disc = 9.0 * p.alpha * p.alpha + 32.0 * a;
    if disc >= 0.0 {
        let rho = (3.0 * p.alpha + disc.sqrt()) / 8.0;
        if rho > 0.0 && rho <= radius {
            best = best.max(g(rho));
        }
    }
    best
}

/// Counts lattice modes violating the two-regime pointwise kernel bound at
/// each of `times`.
pub fn pointwise_kernel_violations(
    p: &PhysicalParams,
    grid: &SpectralGrid,
    bound: &HighFreqBound,
    times: &[f64],
) -> usize {
    let n = grid.n();
    times
        .iter()
        .map(|&t| {
            (0..n)
                .into_par_iter()
                .map(|i| {
                    (0..n)
                        .filter(|&j| {
                            let xi = grid.xi(i, j);
                            let r2 = xi[0] * xi[0] + xi[1] * xi[1];
                            let k = kernel_hat(t, xi, p);
                            let limit = if r2.sqrt() > bound.m {
                                (-bound.eta * r2 * r2 * t).exp()
                            } else {
                                (bound.c_low * t).exp()
                            };
                            k > limit * (1.0 + 1e-14)
                        })
                        .count()
                })
                .sum::<usize>()
        })
        .sum()
}

/// `sup_xi |xi|^lambda K(t, xi)` over the lattice.
pub fn weighted_kernel_sup(p: &PhysicalParams, grid: &SpectralGrid, lambda: f64, t: f64) -> f64 {
    let n = grid.n();
    (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n).fold(0.0f64, |m, j| {
                let xi = grid.xi(i, j);
                let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
                m.max(r.powf(lambda) * kernel_hat(t, xi, p))
            })
        })
        .reduce(|| 0.0, f64::max)
}

/// Tabulates `t^{lambda/4} e^{-eta t} sup_xi |xi|^lambda K(t, xi)` over
/// `times`. The measured constant is the largest weighted ratio; the report
/// passes when every ratio is finite.
pub fn check_kernel_sup_bound(
    p: &PhysicalParams,
    grid: &SpectralGrid,
    lambda: f64,
    times: &[f64],
    bound: &HighFreqBound,
) -> Result<ExperimentReport> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("lambda >= 0 required, got {lambda}")));
    }
    if times.iter().any(|&t| !(t.is_finite() && t > 0.0)) {
        return Err(Error::InvalidConfig("kernel sup times must be positive".into()));
    }
    let mut report = ExperimentReport::new(
        "kernel-sup-bound",
        &["t", "lambda_or_power", "lhs", "weighted_ratio", "pass"],
    );
    let mut c_measured: f64 = 0.0;
    for &t in times {
        let lhs = weighted_kernel_sup(p, grid, lambda, t);
        let ratio = t.powf(lambda / 4.0) * (-bound.eta * t).exp() * lhs;
        let ok = ratio.is_finite();
        report.pass &= ok;
        c_measured = c_measured.max(ratio);
        report.push_row(vec![t.into(), lambda.into(), lhs.into(), ratio.into(), ok.into()]);
    }
    report.set_summary("lambda", json_num(lambda));
    report.set_summary("eta", json_num(bound.eta));
    report.set_summary("M", json_num(bound.m));
    report.set_summary("c_measured", json_num(c_measured));
    Ok(report)
}

/// `sup_xi |xi|^j |K^a(t, xi) - K^b(t, xi)|` over the lattice.
pub fn kernel_difference_sup_between(
    a: &PhysicalParams,
    b: &PhysicalParams,
    grid: &SpectralGrid,
    t: f64,
    weight_power: u32,
) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let n = grid.n();
    (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n).fold(0.0f64, |m, j| {
                let xi = grid.xi(i, j);
                let fa = symbol_f(xi, a);
                let fb = symbol_f(xi, b);
                // K^b (e^{-(fa - fb) t} - 1) keeps full relative precision for a ~ b
                let diff = ((-fb * t).exp() * (-(fa - fb) * t).exp_m1()).abs();
                let w = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt().powi(weight_power as i32);
                let v = w * diff;
                if v.is_finite() {
                    m.max(v)
                } else {
                    m
                }
            })
        })
        .reduce(|| 0.0, f64::max)
}

/// Kernel difference against the vertical-plane limit `(1, 0, 0)`.
pub fn kernel_difference_sup(p: &PhysicalParams, grid: &SpectralGrid, t: f64, weight_power: u32) -> f64 {
    kernel_difference_sup_between(p, &PhysicalParams::vertical(), grid, t, weight_power)
}

/// Normalized smoothing ratio
/// `t^{s1/4} e^{-eta t} ||K(t) phi||_{H^{s+s1}} / ||phi||_{H^s}`.
pub fn smoothing_operator_ratio(
    phi: &FourierField,
    p: &PhysicalParams,
    s: SobolevIndex,
    s1: f64,
    t: f64,
    eta: f64,
) -> f64 {
    let evolved = apply_semigroup(phi, t, p);
    let num = sobolev_norm(&evolved, SobolevIndex::new(s.value() + s1));
    let den = sobolev_norm(phi, s);
    t.powf(s1 / 4.0) * (-eta * t).exp() * num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o() -> PhysicalParams {
        PhysicalParams::vertical()
    }

    #[test]
    fn symbol_examples() {
        assert_eq!(symbol_f([0.0, 0.0], &o()), 0.0);
        assert_eq!(symbol_f([1.0, 0.0], &o()), 0.0);
        assert_eq!(symbol_f([0.0, 1.0], &o()), 1.0);
        let p = PhysicalParams::new(2.0, 1.0, 2.0).unwrap();
        let expected = 4.0 - 4.0 * 2f64.sqrt();
        assert!((symbol_f([1.0, 1.0], &p) - expected).abs() < 1e-14);
        assert!((symbol_f([1.0, 1.0], &p) + 1.656854).abs() < 1e-6);
    }

    #[test]
    fn kernel_examples() {
        let p = PhysicalParams::new(1.5, 0.5, 1.0).unwrap();
        for xi in [[0.0, 0.0], [3.0, -2.0], [0.5, 0.25]] {
            assert_eq!(kernel_hat(0.0, xi, &p), 1.0);
        }
        for t in [0.1, 1.0, 10.0] {
            assert_eq!(kernel_hat(t, [1.0, 0.0], &o()), 1.0);
        }
    }

    #[test]
    fn bound_constants() {
        let g = SpectralGrid::periodic_2pi(64).unwrap();
        let b = high_freq_bound(&o(), &g, 1.0).unwrap();
        assert!((b.m - 3.0).abs() < 1e-15);
        assert!((b.eta - 2.0 / 3.0).abs() < 1e-15);
        assert!((b.c_low - 0.25).abs() < 1e-15);
        assert!(b.c_low_lattice <= 0.25);
        assert_eq!(b.violations, 0);
        assert!(b.checked > 0);

        let p = PhysicalParams::new(2.0, 1.0, 2.0).unwrap();
        let b = high_freq_bound(&p, &g, 1.0).unwrap();
        assert!((b.m - 6.0).abs() < 1e-15);
        assert!((b.eta - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(b.violations, 0);

        assert!(high_freq_bound(&o(), &g, 0.0).is_err());
    }

    #[test]
    fn continuum_c_low_by_dense_scan() {
        for p in [
            o(),
            PhysicalParams::new(2.0, 0.0, 2.0).unwrap(),
            PhysicalParams::new(0.5, 1.0, 0.0).unwrap(),
            PhysicalParams::new(1.3, 0.4, 0.7).unwrap(),
        ] {
            let radius = p.r + p.alpha + 2.0;
            let mut scan: f64 = 0.0;
            let steps = 400;
            for a in 0..=steps {
                for b in 0..=steps {
                    let xi = [radius * a as f64 / steps as f64, radius * b as f64 / steps as f64];
                    if xi[0].hypot(xi[1]) <= radius {
                        scan = scan.max(-symbol_f(xi, &p));
                    }
                }
            }
            let c = continuum_c_low(&p, radius);
            assert!(c >= scan - 1e-12, "{p:?}: {c} < {scan}");
            assert!(c - scan < 2e-3 * (1.0 + c), "{p:?}: {c} vs {scan}");
        }
    }

    #[test]
    fn lambda_zero_sup_is_lattice_growth() {
        let g = SpectralGrid::periodic_2pi(32).unwrap();
        let p = PhysicalParams::new(2.0, 0.0, 2.0).unwrap();
        let b = high_freq_bound(&p, &g, 1.0).unwrap();
        for t in [0.01, 0.3, 1.0] {
            let sup = weighted_kernel_sup(&p, &g, 0.0, t);
            assert!((sup - (b.c_low_lattice * t).exp()).abs() < 1e-12 * sup);
        }
    }

    #[test]
    fn lambda_four_small_time_scaling() {
        // sup_y y e^{-eta y} = 1 / (e eta) bounds t sup |xi|^4 e^{-eta |xi|^4 t}
        let g = SpectralGrid::periodic_2pi(128).unwrap();
        let b = high_freq_bound(&o(), &g, 1.0).unwrap();
        let rep = check_kernel_sup_bound(&o(), &g, 4.0, &[1e-3, 1e-2, 1e-1], &b).unwrap();
        assert!(rep.pass);
        for (t, lhs) in rep.column("t").iter().zip(rep.column("lhs")) {
            // f >= rho^4 - rho^2, so the lattice sup sits below the scalar sup
            let cap = (0..=200_000)
                .map(|k| {
                    let rho = k as f64 * 5e-4;
                    let y = rho.powi(4) * t;
                    y * (-(y - rho * rho * t)).exp()
                })
                .fold(0.0f64, f64::max);
            assert!(t * lhs <= cap, "t={t} lhs={lhs}");
            assert!(t * lhs >= 0.5 / std::f64::consts::E, "t={t} lhs={lhs}");
        }
    }

    #[test]
    fn kernel_difference_edges() {
        let g = SpectralGrid::periodic_2pi(32).unwrap();
        assert_eq!(kernel_difference_sup(&o(), &g, 0.7, 0), 0.0);
        let p = PhysicalParams::new(1.2, 0.1, 0.3).unwrap();
        assert_eq!(kernel_difference_sup(&p, &g, 0.0, 1), 0.0);
    }

    #[test]
    fn kernel_difference_first_order_in_delta() {
        // mean-value oracle: sup |K^a - K^o| ~ delta t sup xi1^2 e^{-f t}
        let g = SpectralGrid::periodic_2pi(64).unwrap();
        let t = 0.3;
        let oracle = (0..64)
            .flat_map(|i| (0..64).map(move |j| (i, j)))
            .map(|(i, j)| {
                let xi = g.xi(i, j);
                t * xi[0] * xi[0] * kernel_hat(t, xi, &o())
            })
            .fold(0.0f64, f64::max);
        for delta in [1e-3, 1e-4, 1e-5] {
            let a = PhysicalParams::new(1.0 + delta, 0.0, 0.0).unwrap();
            let ratio = kernel_difference_sup(&a, &g, t, 0) / delta;
            assert!((ratio - oracle).abs() < 20.0 * delta * oracle, "{ratio} vs {oracle}");
        }
    }

    #[test]
    fn pointwise_bounds_hold() {
        let g = SpectralGrid::periodic_2pi(64).unwrap();
        for p in [o(), PhysicalParams::new(2.0, 1.0, 2.0).unwrap()] {
            let b = high_freq_bound(&p, &g, 1.0).unwrap();
            assert_eq!(pointwise_kernel_violations(&p, &g, &b, &[1e-3, 0.1, 1.0]), 0);
        }
    }
}
