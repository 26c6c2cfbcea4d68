//! Exponential-integrator weight functions and the divided difference of
//! exponentials, all evaluated without cancellation near zero.

/// Below this modulus `phi1` switches to its Taylor series.
pub const PHI1_SERIES_RADIUS: f64 = 1e-4;
/// Number of series terms used for `phi1`.
pub const PHI1_SERIES_TERMS: usize = 8;
const PHI2_SERIES_RADIUS: f64 = 0.1;
const PHI2_SERIES_TERMS: usize = 14;

/// Relative resonance threshold for [`exp_divided_difference`].
pub const RESONANCE_THRESHOLD: f64 = 1e-8;

/// `phi1(z) = (e^z - 1) / z`, with `phi1(0) = 1`.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < PHI1_SERIES_RADIUS {
        // sum_{k>=0} z^k / (k+1)!
        let mut term = 1.0;
        let mut acc = 1.0;
        for k in 1..PHI1_SERIES_TERMS {
            term *= z / (k + 1) as f64;
            acc += term;
        }
        acc
    } else {
        z.exp_m1() / z
    }
}

/// `phi2(z) = (e^z - 1 - z) / z^2`, with `phi2(0) = 1/2`.
pub fn phi2(z: f64) -> f64 {
    if z.abs() < PHI2_SERIES_RADIUS {
        // sum_{k>=0} z^k / (k+2)!
        let mut term = 0.5;
        let mut acc = 0.5;
        for k in 1..PHI2_SERIES_TERMS {
            term *= z / (k + 2) as f64;
            acc += term;
        }
        acc
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// `(e^{a t} - e^{b t}) / (a - b)`, i.e. `int_0^t e^{b (t - tau)} e^{a tau} dtau`.
///
/// Near resonance (`|a - b| < 1e-8 max(|a|, |b|, 1)`) and whenever
/// `|(a - b) t| < 1` the value is formed as `t e^{b t} phi1((a - b) t)`;
/// otherwise the direct quotient has no cancellation.
pub fn exp_divided_difference(a: f64, b: f64, t: f64) -> f64 {
    let gap = a - b;
    let scale = a.abs().max(b.abs()).max(1.0);
    let d = gap * t;
    if gap.abs() < RESONANCE_THRESHOLD * scale || d.abs() < 1.0 {
        t * (b * t).exp() * phi1(d)
    } else {
        ((a * t).exp() - (b * t).exp()) / gap
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi1_oracle(z: f64) -> f64 {
        // composite Simpson on int_0^1 e^{z s} ds
        let m = 20000;
        let h = 1.0 / m as f64;
        let mut acc = 1.0 + z.exp();
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * (z * i as f64 * h).exp();
        }
        acc * h / 3.0
    }

    #[test]
    fn phi1_matches_quadrature_across_scales() {
        for z in [-30.0, -3.0, -0.5, -1e-3, -1e-5, 0.0, 1e-6, 1e-4, 0.2, 2.0] {
            let rel = (phi1(z) - phi1_oracle(z)).abs() / phi1_oracle(z);
            assert!(rel < 1e-12, "z={z} rel={rel}");
        }
    }

    #[test]
    fn phi1_continuous_across_series_switch() {
        let below = phi1(PHI1_SERIES_RADIUS * (1.0 - 1e-15));
        let above = phi1(PHI1_SERIES_RADIUS * (1.0 + 1e-15));
        assert!((below - above).abs() < 1e-15);
    }

    #[test]
    fn phi2_limits_and_switch() {
        assert_eq!(phi2(0.0), 0.5);
        let below = phi2(0.1 * (1.0 - 1e-15));
        let above = phi2(0.1 * (1.0 + 1e-15));
        assert!((below - above).abs() < 1e-14);
        // phi2(z) = (phi1(z) - 1) / z
        for z in [-40.0, -2.0, 0.5, 3.0] {
            assert!((phi2(z) - (phi1(z) - 1.0) / z).abs() < 1e-14);
        }
    }

    #[test]
    fn divided_difference_limits() {
        // resonance: limit is t e^{a t}
        let v = exp_divided_difference(-2.0, -2.0, 0.3);
        assert!((v - 0.3 * (-0.6f64).exp()).abs() < 1e-16);
        // far apart: direct quotient
        let v = exp_divided_difference(-1e4, -1.0, 0.1);
        let direct = ((-1e3f64).exp() - (-0.1f64).exp()) / (-1e4 + 1.0);
        assert!((v - direct).abs() < 1e-18);
        // nearly resonant pair against high-precision expansion
        let (a, b, t): (f64, f64, f64) = (-5.0 + 1e-9, -5.0, 1.0);
        let exact = t * (b * t).exp() * (1.0 + 0.5 * (a - b) * t);
        assert!(((exact - exp_divided_difference(a, b, t)) / exact).abs() < 1e-15);
    }
}
