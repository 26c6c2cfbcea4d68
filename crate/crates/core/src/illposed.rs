//! Norm inflation of the second derivative of the flow map at the origin.
//!
//! Two frequency bands `A1 = [-N, -N + r)^2` and `A2 = [N + r, N + 2r)^2`
//! carry indicator data `v0`, `w0`. The second Frechet derivative
//! `D^2_0 S(t)(v0, w0) = 2 B(K v0, K w0)` with
//! `B(v, w)(t) = -1/2 int_0^t K(t - tau) d/dx1 (v w)(tau) dtau`
//! is supported near `[r, 3r]^2` and its `H^s` norm grows like
//! `e^{-t} N^{-2s-4}` when `s < -2`.
//!
//! These fields are complex valued in physical space, so only
//! symmetry-agnostic operations (semigroup multiplication and convolution)
//! are used here.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::gauss_legendre;
use crate::fft::fft2;
use crate::field::FourierField;
use crate::fit::fit_loglog;
use crate::grid::SpectralGrid;
use crate::kernel::symbol_f;
use crate::norms::{sobolev_norm, SobolevIndex};
use crate::params::PhysicalParams;
use crate::phi::exp_divided_difference;
use crate::report::{json_num, ExperimentReport};

/// Accepted deviation of the fitted slope from `-2s - 4`.
pub const SLOPE_TOLERANCE: f64 = 0.3;
/// Accepted max/min ratio of `inflation_norm / (e^{-t} N^{-2s-4})` across `N`.
pub const RATIO_SPREAD_MAX: f64 = 4.0;
/// Smallest band width in lattice cells.
pub const MIN_BAND_CELLS: i64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IllposedConfig {
    /// Band center `N` in wavevector units.
    #[serde(rename = "N")]
    pub n_band: f64,
    /// Band width `r` in wavevector units.
    pub r: f64,
    pub s: SobolevIndex,
    /// Evaluation time.
    pub t: f64,
    /// Box length `L`; the lattice spacing is `2 pi / L`.
    pub length: f64,
    /// Modes per axis.
    pub n: usize,
    /// Geometric refinement levels of the tau mesh at each end.
    pub quad_levels: usize,
    /// Gauss-Legendre points per panel.
    pub quad_points: usize,
}

impl Default for IllposedConfig {
    fn default() -> Self {
        Self {
            n_band: 16.0,
            r: 1.0,
            s: SobolevIndex::new(-3.0),
            t: 0.05,
            length: 8.0 * PI,
            n: 576,
            quad_levels: 36,
            quad_points: 8,
        }
    }
}

/// Which frequency band carries the indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    A1,
    A2,
}

fn lattice_multiple(v: f64, dxi: f64, name: &str) -> Result<i64> {
    let k = v / dxi;
    let rounded = k.round();
    if (k - rounded).abs() > 1e-9 * k.abs().max(1.0) {
        return Err(Error::InvalidConfig(format!(
            "{name}={v} must be an integer multiple of the lattice spacing {dxi}"
        )));
    }
    Ok(rounded as i64)
}

impl IllposedConfig {
    pub fn grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.length, self.n)
    }

    pub fn with_band(&self, n_band: f64) -> Self {
        Self { n_band, ..*self }
    }

    /// Band center and width in lattice cells.
    pub fn cells(&self) -> Result<(i64, i64)> {
        let dxi = self.grid()?.dxi();
        Ok((
            lattice_multiple(self.n_band, dxi, "N")?,
            lattice_multiple(self.r, dxi, "r")?,
        ))
    }

    /// Full validation, including the ill-posedness range `s < -2`.
    pub fn validate(&self) -> Result<()> {
        let sv = self.s.value();
        if sv >= -2.0 {
            return Err(Error::InvalidSobolev(format!("s < -2 required, got {sv}")));
        }
        self.validate_lattice()
    }

    /// Checks everything except the range of `s`, so the boundary case
    /// `s = -2` can still be evaluated.
    pub fn validate_lattice(&self) -> Result<()> {
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(Error::InvalidConfig(format!("t > 0 required, got {}", self.t)));
        }
        if self.quad_levels == 0 || self.quad_points == 0 {
            return Err(Error::InvalidConfig(
                "quadrature levels and points must be positive".into(),
            ));
        }
        let grid = self.grid()?;
        let (nc, rc) = self.cells()?;
        if nc <= 0 {
            return Err(Error::InvalidConfig(format!("N > 0 required, got {}", self.n_band)));
        }
        if rc < MIN_BAND_CELLS {
            return Err(Error::InvalidConfig(format!(
                "r >= {MIN_BAND_CELLS} lattice spacings required, got {} cells",
                rc
            )));
        }
        let need = 2.0 * self.n_band + 4.0 * self.r;
        if grid.max_wavenumber() < need - 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "grid max wavenumber >= 2N + 4r = {need} required, got {}",
                grid.max_wavenumber()
            )));
        }
        for band in [Band::A1, Band::A2] {
            let (lo, hi) = band_cells(nc, rc, band);
            if grid.index_of(lo).is_none() || grid.index_of(hi - 1).is_none() {
                return Err(Error::RegionOutsideLattice(format!(
                    "{band:?} spans cells [{lo}, {hi}) outside [-{0}, {0})",
                    self.n / 2
                )));
            }
        }
        Ok(())
    }

    /// Indicator height `r^{-1} N^{-s} dxi / L`, scaled so that the `H^s`
    /// norm of the indicator stays of order one for any box length.
    pub fn height(&self) -> Result<f64> {
        let grid = self.grid()?;
        Ok(self.n_band.powf(-self.s.value()) / self.r * grid.dxi() / grid.length())
    }

    /// `e^{-t} N^{-2s-4}`.
    pub fn model_value(&self) -> f64 {
        (-self.t).exp() * self.n_band.powf(-2.0 * self.s.value() - 4.0)
    }

    /// Lattice window `[r - dxi, 3r + dxi]^2` that must contain the output
    /// support.
    pub fn support_window(&self) -> Result<(i64, i64)> {
        let (_, rc) = self.cells()?;
        Ok((rc - 1, 3 * rc + 1))
    }
}

/// Half-open cell range `[lo, hi)` of a band along either axis.
fn band_cells(nc: i64, rc: i64, band: Band) -> (i64, i64) {
    match band {
        Band::A1 => (-nc, -nc + rc),
        Band::A2 => (nc + rc, nc + 2 * rc),
    }
}

/// Indicator of the band with height [`IllposedConfig::height`]; no
/// Hermitian completion is applied.
pub fn indicator_data(cfg: &IllposedConfig, band: Band) -> Result<FourierField> {
    cfg.validate_lattice()?;
    let grid = cfg.grid()?;
    let (nc, rc) = cfg.cells()?;
    let (lo, hi) = band_cells(nc, rc, band);
    let height = Complex64::new(cfg.height()?, 0.0);
    let mut coeffs = Array2::zeros((grid.n(), grid.n()));
    for k1 in lo..hi {
        for k2 in lo..hi {
            let i = grid.index_of(k1).expect("validated");
            let j = grid.index_of(k2).expect("validated");
            coeffs[[i, j]] = height;
        }
    }
    FourierField::from_coeffs(grid, coeffs, false)
}

/// Nonzero modes in lexicographic wavenumber order.
fn support(f: &FourierField) -> Vec<([i64; 2], Complex64)> {
    let grid = f.grid();
    let mut out: Vec<([i64; 2], Complex64)> = f
        .coeffs()
        .indexed_iter()
        .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
        .map(|((i, j), c)| ([grid.wavenumber(i), grid.wavenumber(j)], *c))
        .collect();
    out.sort_by_key(|(k, _)| *k);
    out
}

fn xi_of(grid: &SpectralGrid, k: [i64; 2]) -> [f64; 2] {
    let d = grid.dxi();
    [k[0] as f64 * d, k[1] as f64 * d]
}

/// Closed form of `D^2_0 S(t)(v, w)`:
/// `(-i xi1) sum_eta v(xi - eta) w(eta) (e^{a t} - e^{b t}) / (a - b)` with
/// `a = -f(xi - eta) - f(eta)` and `b = -f(xi)`.
///
/// Pairs whose sum leaves the lattice are an error.
pub fn d2_flow_exact_pair(v: &FourierField, w: &FourierField, t: f64, p: &PhysicalParams) -> Result<FourierField> {
    v.same_grid(w)?;
    let grid = *v.grid();
    let sv = support(v);
    let sw = support(w);
    let mut coeffs = Array2::<Complex64>::zeros((grid.n(), grid.n()));
    for (kv, cv) in &sv {
        let fv = symbol_f(xi_of(&grid, *kv), p);
        for (kw, cw) in &sw {
            let k = [kv[0] + kw[0], kv[1] + kw[1]];
            let (Some(i), Some(j)) = (grid.index_of(k[0]), grid.index_of(k[1])) else {
                return Err(Error::RegionOutsideLattice(format!(
                    "sum mode {k:?} leaves the lattice"
                )));
            };
            let xi = xi_of(&grid, k);
            let a = -fv - symbol_f(xi_of(&grid, *kw), p);
            let b = -symbol_f(xi, p);
            coeffs[[i, j]] += cv * cw * exp_divided_difference(a, b, t);
        }
    }
    for ((i, j), c) in coeffs.indexed_iter_mut() {
        *c *= Complex64::new(0.0, -grid.xi(i, j)[0]);
    }
    FourierField::from_coeffs(grid, coeffs, false)
}

/// [`d2_flow_exact_pair`] on the indicator data of `cfg`.
pub fn d2_flow_exact(cfg: &IllposedConfig, p: &PhysicalParams) -> Result<FourierField> {
    let v = indicator_data(cfg, Band::A1)?;
    let w = indicator_data(cfg, Band::A2)?;
    d2_flow_exact_pair(&v, &w, cfg.t, p)
}

/// Quadrature value of `B(K v, K w)(t)` and the number of tau nodes used.
#[derive(Debug, Clone)]
pub struct BilinearQuadrature {
    pub field: FourierField,
    pub nodes: usize,
}

/// Tau nodes and weights on `[0, t]`: Gauss-Legendre panels graded
/// geometrically towards both ends, with breakpoints `t/2 * 2^{-j}` and
/// `t - t/2 * 2^{-j}` for `j = 0..=levels`.
pub fn graded_nodes(t: f64, levels: usize, points: usize) -> Vec<(f64, f64)> {
    let mut edges = vec![0.0];
    for j in (0..=levels).rev() {
        edges.push(0.5 * t * 0.5f64.powi(j as i32));
    }
    for j in 1..=levels {
        edges.push(t - 0.5 * t * 0.5f64.powi(j as i32));
    }
    edges.push(t);
    let (x, w) = gauss_legendre(points);
    let mut out = Vec::with_capacity((edges.len() - 1) * points);
    for e in edges.windows(2) {
        let (a, b) = (e[0], e[1]);
        for (xq, wq) in x.iter().zip(&w) {
            out.push((0.5 * (a + b) + 0.5 * (b - a) * xq, 0.5 * (b - a) * wq));
        }
    }
    out
}

/// Bounding box `[lo, hi]` (inclusive) of a support list.
fn bbox(s: &[([i64; 2], Complex64)]) -> ([i64; 2], [i64; 2]) {
    let mut lo = [i64::MAX; 2];
    let mut hi = [i64::MIN; 2];
    for (k, _) in s {
        for d in 0..2 {
            lo[d] = lo[d].min(k[d]);
            hi[d] = hi[d].max(k[d]);
        }
    }
    (lo, hi)
}

/// `B(K v, K w)(t) = -1/2 int_0^t K(t - tau) d/dx1 [(K(tau) v)(K(tau) w)] dtau`
/// by graded composite Gauss-Legendre in tau. At each node the coefficient
/// convolution is formed with zero-padded transforms over the bounding
/// boxes of the two supports.
pub fn bilinear_b(
    v: &FourierField,
    w: &FourierField,
    t: f64,
    p: &PhysicalParams,
    levels: usize,
    points: usize,
) -> Result<BilinearQuadrature> {
    v.same_grid(w)?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidConfig(format!("t > 0 required, got {t}")));
    }
    let grid = *v.grid();
    let n = grid.n();
    let sv = support(v);
    let sw = support(w);
    let nodes = graded_nodes(t, levels, points);
    if sv.is_empty() || sw.is_empty() {
        return Ok(BilinearQuadrature {
            field: FourierField::from_coeffs(grid, Array2::zeros((n, n)), false)?,
            nodes: nodes.len(),
        });
    }
    let (lv, hv) = bbox(&sv);
    let (lw, hw) = bbox(&sw);
    let ext = |d: usize| ((hv[d] - lv[d]) + (hw[d] - lw[d]) + 1) as usize;
    let shape = (ext(0), ext(1));
    let out_lo = [lv[0] + lw[0], lv[1] + lw[1]];
    // symbols over the padded boxes
    let sym = |lo: [i64; 2]| {
        Array2::from_shape_fn(shape, |(a, b)| {
            symbol_f(xi_of(&grid, [lo[0] + a as i64, lo[1] + b as i64]), p)
        })
    };
    let fv = sym(lv);
    let fw = sym(lw);
    let fo = sym(out_lo);
    let mut acc = Array2::<Complex64>::zeros(shape);
    for &(tau, weight) in &nodes {
        let mut bv = Array2::<Complex64>::zeros(shape);
        for (k, c) in &sv {
            let (a, b) = ((k[0] - lv[0]) as usize, (k[1] - lv[1]) as usize);
            bv[[a, b]] = c * (-fv[[a, b]] * tau).exp();
        }
        let mut bw = Array2::<Complex64>::zeros(shape);
        for (k, c) in &sw {
            let (a, b) = ((k[0] - lw[0]) as usize, (k[1] - lw[1]) as usize);
            bw[[a, b]] = c * (-fw[[a, b]] * tau).exp();
        }
        fft2(&mut bv, false);
        fft2(&mut bw, false);
        let mut prod = &bv * &bw;
        fft2(&mut prod, true);
        let scale = 1.0 / (shape.0 * shape.1) as f64;
        for ((a, b), c) in prod.indexed_iter() {
            acc[[a, b]] += c * (weight * scale * (-fo[[a, b]] * (t - tau)).exp());
        }
    }
    let mut coeffs = Array2::<Complex64>::zeros((n, n));
    for ((a, b), c) in acc.indexed_iter() {
        let k = [out_lo[0] + a as i64, out_lo[1] + b as i64];
        let (Some(i), Some(j)) = (grid.index_of(k[0]), grid.index_of(k[1])) else {
            if c.norm() != 0.0 {
                return Err(Error::RegionOutsideLattice(format!(
                    "sum mode {k:?} leaves the lattice"
                )));
            }
            continue;
        };
        let xi1 = xi_of(&grid, k)[0];
        coeffs[[i, j]] = c * Complex64::new(0.0, -0.5 * xi1);
    }
    Ok(BilinearQuadrature {
        field: FourierField::from_coeffs(grid, coeffs, false)?,
        nodes: nodes.len(),
    })
}

/// `D^2_0 S(t)(v0, w0) = 2 B(K v0, K w0)` by quadrature.
pub fn d2_flow_quadrature(cfg: &IllposedConfig, p: &PhysicalParams) -> Result<BilinearQuadrature> {
    let v = indicator_data(cfg, Band::A1)?;
    let w = indicator_data(cfg, Band::A2)?;
    let b = bilinear_b(&v, &w, cfg.t, p, cfg.quad_levels, cfg.quad_points)?;
    Ok(BilinearQuadrature {
        field: b.field.scale(2.0),
        nodes: b.nodes,
    })
}

/// `||D^2_0 S(t)(v0, w0)||_{H^s}` from the closed form.
pub fn inflation_norm(cfg: &IllposedConfig, p: &PhysicalParams) -> Result<f64> {
    Ok(sobolev_norm(&d2_flow_exact(cfg, p)?, cfg.s))
}

/// Relative `H^s` distance between the quadrature and closed-form paths.
pub fn path_agreement(cfg: &IllposedConfig, p: &PhysicalParams) -> Result<(f64, usize)> {
    let exact = d2_flow_exact(cfg, p)?;
    let quad = d2_flow_quadrature(cfg, p)?;
    let diff = sobolev_norm(&quad.field.sub(&exact)?, cfg.s);
    Ok((diff / sobolev_norm(&exact, cfg.s), quad.nodes))
}

/// Nonzero coefficients of `field` and their location relative to the
/// predicted window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportCheck {
    pub nonzero: usize,
    pub outside: usize,
    /// Sum of `|c|^2` over coefficients outside the window.
    pub outside_mass: f64,
    /// Inclusive window in lattice cells along either axis.
    pub window: (i64, i64),
}

impl SupportCheck {
    pub fn pass(&self) -> bool {
        self.outside == 0 && self.outside_mass == 0.0
    }
}

pub fn support_check(field: &FourierField, cfg: &IllposedConfig) -> Result<SupportCheck> {
    let window = cfg.support_window()?;
    let inside = |k: i64| k >= window.0 && k <= window.1;
    let mut check = SupportCheck {
        nonzero: 0,
        outside: 0,
        outside_mass: 0.0,
        window,
    };
    for (k, c) in support(field) {
        check.nonzero += 1;
        if !(inside(k[0]) && inside(k[1])) {
            check.outside += 1;
            check.outside_mass += c.norm_sqr();
        }
    }
    Ok(check)
}

/// Fits `log inflation_norm` against `log N` over `ns`.
///
/// Band centers that fail validation are skipped and listed in the summary;
/// fewer than three usable centers is a degenerate fit. PASS requires the
/// slope within [`SLOPE_TOLERANCE`] of `-2s - 4`.
pub fn inflation_slope(ns: &[f64], template: &IllposedConfig, p: &PhysicalParams) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        "illposed",
        &["N", "r", "s", "t", "inflation_norm", "model_value", "ratio"],
    );
    let sv = template.s.value();
    if sv >= -2.0 {
        return Err(Error::InvalidSobolev(format!("s < -2 required, got {sv}")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ratios = Vec::new();
    let mut skipped = Vec::new();
    for &nb in ns {
        let cfg = template.with_band(nb);
        if cfg.validate().is_err() {
            skipped.push(json_num(nb));
            continue;
        }
        let norm = inflation_norm(&cfg, p)?;
        let model = cfg.model_value();
        let ratio = norm / model;
        report.push_row(vec![
            nb.into(),
            cfg.r.into(),
            cfg.s.value().into(),
            cfg.t.into(),
            norm.into(),
            model.into(),
            ratio.into(),
        ]);
        xs.push(nb);
        ys.push(norm);
        ratios.push(ratio);
    }
    if xs.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 valid band centers, got {}",
            xs.len()
        )));
    }
    let fit = fit_loglog(&xs, &ys)?;
    let expected = -2.0 * template.s.value() - 4.0;
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    report.pass = (fit.slope - expected).abs() <= SLOPE_TOLERANCE;
    report.set_summary("slope", json_num(fit.slope));
    report.set_summary("intercept", json_num(fit.intercept));
    report.set_summary("residual", json_num(fit.residual));
    report.set_summary("expected_slope", json_num(expected));
    report.set_summary("ratio_spread", json_num(spread));
    report.set_summary("skipped_N", serde_json::Value::Array(skipped));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> IllposedConfig {
        IllposedConfig {
            n_band: 8.0,
            n: 288,
            ..IllposedConfig::default()
        }
    }

    #[test]
    fn validation_rules() {
        assert!(cfg().validate().is_ok());
        let bad = IllposedConfig {
            s: SobolevIndex::new(-1.0),
            ..cfg()
        };
        assert!(bad.validate().unwrap_err().to_string().contains("s < -2 required"));
        let bad = IllposedConfig { r: 0.5, ..cfg() };
        assert!(bad.validate().is_err());
        let bad = IllposedConfig { n_band: 8.1, ..cfg() };
        assert!(bad.validate().is_err());
        let bad = IllposedConfig { n_band: 32.0, ..cfg() };
        assert!(bad.validate().unwrap_err().to_string().contains("2N + 4r"));
    }

    #[test]
    fn indicator_has_sixteen_modes_per_band() {
        let c = cfg();
        let v = indicator_data(&c, Band::A1).unwrap();
        let w = indicator_data(&c, Band::A2).unwrap();
        assert_eq!(support(&v).len(), 16);
        assert_eq!(support(&w).len(), 16);
        assert_eq!(support(&v)[0].0, [-32, -32]);
        assert_eq!(support(&w)[15].0, [39, 39]);
        assert!(!v.is_real());
    }

    #[test]
    fn graded_nodes_integrate_exponentials() {
        let t = 0.05;
        let lam = 1e6;
        let nodes = graded_nodes(t, 36, 8);
        assert_eq!(nodes.len(), (2 * 36 + 2) * 8);
        let num: f64 = nodes.iter().map(|(x, w)| w * (-lam * x).exp()).sum();
        let exact = -(-lam * t).exp_m1() / lam;
        assert!(((num - exact) / exact).abs() < 1e-12);
        let total: f64 = nodes.iter().map(|(_, w)| w).sum();
        assert!((total - t).abs() < 1e-15);
    }
}
