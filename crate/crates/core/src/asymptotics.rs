//! Convergence of solutions as the parameters `a` approach the
//! vertical-plane limit `o`.
//!
//! For each `delta` the data `u0^a = u0^o + delta^gamma g` evolve under
//! `a = o + delta * direction` next to `u0^o` under `o`, and
//! `E(delta) = max_t ||u^a(t) - u^o(t)||_{H^s}` is compared with
//! `max(delta^gamma, delta)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolve::{evolve, StepperConfig};
use crate::field::FourierField;
use crate::fit::fit_loglog;
use crate::grid::SpectralGrid;
use crate::norms::{sobolev_norm, SobolevIndex};
use crate::params::PhysicalParams;
use crate::random::{random_band_limited, rng_from_seed};
use crate::report::{json_num, ExperimentReport};
use crate::trajectory::Trajectory;

/// Accepted shortfall of the fitted slope below `min(gamma, 1)`.
pub const RATE_SLACK: f64 = 0.1;
/// Accepted deviation from slope 1 once `gamma >= 2`.
pub const SATURATION_TOLERANCE: f64 = 0.2;
/// Largest max/min ratio of `E / model` for a single sweep constant.
pub const CONSTANT_SPREAD_MAX: f64 = 4.0;
/// Minimum decades spanned by the fitted `delta` values.
pub const MIN_DECADES: f64 = 1.5;

/// `(1, 1, 1) / sqrt(3)`.
pub fn default_direction() -> [f64; 3] {
    let c = 1.0 / 3f64.sqrt();
    [c, c, c]
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub s: SobolevIndex,
    pub horizon: f64,
    pub gamma: f64,
    pub deltas: Vec<f64>,
    pub direction: [f64; 3],
    /// Limit parameters `o`.
    pub base_params: PhysicalParams,
    /// `u0^o`.
    pub base_data: FourierField,
    /// Unit `H^s` perturbation shape `g` (or zero).
    pub perturbation: FourierField,
    pub stepper: StepperConfig,
}

impl SweepConfig {
    /// Seeded random base data and perturbation, each of unit `H^s` norm and
    /// confined to `max(|k1|, |k2|) <= n / 6`.
    #[allow(clippy::too_many_arguments)]
    pub fn seeded(
        grid: SpectralGrid,
        s: SobolevIndex,
        horizon: f64,
        gamma: f64,
        deltas: Vec<f64>,
        base_params: PhysicalParams,
        stepper: StepperConfig,
        seed: u64,
    ) -> Self {
        let mut rng = rng_from_seed(seed);
        let kmax = grid.n() / 6;
        let base_data = random_band_limited(grid, kmax, 1.0, s, false, &mut rng);
        let perturbation = random_band_limited(grid, kmax, 1.0, s, false, &mut rng);
        Self {
            s,
            horizon,
            gamma,
            deltas,
            direction: default_direction(),
            base_params,
            base_data,
            perturbation,
            stepper,
        }
    }

    pub fn params_at(&self, delta: f64) -> Result<PhysicalParams> {
        self.base_params.offset(delta, self.direction)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s.value() <= 1.0 {
            return Err(Error::InvalidSobolev(format!("s > 1 required, got {}", self.s)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidConfig(format!("T > 0 required, got {}", self.horizon)));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::InvalidConfig(format!("gamma > 0 required, got {}", self.gamma)));
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidConfig("deltas must be finite and >= 0".into()));
        }
        if self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidConfig("deltas must be strictly decreasing".into()));
        }
        let norm = self.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "direction must be a unit vector, |d|={norm}"
            )));
        }
        if self.direction[1] < 0.0 || self.direction[2] < 0.0 {
            return Err(Error::InvalidConfig(
                "direction must have kappa and alpha components >= 0".into(),
            ));
        }
        self.base_data.same_grid(&self.perturbation)?;
        let g = sobolev_norm(&self.perturbation, self.s);
        if !(g == 0.0 || (g - 1.0).abs() < 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "perturbation must have unit H^s norm (or vanish), got {g}"
            )));
        }
        self.stepper.validate()?;
        self.base_params.validate()?;
        for &d in &self.deltas {
            self.params_at(d)?;
        }
        Ok(())
    }
}

/// `u0^o + delta^gamma g`.
pub fn make_perturbed_data(cfg: &SweepConfig, delta: f64) -> Result<FourierField> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidConfig(format!("delta >= 0 required, got {delta}")));
    }
    cfg.base_data.add(&cfg.perturbation.scale(delta.powf(cfg.gamma)))
}

fn max_distance(a: &Trajectory, o: &Trajectory, s: SobolevIndex) -> Result<f64> {
    let diff = a.difference(o)?;
    Ok(diff.states().iter().map(|u| sobolev_norm(u, s)).fold(0.0, f64::max))
}

/// Runs every `delta` of the sweep concurrently against one shared
/// reference run. Columns: `delta, gamma, E, model, ratio`.
pub fn sweep(cfg: &SweepConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (reference, _) = evolve(&cfg.base_data, cfg.horizon, &cfg.base_params, &cfg.stepper)?;
    let errors: Vec<Result<f64>> = cfg
        .deltas
        .par_iter()
        .map(|&delta| {
            let run = || -> Result<f64> {
                let p = cfg.params_at(delta)?;
                let u0 = make_perturbed_data(cfg, delta)?;
                let (traj, _) = evolve(&u0, cfg.horizon, &p, &cfg.stepper)?;
                max_distance(&traj, &reference, cfg.s)
            };
            run().map_err(|e| Error::SweepFailed {
                delta,
                source: Box::new(e),
            })
        })
        .collect();
    let mut report = ExperimentReport::new("sweep", &["delta", "gamma", "E", "model", "ratio"]);
    for (&delta, e) in cfg.deltas.iter().zip(errors) {
        let e = e?;
        let model = delta.powf(cfg.gamma).max(delta);
        let ratio = if e == 0.0 { 0.0 } else { e / model };
        report.push_row(vec![
            delta.into(),
            cfg.gamma.into(),
            e.into(),
            model.into(),
            ratio.into(),
        ]);
    }
    report.set_summary("gamma", json_num(cfg.gamma));
    report.set_summary("s", json_num(cfg.s.value()));
    report.set_summary("T", json_num(cfg.horizon));
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub gamma: f64,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub pass: bool,
    /// Smallest `C` with `E <= C max(delta^gamma, delta)` across the sweep.
    #[serde(rename = "C_measured")]
    pub c_measured: f64,
    /// Max/min ratio of `E / model` across the sweep.
    pub ratio_spread: f64,
    /// Whether `ratio_spread <= CONSTANT_SPREAD_MAX`.
    pub single_constant: bool,
}

/// Fits `log E` against `log delta` over the rows with `delta, E > 0`.
///
/// Needs at least four such rows spanning [`MIN_DECADES`]. PASS iff the
/// slope is at least `min(gamma, 1) - 0.1` and, for `gamma >= 2`, within
/// `1 +- 0.2`.
pub fn fit_rate(report: &ExperimentReport) -> Result<RateFit> {
    let deltas = report.column("delta");
    let es = report.column("E");
    let ratios = report.column("ratio");
    let gamma = report
        .column("gamma")
        .first()
        .copied()
        .ok_or_else(|| Error::DegenerateFit("empty sweep".into()))?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut r = Vec::new();
    for i in 0..deltas.len() {
        if deltas[i] > 0.0 && es[i] > 0.0 {
            x.push(deltas[i]);
            y.push(es[i]);
            r.push(ratios[i]);
        }
    }
    if x.len() < 4 {
        return Err(Error::DegenerateFit(format!("need at least 4 points, got {}", x.len())));
    }
    let hi = x.iter().cloned().fold(0.0, f64::max);
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let decades = (hi / lo).log10();
    if decades < MIN_DECADES - 1e-12 {
        return Err(Error::DegenerateFit(format!(
            "deltas span {decades:.3} decades, need {MIN_DECADES}"
        )));
    }
    let fit = fit_loglog(&x, &y)?;
    let mut pass = fit.slope >= gamma.min(1.0) - RATE_SLACK;
    if gamma >= 2.0 {
        pass &= (fit.slope - 1.0).abs() <= SATURATION_TOLERANCE;
    }
    let c_measured = r.iter().cloned().fold(0.0, f64::max);
    let ratio_spread = c_measured / r.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(RateFit {
        gamma,
        slope: fit.slope,
        intercept: fit.intercept,
        residual: fit.residual,
        pass,
        c_measured,
        ratio_spread,
        single_constant: ratio_spread <= CONSTANT_SPREAD_MAX,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(gamma: f64) -> SweepConfig {
        let g = SpectralGrid::periodic_2pi(16).unwrap();
        SweepConfig::seeded(
            g,
            SobolevIndex::new(2.0),
            0.1,
            gamma,
            vec![0.1, 0.01],
            PhysicalParams::vertical().in_region(1.0).unwrap(),
            StepperConfig::with_dt(1.0 / 64.0),
            7,
        )
    }

    #[test]
    fn perturbed_data_distance_is_exact() {
        for (gamma, delta, expected) in [(0.5, 0.1, 10f64.powf(-0.5)), (1.0, 0.25, 0.25)] {
            let c = cfg(gamma);
            let u = make_perturbed_data(&c, delta).unwrap();
            let d = sobolev_norm(&u.sub(&c.base_data).unwrap(), c.s);
            assert!((d - expected).abs() < 1e-14, "{d}");
        }
        let c = cfg(2.0);
        assert_eq!(make_perturbed_data(&c, 0.0).unwrap(), c.base_data);
    }

    #[test]
    fn validation() {
        assert!(cfg(1.0).validate().is_ok());
        let mut c = cfg(1.0);
        c.s = SobolevIndex::new(1.0);
        assert!(c.validate().is_err());
        let mut c = cfg(1.0);
        c.deltas = vec![0.01, 0.1];
        assert!(c.validate().is_err());
        let mut c = cfg(1.0);
        c.deltas = vec![3.0];
        assert!(c.validate().unwrap_err().to_string().contains("region bound"));
        let mut c = cfg(1.0);
        c.direction = [0.0, -1.0, 0.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_delta_gives_zero_error() {
        let mut c = cfg(1.0);
        c.deltas = vec![0.1, 0.0];
        let r = sweep(&c).unwrap();
        assert_eq!(r.column("E")[1], 0.0);
        assert!(r.column("E")[0] > 0.0);
    }

    #[test]
    fn fit_needs_points_and_span() {
        let mut r = ExperimentReport::new("sweep", &["delta", "gamma", "E", "model", "ratio"]);
        for d in [0.1, 0.05, 0.03, 0.02] {
            r.push_row(vec![d.into(), 1.0.into(), d.into(), d.into(), 1.0.into()]);
        }
        assert!(fit_rate(&r).is_err());
        r.push_row(vec![1e-3.into(), 1.0.into(), 1e-3.into(), 1e-3.into(), 1.0.into()]);
        let f = fit_rate(&r).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!(f.pass && f.single_constant);
        assert_eq!(f.c_measured, 1.0);
    }
}
