//! Time evolution of the mild solution: the dealiased nonlinearity, a
//! second-order exponential integrator, the Picard fixed-point
//! construction, and energy/smoothing diagnostics.

mod diagnostics;
mod etd;
mod nonlinear;
mod picard;
mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use diagnostics::{energy_check, smoothing_profile, ENERGY_RTOL, SMOOTHING_SPREAD_MAX};
pub use etd::{etd_step, evolve, EnergyLog, EtdStepper};
pub use nonlinear::{dealias_mask, nonlinear_term};
pub use picard::{local_existence_time, picard_solve, PicardOptions, PicardSolution};
pub use quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepperConfig {
    pub dt: f64,
    pub dealias_fraction: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub duhamel_nodes: usize,
    pub save_every: usize,
    /// Drops the nonlinearity, leaving the exact linear flow.
    pub linear_only: bool,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            dealias_fraction: 2.0 / 3.0,
            picard_tol: 1e-10,
            picard_max_iter: 50,
            duhamel_nodes: 4,
            save_every: 1,
            linear_only: false,
        }
    }
}

impl StepperConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt > 0 required, got {}", self.dt)));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "0 < dealias_fraction <= 1 required, got {}",
                self.dealias_fraction
            )));
        }
        if !(self.picard_tol.is_finite() && self.picard_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "picard_tol > 0 required, got {}",
                self.picard_tol
            )));
        }
        if self.picard_max_iter == 0 || self.duhamel_nodes == 0 || self.save_every == 0 {
            return Err(Error::InvalidConfig(
                "picard_max_iter, duhamel_nodes and save_every must be positive".into(),
            ));
        }
        Ok(())
    }
}
