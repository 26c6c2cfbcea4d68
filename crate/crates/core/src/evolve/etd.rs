use ndarray::{Array2, Zip};
use num_complex::Complex64;

use super::{nonlinear_term, StepperConfig};
use crate::error::{Error, Result};
use crate::field::FourierField;
use crate::grid::SpectralGrid;
use crate::kernel::{high_freq_bound, symbol_f};
use crate::norms::lebesgue2_norm;
use crate::params::PhysicalParams;
use crate::phi::{phi1, phi2};
use crate::report::ExperimentReport;
use crate::trajectory::Trajectory;

/// Second-order exponential time differencing (Cox-Matthews ETD2RK) with
/// per-mode weights precomputed for one step size.
///
/// With `L = -f(xi)`:
/// `a = e^{L h} u + h phi1(L h) N(u)`,
/// `u+ = a + h phi2(L h) (N(a) - N(u))`.
#[derive(Debug, Clone)]
pub struct EtdStepper {
    grid: SpectralGrid,
    cfg: StepperConfig,
    dt: f64,
    decay: Array2<f64>,
    w1: Array2<f64>,
    w2: Array2<f64>,
}

impl EtdStepper {
    pub fn new(grid: SpectralGrid, p: &PhysicalParams, dt: f64, cfg: &StepperConfig) -> Result<Self> {
        if !(dt > 0.0 && dt <= 1.0) {
            return Err(Error::InvalidConfig(format!("0 < dt <= 1 required, got {dt}")));
        }
        let n = grid.n();
        let z = Array2::from_shape_fn((n, n), |(i, j)| -symbol_f(grid.xi(i, j), p) * dt);
        Ok(Self {
            grid,
            cfg: *cfg,
            dt,
            decay: z.mapv(f64::exp),
            w1: z.mapv(|z| dt * phi1(z)),
            w2: z.mapv(|z| dt * phi2(z)),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, u: &FourierField) -> FourierField {
        assert_eq!(*u.grid(), self.grid, "field on a different grid");
        let mut lin = u.coeffs() * &self.decay.mapv(|v| Complex64::new(v, 0.0));
        if self.cfg.linear_only {
            return FourierField::from_coeffs(self.grid, lin, u.is_real()).expect("shape");
        }
        let nu = nonlinear_term(u, &self.cfg);
        Zip::from(&mut lin)
            .and(nu.coeffs())
            .and(&self.w1)
            .for_each(|a, n, w| *a += n * *w);
        let a = FourierField::from_coeffs(self.grid, lin, u.is_real()).expect("shape");
        let na = nonlinear_term(&a, &self.cfg);
        let mut out = a.into_coeffs();
        Zip::from(&mut out)
            .and(na.coeffs())
            .and(nu.coeffs())
            .and(&self.w2)
            .for_each(|o, na, nu, w| *o += (na - nu) * *w);
        FourierField::from_coeffs(self.grid, out, u.is_real()).expect("shape")
    }
}

/// One ETD2RK step of size `dt` (`0 < dt <= 1`).
pub fn etd_step(u: &FourierField, dt: f64, p: &PhysicalParams, cfg: &StepperConfig) -> Result<FourierField> {
    Ok(EtdStepper::new(*u.grid(), p, dt, cfg)?.step(u))
}

/// Sampled `L^2` energy of a run with the Gronwall constant of its
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLog {
    pub times: Vec<f64>,
    pub l2sq: Vec<f64>,
    /// Finite-difference derivative of `l2sq` (central inside, one-sided at the ends).
    pub dl2sq_dt: Vec<f64>,
    pub c_low: f64,
    /// `exp(2 c_low t) l2sq(0) - l2sq(t)`.
    pub bound_margin: Vec<f64>,
}

impl EnergyLog {
    pub fn from_trajectory(traj: &Trajectory, c_low: f64) -> Self {
        let times = traj.times().to_vec();
        let l2sq: Vec<f64> = traj.states().iter().map(|u| lebesgue2_norm(u).powi(2)).collect();
        let k = times.len();
        let dl2sq_dt = (0..k)
            .map(|i| {
                if k < 2 {
                    0.0
                } else {
                    let (a, b) = (i.saturating_sub(1), (i + 1).min(k - 1));
                    (l2sq[b] - l2sq[a]) / (times[b] - times[a])
                }
            })
            .collect();
        let bound_margin = times
            .iter()
            .zip(&l2sq)
            .map(|(t, e)| (2.0 * c_low * t).exp() * l2sq[0] - e)
            .collect();
        Self {
            times,
            l2sq,
            dl2sq_dt,
            c_low,
            bound_margin,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Table with columns `t, l2sq, dl2sq_dt, bound_margin`.
    pub fn to_report(&self) -> ExperimentReport {
        let mut r = ExperimentReport::new("energy_log", &["t", "l2sq", "dl2sq_dt", "bound_margin"]);
        for i in 0..self.len() {
            r.push_row(vec![
                self.times[i].into(),
                self.l2sq[i].into(),
                self.dl2sq_dt[i].into(),
                self.bound_margin[i].into(),
            ]);
        }
        r.set_summary("c_low", crate::report::json_num(self.c_low));
        r
    }
}

/// Integrates to `t_end` with uniform steps `h = t_end / ceil(t_end / dt)`,
/// sampling every `save_every` steps and always at `t_end`.
///
/// Growth is allowed; the first non-finite state aborts with
/// [`Error::BlowUp`].
pub fn evolve(
    u0: &FourierField,
    t_end: f64,
    p: &PhysicalParams,
    cfg: &StepperConfig,
) -> Result<(Trajectory, EnergyLog)> {
    cfg.validate()?;
    p.validate()?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::InvalidConfig(format!("horizon T > 0 required, got {t_end}")));
    }
    let grid = *u0.grid();
    let steps = ((t_end / cfg.dt.min(1.0)) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let stepper = EtdStepper::new(grid, p, h, cfg)?;
    let mut traj = Trajectory::start(u0.clone(), *p);
    let mut u = u0.clone();
    for k in 1..=steps {
        u = stepper.step(&u);
        let t = if k == steps { t_end } else { k as f64 * h };
        if !u.is_finite() {
            return Err(Error::BlowUp { time: t });
        }
        if k % cfg.save_every == 0 || k == steps {
            traj.push(t, u.clone());
        }
    }
    let c_low = high_freq_bound(p, &grid, 1.0)?.c_low;
    let log = EnergyLog::from_trajectory(&traj, c_low);
    Ok((traj, log))
}
