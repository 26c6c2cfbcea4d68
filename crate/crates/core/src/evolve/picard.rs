use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rayon::prelude::*;

use super::quadrature::{gauss_legendre, lagrange_basis};
use super::{nonlinear_term, StepperConfig};
use crate::error::{Error, Result};
use crate::field::FourierField;
use crate::grid::SpectralGrid;
use crate::kernel::symbol_f;
use crate::norms::{sobolev_norm, SobolevIndex};
use crate::params::PhysicalParams;
use crate::trajectory::{et_norm, Trajectory};

/// Geometric grading levels of the sub-quadrature towards the kernel peak.
const GRADING_LEVELS: usize = 24;
const PANEL_POINTS: usize = 8;
/// Consecutive growing sweeps that count as non-contraction.
const DIVERGENCE_STREAK: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    /// Regularity of the `E_T` norm used for the existence time and the
    /// convergence test.
    pub s: SobolevIndex,
    /// Auxiliary index, required when `s > 0`.
    pub s1: Option<SobolevIndex>,
    /// Constant fed to [`local_existence_time`].
    pub constant: f64,
    /// Skips the `T <= T0` precondition.
    pub allow_beyond_existence: bool,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            s: SobolevIndex::L2,
            s1: None,
            constant: 1.0,
            allow_beyond_existence: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardSolution {
    /// Fixed point sampled on the time mesh.
    pub trajectory: Trajectory,
    pub iterations: usize,
    /// Relative `E_T` distance between successive iterates, one per sweep.
    pub residuals: Vec<f64>,
    pub existence_time: f64,
}

/// `T0 = min(1, (8 C ||u0||)^(-4 / (e + 2)))` with `e = s` for
/// `-2 < s <= 0` and `e = s1` for `s > 0`.
pub fn local_existence_time(u0_norm: f64, s: SobolevIndex, s1: Option<SobolevIndex>, constant: f64) -> Result<f64> {
    let sv = s.value();
    if sv <= -2.0 {
        return Err(Error::InvalidSobolev(format!("s > -2 required, got {sv}")));
    }
    let e = if sv > 0.0 {
        match s1 {
            Some(s1) if s1.value() > -2.0 && s1.value() <= 0.0 => s1.value(),
            Some(s1) => {
                return Err(Error::InvalidSobolev(format!(
                    "-2 < s1 <= 0 required, got {}",
                    s1.value()
                )))
            }
            None => return Err(Error::InvalidSobolev("s > 0 requires an auxiliary index s1".into())),
        }
    } else {
        sv
    };
    if !(u0_norm.is_finite() && u0_norm >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "data norm must be finite and >= 0, got {u0_norm}"
        )));
    }
    if !(constant.is_finite() && constant > 0.0) {
        return Err(Error::InvalidConfig(format!("constant C > 0 required, got {constant}")));
    }
    if u0_norm == 0.0 {
        return Ok(1.0);
    }
    Ok((8.0 * constant * u0_norm).powf(-4.0 / (e + 2.0)).min(1.0))
}

/// Per-mode exponential weights over one mesh interval of length `h`.
///
/// `targets[b][q][mode] = int_0^{c_b} exp(-f (c_b - r)) l_q(r) dr`, where
/// `c_0 < ... < c_{Q-1}` are the Gauss-Legendre offsets, `c_Q = h`, and
/// `l_q` is the Lagrange basis through the offsets. The integrals use a
/// composite Gauss-Legendre rule graded geometrically towards `r = c_b`.
struct IntervalWeights {
    offsets: Vec<f64>,
    h: f64,
    decay_offsets: Vec<Array2<f64>>,
    decay_h: Array2<f64>,
    targets: Vec<Vec<Array2<f64>>>,
}

impl IntervalWeights {
    fn new(grid: &SpectralGrid, p: &PhysicalParams, h: f64, q: usize) -> Self {
        let n = grid.n();
        let (x, _) = gauss_legendre(q);
        let offsets: Vec<f64> = x.iter().map(|x| 0.5 * h * (1.0 + x)).collect();
        let symbol = Array2::from_shape_fn((n, n), |(i, j)| symbol_f(grid.xi(i, j), p));
        let (gx, gw) = gauss_legendre(PANEL_POINTS);
        let mut ends: Vec<f64> = offsets.clone();
        ends.push(h);
        let targets = ends
            .iter()
            .map(|&b| {
                // panels [0, b/2], [b/2, 3b/4], ..., last one ending at b
                let mut edges = vec![0.0];
                for lvl in 1..=GRADING_LEVELS {
                    edges.push(b * (1.0 - 0.5f64.powi(lvl as i32)));
                }
                edges.push(b);
                let mut nodes = Vec::new();
                for w in edges.windows(2) {
                    let (a, c) = (w[0], w[1]);
                    for (xg, wg) in gx.iter().zip(&gw) {
                        nodes.push((0.5 * (a + c) + 0.5 * (c - a) * xg, 0.5 * (c - a) * wg));
                    }
                }
                (0..q)
                    .map(|src| {
                        let basis: Vec<(f64, f64)> = nodes
                            .iter()
                            .map(|&(r, w)| (b - r, w * lagrange_basis(&offsets, src, r)))
                            .collect();
                        symbol.mapv(|f| basis.iter().map(|(lag, w)| w * (-f * lag).exp()).sum())
                    })
                    .collect()
            })
            .collect();
        Self {
            decay_offsets: offsets.iter().map(|&c| symbol.mapv(|f| (-f * c).exp())).collect(),
            decay_h: symbol.mapv(|f| (-f * h).exp()),
            offsets,
            h,
            targets,
        }
    }
}

fn free_evolution(u0: &FourierField, symbol: &Array2<f64>, t: f64) -> Array2<Complex64> {
    let mut out = u0.coeffs().clone();
    Zip::from(&mut out).and(symbol).for_each(|c, f| *c *= (-f * t).exp());
    out
}

/// Picard iteration of the mild formulation on a uniform mesh of step
/// `h = T / ceil(T / dt)`, starting from the free evolution.
///
/// Each sweep evaluates the nonlinearity at `duhamel_nodes` Gauss-Legendre
/// nodes per interval, interpolates it in time, and integrates it against
/// the kernel with per-mode exponential weights. Sweeps stop once the
/// relative `E_T` distance between successive iterates drops below
/// `picard_tol`.
pub fn picard_solve(
    u0: &FourierField,
    horizon: f64,
    p: &PhysicalParams,
    cfg: &StepperConfig,
    opts: &PicardOptions,
) -> Result<PicardSolution> {
    cfg.validate()?;
    p.validate()?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidConfig(format!("horizon T > 0 required, got {horizon}")));
    }
    let existence_time = local_existence_time(sobolev_norm(u0, opts.s), opts.s, opts.s1, opts.constant)?;
    if horizon > existence_time * (1.0 + 1e-12) && !opts.allow_beyond_existence {
        return Err(Error::HorizonBeyondExistence {
            horizon,
            existence_time,
        });
    }
    let grid = *u0.grid();
    let n = grid.n();
    let real = u0.is_real();
    let intervals = ((horizon / cfg.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = horizon / intervals as f64;
    let q = cfg.duhamel_nodes;
    let weights = IntervalWeights::new(&grid, p, h, q);
    let symbol = Array2::from_shape_fn((n, n), |(i, j)| symbol_f(grid.xi(i, j), p));

    let mesh_times: Vec<f64> = (0..=intervals)
        .map(|j| if j == intervals { horizon } else { j as f64 * weights.h })
        .collect();
    let free_mesh: Vec<Array2<Complex64>> = mesh_times.iter().map(|&t| free_evolution(u0, &symbol, t)).collect();
    let free_nodes: Vec<Array2<Complex64>> = (0..intervals * q)
        .map(|k| free_evolution(u0, &symbol, mesh_times[k / q] + weights.offsets[k % q]))
        .collect();

    let mut nodes = free_nodes.clone();
    let mut mesh = free_mesh.clone();
    let mut residuals = Vec::new();
    let mut growing = 0;
    for iteration in 1..=cfg.picard_max_iter {
        let nonlin: Vec<Array2<Complex64>> = nodes
            .par_iter()
            .map(|c| {
                if cfg.linear_only {
                    Array2::zeros((n, n))
                } else {
                    let f = FourierField::from_coeffs(grid, c.clone(), real).expect("shape");
                    nonlinear_term(&f, cfg).into_coeffs()
                }
            })
            .collect();
        let mut new_nodes = Vec::with_capacity(nodes.len());
        let mut new_mesh = vec![free_mesh[0].clone()];
        let mut duhamel: Array2<Complex64> = Array2::zeros((n, n));
        for j in 0..intervals {
            let block = &nonlin[j * q..(j + 1) * q];
            for b in 0..=q {
                let decay = if b < q {
                    &weights.decay_offsets[b]
                } else {
                    &weights.decay_h
                };
                let mut d = &duhamel * &decay.mapv(|v| Complex64::new(v, 0.0));
                for (src, nq) in block.iter().enumerate() {
                    Zip::from(&mut d)
                        .and(nq)
                        .and(&weights.targets[b][src])
                        .for_each(|d, nq, w| *d += nq * *w);
                }
                if b < q {
                    new_nodes.push(&free_nodes[j * q + b] + &d);
                } else {
                    new_mesh.push(&free_mesh[j + 1] + &d);
                    duhamel = d;
                }
            }
        }
        if new_mesh
            .iter()
            .any(|c| c.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())))
        {
            return Err(Error::PicardDiverged {
                horizon,
                iterations: iteration,
            });
        }
        let to_traj = |states: &[Array2<Complex64>]| -> Result<Trajectory> {
            let fields = states
                .iter()
                .map(|c| FourierField::from_coeffs(grid, c.clone(), real))
                .collect::<Result<Vec<_>>>()?;
            Trajectory::new(mesh_times.clone(), fields, *p)
        };
        let new_traj = to_traj(&new_mesh)?;
        let diff: Vec<Array2<Complex64>> = new_mesh.iter().zip(&mesh).map(|(a, b)| a - b).collect();
        let diff_norm = et_norm(&to_traj(&diff)?, opts.s, opts.s1)?;
        let scale = et_norm(&new_traj, opts.s, opts.s1)?;
        let residual = if diff_norm == 0.0 { 0.0 } else { diff_norm / scale };
        if residuals.last().is_some_and(|last| residual > *last) {
            growing += 1;
        } else {
            growing = 0;
        }
        residuals.push(residual);
        nodes = new_nodes;
        mesh = new_mesh;
        if residual < cfg.picard_tol {
            return Ok(PicardSolution {
                trajectory: subsample(new_traj, cfg.save_every)?,
                iterations: iteration,
                residuals,
                existence_time,
            });
        }
        if growing >= DIVERGENCE_STREAK {
            return Err(Error::PicardDiverged {
                horizon,
                iterations: iteration,
            });
        }
    }
    Err(Error::PicardNotConverged {
        iterations: cfg.picard_max_iter,
        residual: *residuals.last().expect("at least one sweep"),
    })
}

fn subsample(traj: Trajectory, stride: usize) -> Result<Trajectory> {
    if stride == 1 {
        return Ok(traj);
    }
    let last = traj.len() - 1;
    let keep: Vec<usize> = (0..=last).filter(|k| k % stride == 0 || *k == last).collect();
    Trajectory::new(
        keep.iter().map(|&k| traj.times()[k]).collect(),
        keep.iter().map(|&k| traj.states()[k].clone()).collect(),
        *traj.params(),
    )
}
