//! Time-sampled solutions, the E_T trajectory norms, and the binary
//! checkpoint container.
//!
//! # Checkpoint layout
//!
//! All integers and floats are little-endian.
//!
//! | bytes | content |
//! |-------|---------|
//! | 8 | magic `TFTRAJ01` |
//! | 4 | `u32` length `H` of the header |
//! | H | UTF-8 JSON header: `kind` (`"fourier"` or `"physical"`), `length`, `n`, `params`, `count`, `real`, `value_type` |
//! | per record | `f64` time, then `n*n` values in row-major order |
//!
//! Fourier records store `complex128` values as `(re, im)` pairs indexed
//! `[k1][k2]` in FFT order (`k = i` for `i < n/2`, else `i - n`). Physical
//! records store `float64` samples indexed `[x1][x2]` at `x = j L / n`.

use std::io::{Read, Write};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FourierField;
use crate::grid::SpectralGrid;
use crate::norms::{lebesgue2_norm, sobolev_norm, SobolevIndex};
use crate::params::PhysicalParams;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<FourierField>,
    params: PhysicalParams,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<FourierField>, params: PhysicalParams) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::InvalidConfig(
                "trajectory needs matching, non-empty times and states".into(),
            ));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidConfig("trajectory must start at t = 0".into()));
        }
        if times
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidConfig(
                "trajectory times must be strictly increasing".into(),
            ));
        }
        let grid = *states[0].grid();
        if states.iter().any(|s| *s.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { times, states, params })
    }

    pub fn start(u0: FourierField, params: PhysicalParams) -> Self {
        Self {
            times: vec![0.0],
            states: vec![u0],
            params,
        }
    }

    /// # Panics
    /// If `t` does not exceed the last sample time.
    pub(crate) fn push(&mut self, t: f64, state: FourierField) {
        assert!(t > *self.times.last().expect("non-empty"));
        self.times.push(t);
        self.states.push(state);
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[FourierField] {
        &self.states
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.states[0].grid()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    pub fn final_state(&self) -> &FourierField {
        self.states.last().expect("non-empty")
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &FourierField)> {
        self.times.iter().copied().zip(self.states.iter())
    }

    /// Pointwise difference `self(t) - other(t)` on a shared time mesh.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::InvalidConfig("trajectories sampled on different times".into()));
        }
        let states = self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.times.clone(), states, self.params)
    }
}

/// Discrete E_T norm over the sample times.
///
/// For `-2 < s <= 0` (no `s1`):
/// `sup_t ||u||_{H^s} + sup_{t>0} t^{|s|/4} ||u||_{L^2}`.
/// For `s > 0` with `-2 < s1 <= 0`, the extra term
/// `sup_{t>0} t^{|s1|/4} ||u||_{H^{s-s1}}` is added and the `L^2` weight
/// uses `|s1|`.
pub fn et_norm(traj: &Trajectory, s: SobolevIndex, s1: Option<SobolevIndex>) -> Result<f64> {
    et_norm_from(traj, s, s1, 0.0)
}

/// [`et_norm`] restricted to samples with `t >= t_from`.
pub fn et_norm_from(traj: &Trajectory, s: SobolevIndex, s1: Option<SobolevIndex>, t_from: f64) -> Result<f64> {
    let sv = s.value();
    if sv <= -2.0 {
        return Err(Error::InvalidSobolev(format!("E_T norm requires s > -2, got {sv}")));
    }
    let weight_exp = match (sv > 0.0, s1) {
        (false, None) => sv.abs() / 4.0,
        (true, Some(s1)) => {
            let v = s1.value();
            if !(v > -2.0 && v <= 0.0) {
                return Err(Error::InvalidSobolev(format!(
                    "auxiliary index must satisfy -2 < s1 <= 0, got {v}"
                )));
            }
            v.abs() / 4.0
        }
        (false, Some(_)) => {
            return Err(Error::InvalidSobolev(
                "auxiliary index s1 only applies when s > 0".into(),
            ))
        }
        (true, None) => {
            return Err(Error::InvalidSobolev(
                "s > 0 requires an auxiliary index -2 < s1 <= 0".into(),
            ))
        }
    };
    let shifted = s1.map(|s1| SobolevIndex::new(sv - s1.value()));
    let mut sup_hs: f64 = 0.0;
    let mut sup_l2: f64 = 0.0;
    let mut sup_shift: f64 = 0.0;
    for (t, u) in traj.iter().filter(|(t, _)| *t >= t_from) {
        sup_hs = sup_hs.max(sobolev_norm(u, s));
        if t > 0.0 {
            let w = t.powf(weight_exp);
            sup_l2 = sup_l2.max(w * lebesgue2_norm(u));
            if let Some(sh) = shifted {
                sup_shift = sup_shift.max(w * sobolev_norm(u, sh));
            }
        }
    }
    Ok(sup_hs + sup_l2 + sup_shift)
}

const MAGIC: &[u8; 8] = b"TFTRAJ01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub kind: String,
    pub length: f64,
    pub n: usize,
    pub params: PhysicalParams,
    pub count: usize,
    pub real: bool,
    pub value_type: String,
}

fn write_header<W: Write>(w: &mut W, header: &CheckpointHeader) -> Result<()> {
    let json = serde_json::to_vec(header).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    Ok(())
}

fn read_header<R: Read>(r: &mut R) -> Result<CheckpointHeader> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json)?;
    serde_json::from_slice(&json).map_err(|e| Error::Format(e.to_string()))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Writes the Fourier coefficients of every sample.
pub fn write_checkpoint<W: Write>(traj: &Trajectory, w: &mut W) -> Result<()> {
    let grid = traj.grid();
    let header = CheckpointHeader {
        kind: "fourier".into(),
        length: grid.length(),
        n: grid.n(),
        params: *traj.params(),
        count: traj.len(),
        real: traj.states().iter().all(|s| s.is_real()),
        value_type: "complex128".into(),
    };
    write_header(w, &header)?;
    for (t, u) in traj.iter() {
        w.write_all(&t.to_le_bytes())?;
        for c in u.coeffs().iter() {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<Trajectory> {
    let header = read_header(r)?;
    if header.kind != "fourier" {
        return Err(Error::Format(format!(
            "expected fourier records, found {}",
            header.kind
        )));
    }
    let grid = SpectralGrid::new(header.length, header.n)?;
    let n = header.n;
    let mut times = Vec::with_capacity(header.count);
    let mut states = Vec::with_capacity(header.count);
    for _ in 0..header.count {
        times.push(read_f64(r)?);
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            let re = read_f64(r)?;
            let im = read_f64(r)?;
            data.push(Complex64::new(re, im));
        }
        let coeffs = Array2::from_shape_vec((n, n), data).map_err(|e| Error::Format(e.to_string()))?;
        states.push(FourierField::from_coeffs(grid, coeffs, header.real)?);
    }
    Trajectory::new(times, states, header.params)
}

/// Writes physical-space samples (real part) of every state.
pub fn write_physical_snapshots<W: Write>(traj: &Trajectory, w: &mut W) -> Result<()> {
    let grid = traj.grid();
    let header = CheckpointHeader {
        kind: "physical".into(),
        length: grid.length(),
        n: grid.n(),
        params: *traj.params(),
        count: traj.len(),
        real: true,
        value_type: "float64".into(),
    };
    write_header(w, &header)?;
    for (t, u) in traj.iter() {
        w.write_all(&t.to_le_bytes())?;
        for v in u.to_physical().iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Time-stamped physical snapshots.
pub type Snapshots = Vec<(f64, Array2<f64>)>;

pub fn read_physical_snapshots<R: Read>(r: &mut R) -> Result<(CheckpointHeader, Snapshots)> {
    let header = read_header(r)?;
    if header.kind != "physical" {
        return Err(Error::Format(format!(
            "expected physical records, found {}",
            header.kind
        )));
    }
    let n = header.n;
    let mut out = Vec::with_capacity(header.count);
    for _ in 0..header.count {
        let t = read_f64(r)?;
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            data.push(read_f64(r)?);
        }
        let arr = Array2::from_shape_vec((n, n), data).map_err(|e| Error::Format(e.to_string()))?;
        out.push((t, arr));
    }
    Ok((header, out))
}
