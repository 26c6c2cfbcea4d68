//! Run configuration: JSON schema, defaults, `--override` handling and
//! validation.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thinfilm::asymptotics::default_direction;
use thinfilm::evolve::StepperConfig;
use thinfilm::illposed::IllposedConfig;
use thinfilm::{PhysicalParams, SobolevIndex, SpectralGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    KernelCheck,
    Illposed,
    Sweep,
    PicardValidate,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Experiment::Simulate => "simulate",
            Experiment::KernelCheck => "kernel-check",
            Experiment::Illposed => "illposed",
            Experiment::Sweep => "sweep",
            Experiment::PicardValidate => "picard-validate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid override `{0}`: expected key=value")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl From<thinfilm::Error> for ConfigError {
    fn from(e: thinfilm::Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub length: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            length: 2.0 * PI,
            n: 64,
        }
    }
}

/// Initial data recipes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// Seeded Gaussian coefficients on `max|k| <= kmax` (default `n/6`),
    /// rescaled to `H^s` norm `norm`.
    Random {
        #[serde(default)]
        kmax: Option<usize>,
        norm: f64,
        #[serde(default)]
        s: f64,
        #[serde(default)]
        include_mean: bool,
    },
    /// `c(xi) = (1 + |xi|^2)^{-(s+1)/2}` on every mode.
    Rough { s: f64 },
    /// `amplitude * sin(k . x)`.
    Mode { k1: i64, k2: i64, amplitude: f64 },
}

impl DataSpec {
    fn random(norm: f64, s: f64) -> Self {
        DataSpec::Random {
            kmax: None,
            norm,
            s,
            include_mean: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingSpec {
    pub s: f64,
    pub sigma: f64,
}

impl Default for SmoothingSpec {
    fn default() -> Self {
        Self { s: 0.0, sigma: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSpec {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub data: DataSpec,
    /// Adds a smoothing profile report when present.
    pub smoothing: Option<SmoothingSpec>,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        Self {
            horizon: 0.5,
            data: DataSpec::random(1.0, 0.0),
            smoothing: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DifferenceSpec {
    pub deltas: Vec<f64>,
    pub powers: Vec<u32>,
    pub t_max: f64,
    pub t_count: usize,
    pub direction: [f64; 3],
    /// Accepted max/min spread of the normalized differences.
    pub spread_max: f64,
}

impl Default for DifferenceSpec {
    fn default() -> Self {
        Self {
            deltas: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
            powers: vec![0, 1],
            t_max: 0.5,
            t_count: 10,
            direction: default_direction(),
            spread_max: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelCheckSpec {
    pub lambdas: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    pub margin: f64,
    /// Allowed relative change of the weighted maximum from `n` to `2n`.
    pub refine_tolerance: f64,
    pub difference: Option<DifferenceSpec>,
}

impl Default for KernelCheckSpec {
    fn default() -> Self {
        Self {
            lambdas: vec![0.0, 1.0, 2.0, 3.0, 4.0],
            t_min: 1e-3,
            t_max: 1.0,
            t_count: 25,
            margin: 1.0,
            refine_tolerance: 0.05,
            difference: Some(DifferenceSpec::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IllposedSpec {
    #[serde(rename = "Ns")]
    pub band_centers: Vec<f64>,
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub length: f64,
    pub n: usize,
    pub quad_levels: usize,
    pub quad_points: usize,
    /// Relative `H^s` tolerance between the quadrature and closed-form paths.
    pub agreement_tol: f64,
}

impl Default for IllposedSpec {
    fn default() -> Self {
        let c = IllposedConfig::default();
        Self {
            band_centers: vec![8.0, 16.0, 32.0],
            r: c.r,
            s: c.s.value(),
            t: c.t,
            length: c.length,
            n: c.n,
            quad_levels: c.quad_levels,
            quad_points: c.quad_points,
            agreement_tol: 1e-6,
        }
    }
}

impl IllposedSpec {
    /// Template configuration at band center `n_band`.
    pub fn config(&self, n_band: f64) -> Result<IllposedConfig, ConfigError> {
        Ok(IllposedConfig {
            n_band,
            r: self.r,
            s: SobolevIndex::try_new(self.s)?,
            t: self.t,
            length: self.length,
            n: self.n,
            quad_levels: self.quad_levels,
            quad_points: self.quad_points,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub s: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub gamma: f64,
    pub deltas: Vec<f64>,
    pub direction: [f64; 3],
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            s: 2.0,
            horizon: 0.5,
            gamma: 0.5,
            deltas: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
            direction: default_direction(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardSpec {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub s: f64,
    pub s1: Option<f64>,
    /// Constant for the existence time; measured from the `lambda = 1`
    /// kernel check when absent.
    pub constant: Option<f64>,
    pub allow_beyond_existence: bool,
    pub data: DataSpec,
    /// Accepted `H^s` distance between the Picard and stepper solutions.
    pub agreement_tol: f64,
}

impl Default for PicardSpec {
    fn default() -> Self {
        Self {
            horizon: 1.0 / 64.0,
            s: 2.0,
            s1: Some(-1.0),
            constant: None,
            allow_beyond_existence: false,
            data: DataSpec::random(0.1, 2.0),
            agreement_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Must match the subcommand when given.
    pub experiment: Option<Experiment>,
    pub grid: GridSpec,
    pub params: PhysicalParams,
    /// Region bound `kappa*` for parameter validation; `null` disables it.
    pub kappa_star: Option<f64>,
    pub stepper: StepperConfig,
    pub seed: u64,
    /// Not part of the config hash.
    pub output_dir: Option<PathBuf>,
    pub simulate: SimulateSpec,
    pub kernel_check: KernelCheckSpec,
    pub illposed: IllposedSpec,
    pub sweep: SweepSpec,
    pub picard: PicardSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            grid: GridSpec::default(),
            params: PhysicalParams::vertical(),
            kappa_star: Some(1.0),
            stepper: StepperConfig::with_dt(1.0 / 512.0),
            seed: 0,
            output_dir: None,
            simulate: SimulateSpec::default(),
            kernel_check: KernelCheckSpec::default(),
            illposed: IllposedSpec::default(),
            sweep: SweepSpec::default(),
            picard: PicardSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn grid(&self) -> Result<SpectralGrid, ConfigError> {
        Ok(SpectralGrid::new(self.grid.length, self.grid.n)?)
    }

    /// Physical parameters with the region bound attached.
    pub fn physical_params(&self) -> Result<PhysicalParams, ConfigError> {
        let p = PhysicalParams {
            kappa_star: None,
            ..self.params
        };
        Ok(match self.kappa_star.or(self.params.kappa_star) {
            Some(ks) => p.in_region(ks)?,
            None => {
                p.validate()?;
                p
            }
        })
    }

    /// SHA-256 of the canonical JSON form with `output_dir` removed.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Checks the shared blocks and the block of `kind`.
    pub fn validate(&self, kind: Experiment) -> Result<(), ConfigError> {
        let grid = self.grid()?;
        self.physical_params()?;
        self.stepper.validate()?;
        let positive = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!("{name} > 0 required, got {v}")))
            }
        };
        match kind {
            Experiment::Simulate => {
                positive(self.simulate.horizon, "simulate.T")?;
                validate_data(&self.simulate.data, &grid)?;
                if let Some(sm) = &self.simulate.smoothing {
                    if sm.sigma <= sm.s {
                        return Err(ConfigError::Invalid(format!(
                            "sigma > s required, got sigma={} s={}",
                            sm.sigma, sm.s
                        )));
                    }
                }
            }
            Experiment::KernelCheck => {
                let k = &self.kernel_check;
                if k.lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                    return Err(ConfigError::Invalid("lambda >= 0 required".into()));
                }
                positive(k.t_min, "kernel_check.t_min")?;
                positive(k.margin, "kernel_check.margin")?;
                if k.t_max.partial_cmp(&k.t_min) != Some(std::cmp::Ordering::Greater) || k.t_count < 2 {
                    return Err(ConfigError::Invalid(
                        "kernel_check needs t_max > t_min and t_count >= 2".into(),
                    ));
                }
                if let Some(d) = &k.difference {
                    positive(d.t_max, "kernel_check.difference.t_max")?;
                    if d.deltas.iter().any(|v| !(v.is_finite() && *v > 0.0)) || d.t_count == 0 {
                        return Err(ConfigError::Invalid(
                            "kernel_check.difference needs positive deltas and t_count >= 1".into(),
                        ));
                    }
                    let p = self.physical_params()?;
                    for &delta in &d.deltas {
                        p.offset(delta, d.direction)?;
                    }
                }
            }
            Experiment::Illposed => {
                let spec = &self.illposed;
                if spec.band_centers.len() < 3 {
                    return Err(ConfigError::Invalid("illposed needs at least 3 values in Ns".into()));
                }
                for &nb in &spec.band_centers {
                    spec.config(nb)?.validate()?;
                }
                positive(spec.agreement_tol, "illposed.agreement_tol")?;
            }
            Experiment::Sweep => {
                let spec = &self.sweep;
                if spec.s <= 1.0 {
                    return Err(ConfigError::Invalid(format!("s > 1 required, got {}", spec.s)));
                }
                positive(spec.horizon, "sweep.T")?;
                positive(spec.gamma, "sweep.gamma")?;
                let p = self.physical_params()?;
                for &delta in &spec.deltas {
                    p.offset(delta, spec.direction)?;
                }
            }
            Experiment::PicardValidate => {
                let spec = &self.picard;
                positive(spec.horizon, "picard.T")?;
                if spec.s <= -2.0 {
                    return Err(ConfigError::Invalid(format!("s > -2 required, got {}", spec.s)));
                }
                positive(spec.agreement_tol, "picard.agreement_tol")?;
                if let Some(c) = spec.constant {
                    positive(c, "picard.constant")?;
                }
                validate_data(&spec.data, &grid)?;
            }
        }
        Ok(())
    }
}

fn validate_data(data: &DataSpec, grid: &SpectralGrid) -> Result<(), ConfigError> {
    match data {
        DataSpec::Random { kmax, norm, s, .. } => {
            if !(norm.is_finite() && *norm >= 0.0) || !s.is_finite() {
                return Err(ConfigError::Invalid(
                    "random data needs a finite norm >= 0 and s".into(),
                ));
            }
            if kmax.is_some_and(|k| k >= grid.n() / 2) {
                return Err(ConfigError::Invalid(format!("kmax < n/2 = {} required", grid.n() / 2)));
            }
        }
        DataSpec::Rough { s } => {
            if !s.is_finite() {
                return Err(ConfigError::Invalid("rough data needs a finite s".into()));
            }
        }
        DataSpec::Mode { k1, k2, amplitude } => {
            let half = (grid.n() / 2) as i64;
            if k1.abs() >= half || k2.abs() >= half || !amplitude.is_finite() {
                return Err(ConfigError::Invalid(format!(
                    "mode ({k1}, {k2}) must satisfy |k| < n/2 = {half}"
                )));
            }
        }
    }
    Ok(())
}

/// Sets `key` (a dot path) to `value`, parsed as JSON when possible and as
/// a string otherwise. Missing objects along the path are created.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| ConfigError::Override(assignment.to_string()))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !node.is_object() {
            *node = Value::Object(Default::default());
        }
        let map = node.as_object_mut().expect("object");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split yields at least one part")
}

/// Recursively overlays `top` onto `base`. A tagged object whose `kind`
/// differs from the base replaces it wholesale.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            let retagged = matches!((b.get("kind"), t.get("kind")), (Some(x), Some(y)) if x != y);
            if retagged {
                *b = t;
                return;
            }
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

/// Parses `text`, overlays it and the overrides on the defaults, and
/// validates the result for `kind`.
pub fn parse_config(text: &str, overrides: &[String], kind: Experiment) -> Result<RunConfig, ConfigError> {
    let mut user: Value = if text.trim().is_empty() {
        Value::Object(Default::default())
    } else {
        serde_json::from_str(text).map_err(|e| ConfigError::Schema {
            path: ".".into(),
            message: e.to_string(),
        })?
    };
    if !user.is_object() {
        return Err(ConfigError::Schema {
            path: ".".into(),
            message: "top level must be a JSON object".into(),
        });
    }
    // echoed configs carry their provenance block
    user.as_object_mut().expect("checked above").remove("meta");
    let mut tweaks = Value::Object(Default::default());
    for o in overrides {
        apply_override(&mut tweaks, o)?;
    }
    let mut doc = serde_json::to_value(RunConfig::default()).expect("defaults serialize");
    merge(&mut doc, user);
    merge(&mut doc, tweaks);
    let mut cfg: RunConfig = serde_path_to_error::deserialize(doc).map_err(|e| ConfigError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    match cfg.experiment {
        Some(e) if e != kind => {
            return Err(ConfigError::Invalid(format!(
                "config is for experiment `{e}` but `{kind}` was requested"
            )))
        }
        _ => cfg.experiment = Some(kind),
    }
    cfg.validate(kind)?;
    Ok(cfg)
}
