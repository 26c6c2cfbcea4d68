//! Experiment orchestration and artifact emission.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde_json::{json, Value};
use thinfilm::asymptotics::{fit_rate, sweep, SweepConfig};
use thinfilm::evolve::{energy_check, evolve, picard_solve, smoothing_profile, PicardOptions, StepperConfig};
use thinfilm::illposed::{d2_flow_exact, inflation_slope, path_agreement, support_check};
use thinfilm::kernel::{check_kernel_sup_bound, high_freq_bound, kernel_difference_sup_between};
use thinfilm::random::{random_band_limited, rng_from_seed};
use thinfilm::report::json_num;
use thinfilm::trajectory::{write_checkpoint, write_physical_snapshots};
use thinfilm::{
    sobolev_norm, ArtifactMeta, Cell, ExperimentReport, FourierField, PhysicalParams, SobolevIndex, SpectralGrid,
    Trajectory,
};

use crate::config::{DataSpec, Experiment, RunConfig};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Name of the diagnostic written when a run aborts.
pub const ERROR_FILE: &str = "error.json";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Solver(#[from] thinfilm::Error),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub experiment: Experiment,
    pub pass: bool,
    pub artifacts: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> u8 {
        if self.pass {
            0
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub emit_fields: bool,
}

/// Writes artifacts into one directory, tagging each with the run metadata.
pub struct ArtifactWriter {
    dir: PathBuf,
    meta: ArtifactMeta,
    written: Vec<PathBuf>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, meta: ArtifactMeta) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            meta,
            written: Vec::new(),
        })
    }

    pub fn meta(&self) -> &ArtifactMeta {
        &self.meta
    }

    fn write_with<F>(&mut self, name: &str, f: F) -> Result<PathBuf, RunError>
    where
        F: FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>,
    {
        let path = self.dir.join(name);
        let io_err = |source| RunError::Io {
            path: path.clone(),
            source,
        };
        let file = fs::File::create(&path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(io_err)?;
        w.flush().map_err(io_err)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn csv(&mut self, name: &str, report: &ExperimentReport) -> Result<PathBuf, RunError> {
        let text = report.to_csv(Some(&self.meta));
        self.write_with(name, |w| w.write_all(text.as_bytes()))
    }

    /// Pretty JSON; objects get a `meta` entry.
    pub fn json(&mut self, name: &str, mut value: Value) -> Result<PathBuf, RunError> {
        if let Value::Object(map) = &mut value {
            map.insert(
                "meta".into(),
                serde_json::to_value(&self.meta).expect("meta serializes"),
            );
        }
        let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
        text.push('\n');
        self.write_with(name, |w| w.write_all(text.as_bytes()))
    }

    /// Fourier checkpoint and physical snapshots of `traj`.
    pub fn trajectory(&mut self, traj: &Trajectory) -> Result<(), RunError> {
        let mut fourier = Vec::new();
        write_checkpoint(traj, &mut fourier)?;
        self.write_with("checkpoint.bin", |w| w.write_all(&fourier))?;
        let mut physical = Vec::new();
        write_physical_snapshots(traj, &mut physical)?;
        self.write_with("fields.bin", |w| w.write_all(&physical))?;
        Ok(())
    }

    pub fn into_written(self) -> Vec<PathBuf> {
        self.written
    }
}

pub fn artifact_meta(cfg: &RunConfig) -> ArtifactMeta {
    ArtifactMeta {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        grid: format!("L={:e},n={}", cfg.grid.length, cfg.grid.n),
        code_version: CODE_VERSION.to_string(),
    }
}

/// Builds the initial field described by `data`.
pub fn initial_data(data: &DataSpec, grid: SpectralGrid, seed: u64) -> FourierField {
    match *data {
        DataSpec::Random {
            kmax,
            norm,
            s,
            include_mean,
        } => random_band_limited(
            grid,
            kmax.unwrap_or(grid.n() / 6),
            norm,
            SobolevIndex::new(s),
            include_mean,
            &mut rng_from_seed(seed),
        ),
        DataSpec::Rough { s } => FourierField::zeros(grid).map_modes(|xi, _| {
            let r2 = xi[0] * xi[0] + xi[1] * xi[1];
            (1.0 + r2).powf(-(s + 1.0) / 2.0).into()
        }),
        DataSpec::Mode { k1, k2, amplitude } => {
            let mut coeffs = FourierField::zeros(grid).into_coeffs();
            let i = grid.index_of(k1).expect("validated mode");
            let j = grid.index_of(k2).expect("validated mode");
            let mi = grid.index_of(-k1).expect("validated mode");
            let mj = grid.index_of(-k2).expect("validated mode");
            coeffs[[i, j]] += Complex64::new(0.0, -0.5 * amplitude);
            coeffs[[mi, mj]] += Complex64::new(0.0, 0.5 * amplitude);
            FourierField::from_coeffs(grid, coeffs, true).expect("shape matches grid")
        }
    }
}

fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64))
        .collect()
}

/// Runs the configured experiment and writes its artifacts to `out`.
pub fn run(cfg: &RunConfig, out: &Path, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let kind = cfg.experiment.unwrap_or(Experiment::Simulate);
    cfg.validate(kind)?;
    let mut w = ArtifactWriter::new(out, artifact_meta(cfg))?;
    let mut echoed = serde_json::to_value(cfg).expect("config serializes");
    if let Value::Object(map) = &mut echoed {
        map.remove("output_dir");
    }
    w.json("config.json", echoed)?;
    let pass = match kind {
        Experiment::Simulate => run_simulate(cfg, &mut w, opts)?,
        Experiment::KernelCheck => run_kernel_check(cfg, &mut w)?,
        Experiment::Illposed => run_illposed(cfg, &mut w)?,
        Experiment::Sweep => run_sweep(cfg, &mut w)?,
        Experiment::PicardValidate => run_picard(cfg, &mut w, opts)?,
    };
    Ok(RunOutcome {
        experiment: kind,
        pass,
        artifacts: w.into_written(),
    })
}

fn run_simulate(cfg: &RunConfig, w: &mut ArtifactWriter, opts: &RunOptions) -> Result<bool, RunError> {
    let grid = cfg.grid()?;
    let p = cfg.physical_params()?;
    let spec = &cfg.simulate;
    let u0 = initial_data(&spec.data, grid, cfg.seed);
    let (traj, log) = evolve(&u0, spec.horizon, &p, &cfg.stepper)?;
    let bound = high_freq_bound(&p, &grid, 1.0)?;
    let energy = energy_check(&log, &bound);
    w.csv("energy_log.csv", &log.to_report())?;
    w.csv("energy_check.csv", &energy)?;
    let drift = traj
        .states()
        .iter()
        .map(|u| (u.mean() - u0.mean()).norm())
        .fold(0.0, f64::max);
    let mut pass = energy.pass;
    let mut summary = energy.summary_json(None);
    let obj = summary.as_object_mut().expect("summary is an object");
    obj.insert("experiment".into(), json!("simulate"));
    obj.insert("T".into(), json_num(spec.horizon));
    obj.insert("steps".into(), json!(traj.len() - 1));
    obj.insert("mean_drift".into(), json_num(drift));
    obj.insert("energy_pass".into(), json!(energy.pass));
    obj.insert(
        "final_l2".into(),
        json_num(sobolev_norm(traj.final_state(), SobolevIndex::L2)),
    );
    if let Some(sm) = &spec.smoothing {
        let profile = smoothing_profile(&traj, SobolevIndex::new(sm.s), SobolevIndex::new(sm.sigma))?;
        w.csv("smoothing.csv", &profile)?;
        obj.insert("smoothing_pass".into(), json!(profile.pass));
        for (k, v) in &profile.summary {
            obj.insert(format!("smoothing_{k}"), v.clone());
        }
        pass &= profile.pass;
    }
    obj.insert("pass".into(), json!(pass));
    w.json("summary.json", summary)?;
    if opts.emit_fields {
        w.trajectory(&traj)?;
    }
    Ok(pass)
}

fn run_kernel_check(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<bool, RunError> {
    let grid = cfg.grid()?;
    let fine = grid.refined(2)?;
    let p = cfg.physical_params()?;
    let spec = &cfg.kernel_check;
    let times = logspace(spec.t_min, spec.t_max, spec.t_count);
    let bound = high_freq_bound(&p, &grid, spec.margin)?;
    let bound_fine = high_freq_bound(&p, &fine, spec.margin)?;

    let mut table = ExperimentReport::new("kernel-check", &["n", "t", "lambda", "lhs", "weighted_ratio", "pass"]);
    let mut per_lambda = Vec::new();
    let mut pass = bound.violations == 0 && bound_fine.violations == 0;
    for &lambda in &spec.lambdas {
        let mut c = [0.0; 2];
        for (slot, (g, b)) in [(grid, &bound), (fine, &bound_fine)].into_iter().enumerate() {
            let r = check_kernel_sup_bound(&p, &g, lambda, &times, b)?;
            pass &= r.pass;
            c[slot] = r.summary["c_measured"].as_f64().unwrap_or(f64::NAN);
            for row in r.rows {
                let mut full = vec![Cell::from(g.n())];
                full.extend(row);
                table.push_row(full);
            }
        }
        let change = (c[1] - c[0]).abs() / c[0];
        let ok = change <= spec.refine_tolerance;
        pass &= ok;
        per_lambda.push(json!({
            "lambda": json_num(lambda),
            "c_measured": json_num(c[0]),
            "c_measured_refined": json_num(c[1]),
            "relative_change": json_num(change),
            "refinement_pass": ok,
        }));
    }
    table.pass = pass;
    w.csv("kernel_check.csv", &table)?;

    let mut summary = json!({
        "experiment": "kernel-check",
        "M": json_num(bound.m),
        "eta": json_num(bound.eta),
        "c_low": json_num(bound.c_low),
        "violations": bound.violations,
        "violations_refined": bound_fine.violations,
        "checked": bound.checked,
        "refine_tolerance": json_num(spec.refine_tolerance),
        "lambdas": per_lambda,
    });
    if let Some(d) = &spec.difference {
        let mut diff = ExperimentReport::new("kernel-difference", &["delta", "power", "t", "sup_diff", "normalized"]);
        let ts: Vec<f64> = (1..=d.t_count).map(|k| d.t_max * k as f64 / d.t_count as f64).collect();
        let mut worst: f64 = 1.0;
        for &j in &d.powers {
            for &t in &ts {
                let mut lo = f64::INFINITY;
                let mut hi: f64 = 0.0;
                for &delta in &d.deltas {
                    let a = p.offset(delta, d.direction)?;
                    let sup = kernel_difference_sup_between(&a, &p, &grid, t, j);
                    let normalized = sup / delta;
                    lo = lo.min(normalized);
                    hi = hi.max(normalized);
                    diff.push_row(vec![
                        delta.into(),
                        (j as i64).into(),
                        t.into(),
                        sup.into(),
                        normalized.into(),
                    ]);
                }
                worst = worst.max(hi / lo);
            }
        }
        let ok = worst <= d.spread_max;
        diff.pass = ok;
        pass &= ok;
        w.csv("kernel_difference.csv", &diff)?;
        let obj = summary.as_object_mut().expect("object");
        obj.insert("difference_spread".into(), json_num(worst));
        obj.insert("difference_spread_max".into(), json_num(d.spread_max));
        obj.insert("difference_pass".into(), json!(ok));
    }
    summary
        .as_object_mut()
        .expect("object")
        .insert("pass".into(), json!(pass));
    w.json("summary.json", summary)?;
    Ok(pass)
}

fn run_illposed(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<bool, RunError> {
    let p = cfg.physical_params()?;
    let spec = &cfg.illposed;
    let template = spec.config(spec.band_centers[0])?;
    let slope = inflation_slope(&spec.band_centers, &template, &p)?;
    w.csv("illposed.csv", &slope)?;

    let mut checks = ExperimentReport::new(
        "illposed-checks",
        &[
            "N",
            "r",
            "s",
            "t",
            "agreement_rel",
            "quad_nodes",
            "support_nonzero",
            "support_outside",
            "outside_mass",
        ],
    );
    let mut agree_ok = true;
    let mut support_ok = true;
    for &nb in &spec.band_centers {
        let c = spec.config(nb)?;
        let (rel, nodes) = path_agreement(&c, &p)?;
        let sc = support_check(&d2_flow_exact(&c, &p)?, &c)?;
        agree_ok &= rel <= spec.agreement_tol;
        support_ok &= sc.pass();
        checks.push_row(vec![
            nb.into(),
            c.r.into(),
            c.s.value().into(),
            c.t.into(),
            rel.into(),
            nodes.into(),
            sc.nonzero.into(),
            sc.outside.into(),
            sc.outside_mass.into(),
        ]);
    }
    let pass = slope.pass && agree_ok && support_ok;
    checks.pass = agree_ok && support_ok;
    w.csv("illposed_checks.csv", &checks)?;
    let mut summary = slope.summary_json(None);
    let obj = summary.as_object_mut().expect("object");
    obj.insert("slope_pass".into(), json!(slope.pass));
    obj.insert("agreement_tol".into(), json_num(spec.agreement_tol));
    obj.insert("agreement_pass".into(), json!(agree_ok));
    obj.insert("support_pass".into(), json!(support_ok));
    obj.insert("pass".into(), json!(pass));
    w.json("summary.json", summary)?;
    Ok(pass)
}

fn run_sweep(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<bool, RunError> {
    let spec = &cfg.sweep;
    let sc = SweepConfig {
        direction: spec.direction,
        ..SweepConfig::seeded(
            cfg.grid()?,
            SobolevIndex::new(spec.s),
            spec.horizon,
            spec.gamma,
            spec.deltas.clone(),
            cfg.physical_params()?,
            cfg.stepper,
            cfg.seed,
        )
    };
    let report = sweep(&sc)?;
    let fit = fit_rate(&report)?;
    let pass = fit.pass && fit.single_constant;
    let mut table = report.clone();
    table.pass = pass;
    w.csv("sweep.csv", &table)?;
    let mut summary = serde_json::to_value(fit).expect("fit serializes");
    let obj = summary.as_object_mut().expect("object");
    obj.insert("experiment".into(), json!("sweep"));
    obj.insert("fit_pass".into(), json!(fit.pass));
    obj.insert("pass".into(), json!(pass));
    for (k, v) in &report.summary {
        obj.entry(k.clone()).or_insert_with(|| v.clone());
    }
    w.json("fit.json", summary)?;
    Ok(pass)
}

/// `c_measured` of the `lambda = 1` kernel sup check on `grid`.
pub fn measured_constant(p: &PhysicalParams, grid: &SpectralGrid) -> Result<f64, RunError> {
    let bound = high_freq_bound(p, grid, 1.0)?;
    let times = logspace(1e-3, 1.0, 13);
    let r = check_kernel_sup_bound(p, grid, 1.0, &times, &bound)?;
    Ok(r.summary["c_measured"].as_f64().unwrap_or(f64::NAN))
}

fn run_picard(cfg: &RunConfig, w: &mut ArtifactWriter, opts: &RunOptions) -> Result<bool, RunError> {
    let grid = cfg.grid()?;
    let p = cfg.physical_params()?;
    let spec = &cfg.picard;
    let u0 = initial_data(&spec.data, grid, cfg.seed);
    let constant = match spec.constant {
        Some(c) => c,
        None => measured_constant(&p, &grid)?,
    };
    let s = SobolevIndex::new(spec.s);
    let popts = PicardOptions {
        s,
        s1: spec.s1.map(SobolevIndex::new),
        constant,
        allow_beyond_existence: spec.allow_beyond_existence,
    };
    let sol = picard_solve(&u0, spec.horizon, &p, &cfg.stepper, &popts)?;
    let etd_cfg = StepperConfig {
        save_every: 1,
        ..cfg.stepper
    };
    let (etd, _) = evolve(&u0, spec.horizon, &p, &etd_cfg)?;

    let mut table = ExperimentReport::new("picard-validate", &["t", "picard_norm", "etd_norm", "difference"]);
    let mut worst: f64 = 0.0;
    for (t, u) in sol.trajectory.iter() {
        let Some(k) = etd.times().iter().position(|&te| (te - t).abs() <= 1e-12 * t.max(1.0)) else {
            continue;
        };
        let v = &etd.states()[k];
        let d = sobolev_norm(&u.sub(v)?, s);
        worst = worst.max(d);
        table.push_row(vec![
            t.into(),
            sobolev_norm(u, s).into(),
            sobolev_norm(v, s).into(),
            d.into(),
        ]);
    }
    let pass = worst <= spec.agreement_tol;
    table.pass = pass;
    w.csv("picard.csv", &table)?;
    let residuals: Vec<Value> = sol.residuals.iter().map(|&r| json_num(r)).collect();
    w.json(
        "summary.json",
        json!({
            "experiment": "picard-validate",
            "T": json_num(spec.horizon),
            "s": json_num(spec.s),
            "s1": spec.s1.map(json_num),
            "constant": json_num(constant),
            "existence_time": json_num(sol.existence_time),
            "data_norm": json_num(sobolev_norm(&u0, s)),
            "iterations": sol.iterations,
            "residuals": residuals,
            "max_difference": json_num(worst),
            "agreement_tol": json_num(spec.agreement_tol),
            "pass": pass,
        }),
    )?;
    if opts.emit_fields {
        w.trajectory(&sol.trajectory)?;
    }
    Ok(pass)
}

/// Writes `error.json` describing an aborted run. Failures to write it are
/// ignored.
pub fn write_diagnostic(out: &Path, cfg: Option<&RunConfig>, err: &dyn std::error::Error) {
    let mut chain = Vec::new();
    let mut cur: Option<&dyn std::error::Error> = Some(err);
    while let Some(e) = cur {
        chain.push(Value::String(e.to_string()));
        cur = e.source();
    }
    let mut doc = json!({
        "error": err.to_string(),
        "causes": chain,
    });
    if let Some(cfg) = cfg {
        let obj = doc.as_object_mut().expect("object");
        obj.insert("experiment".into(), json!(cfg.experiment));
        obj.insert(
            "meta".into(),
            serde_json::to_value(artifact_meta(cfg)).expect("meta serializes"),
        );
    }
    if fs::create_dir_all(out).is_ok() {
        let text = serde_json::to_string_pretty(&doc).expect("diagnostic serializes") + "\n";
        let _ = fs::write(out.join(ERROR_FILE), text);
    }
}
