use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use thinfilm::trajectory::{read_checkpoint, read_physical_snapshots};

fn thinfilm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thinfilm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn kernel_check_passes_and_tags_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let o = thinfilm(&["kernel-check", "--seed", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut seen = 0;
    for entry in fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => {
                for key in ["config_hash", "seed=3", "grid", "code_version"] {
                    assert!(text.contains(&format!("# {key}")), "{path:?} lacks {key}");
                }
            }
            Some("json") => {
                let meta = &json(&path)["meta"];
                assert_eq!(meta["seed"], 3);
                assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
                assert!(meta["grid"].is_string() && meta["code_version"].is_string());
            }
            _ => panic!("unexpected artifact {path:?}"),
        }
        seen += 1;
    }
    assert_eq!(seen, 4);
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["violations"], 0);
    assert_eq!(summary["lambdas"].as_array().unwrap().len(), 5);
}

#[test]
fn illposed_slope_near_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = thinfilm(&["illposed", "--override", "illposed.s=-3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let slope = json(&dir.path().join("summary.json"))["slope"].as_f64().unwrap();
    assert!((slope - 2.0).abs() <= 0.3, "slope={slope}");
    let csv = fs::read_to_string(dir.path().join("illposed.csv")).unwrap();
    assert!(csv.contains("N,r,s,t,inflation_norm,model_value,ratio"));
}

#[test]
fn saturated_sweep_slope_near_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = thinfilm(
        &["sweep", "--override", "sweep.gamma=3", "--override", "grid.n=32"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fit = json(&dir.path().join("fit.json"));
    let slope = fit["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() <= 0.2, "slope={slope}");
    assert_eq!(fit["single_constant"], true);
    assert!(fit["C_measured"].as_f64().unwrap() > 0.0);
}

#[test]
fn failed_experiment_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = thinfilm(&["illposed", "--override", "illposed.agreement_tol=1e-30"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(json(&dir.path().join("summary.json"))["pass"], false);
}

#[test]
fn blow_up_exits_one_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let o = thinfilm(
        &[
            "simulate",
            "--override",
            "grid.n=32",
            "--override",
            "stepper.dt=0.5",
            "--override",
            "simulate.T=50",
            "--override",
            "simulate.data.norm=1e6",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let diag = json(&dir.path().join("error.json"));
    assert!(diag["error"].as_str().unwrap().contains("non-finite"), "{diag}");
    assert_eq!(diag["experiment"], "simulate");
}

#[test]
fn invalid_configs_exit_one_with_reason() {
    let dir = tempfile::tempdir().unwrap();
    let o = thinfilm(&["illposed", "--override", "illposed.s=-2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("s < -2 required"), "{}", stderr(&o));

    let o = thinfilm(&["simulate", "--override", "params.alpha=3"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("region bound"), "{}", stderr(&o));

    let o = thinfilm(&["sweep", "--override", "stepper.dt=fast"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("stepper.dt"), "{}", stderr(&o));

    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"experiment": "sweep"}"#).unwrap();
    let o = thinfilm(&["illposed", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sweep"), "{}", stderr(&o));

    let o = thinfilm(&["simulate", "--config", "/nonexistent/cfg.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn emitted_fields_are_readable() {
    let dir = tempfile::tempdir().unwrap();
    let o = thinfilm(
        &[
            "simulate",
            "--emit-fields",
            "--override",
            "grid.n=16",
            "--override",
            "simulate.T=0.01",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let traj = read_checkpoint(&mut fs::File::open(dir.path().join("checkpoint.bin")).unwrap()).unwrap();
    let (header, snaps) = read_physical_snapshots(&mut fs::File::open(dir.path().join("fields.bin")).unwrap()).unwrap();
    assert_eq!(header.n, 16);
    assert_eq!(snaps.len(), traj.len());
    assert!((traj.final_time() - 0.01).abs() < 1e-15);
    let phys = traj.final_state().to_physical();
    assert_eq!(snaps.last().unwrap().1, phys);
}

#[test]
fn config_file_round_trips_through_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"grid": {"length": 6.283185307179586, "n": 16},
            "params": {"R": 1, "kappa": 0, "alpha": 0},
            "simulate": {"T": 0.02}}"#,
    )
    .unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(
        thinfilm(&["simulate", "--config", cfg.to_str().unwrap()], &a)
            .status
            .code(),
        Some(0)
    );
    let echoed = a.join("config.json");
    assert_eq!(
        thinfilm(&["simulate", "--config", echoed.to_str().unwrap()], &b)
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        json(&a.join("config.json"))["meta"]["config_hash"],
        json(&b.join("config.json"))["meta"]["config_hash"]
    );
    assert_eq!(
        fs::read(a.join("energy_log.csv")).unwrap(),
        fs::read(b.join("energy_log.csv")).unwrap()
    );
    assert_eq!(json(&a.join("config.json"))["stepper"]["dealias_fraction"], 2.0 / 3.0);
}

#[test]
fn seed_changes_payload_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let args = |seed: &'static str| {
        [
            "simulate",
            "--seed",
            seed,
            "--override",
            "grid.n=16",
            "--override",
            "simulate.T=0.02",
        ]
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(thinfilm(&args("1"), &a).status.code(), Some(0));
    assert_eq!(thinfilm(&args("2"), &b).status.code(), Some(0));
    let ha = &json(&a.join("summary.json"))["meta"]["config_hash"];
    let hb = &json(&b.join("summary.json"))["meta"]["config_hash"];
    assert_ne!(ha, hb);
    assert_ne!(
        fs::read(a.join("energy_log.csv")).unwrap(),
        fs::read(b.join("energy_log.csv")).unwrap()
    );
}

#[test]
fn picard_validate_reports_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let o = thinfilm(&["picard-validate", "--override", "grid.n=32"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = json(&dir.path().join("summary.json"));
    assert!(s["max_difference"].as_f64().unwrap() <= 1e-5);
    assert!(s["existence_time"].as_f64().unwrap() >= 1.0 / 64.0);
    assert!(s["iterations"].as_u64().unwrap() >= 1);
}
