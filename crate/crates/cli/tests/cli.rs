use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wvsteer(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wvsteer"));
    cmd.args(args).env_remove("WVSTEER_OUTPUT_DIR");
    if let Some(dir) = out_dir {
        cmd.env("WVSTEER_OUTPUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn criterion_json_report() {
    let v = stdout_json(&wvsteer(
        &[
            "criterion",
            "--theta",
            "1e-2",
            "--k",
            "1",
            "--gamma",
            "1e-4",
            "--format",
            "json",
        ],
        None,
    ));
    assert_eq!(v["scenario"], "criterion");
    let r = &v["result"];
    for i in 0..4 {
        assert!((r["v_quantum"][i].as_f64().unwrap() - 1.0).abs() < 1e-10);
    }
    assert!((r["v_classical"][2].as_f64().unwrap() - 0.5).abs() < 1e-3);
    assert_eq!(r["distinguishable_by_visibility"], true);
    assert_eq!(r["distinguishable_by_probability"], false);
    let keys: Vec<_> = r.as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys[0], "theta");
    assert!(keys.contains(&"amplification_factor".to_string()));
    assert_eq!(v["config"]["basis_prob"], 0.5);
}

#[test]
fn budget_reports_864() {
    let out = wvsteer(
        &["budget", "--p-herald", "2e-8", "--rate", "1e6", "--duration", "86400"],
        None,
    );
    let v = stdout_json(&out);
    assert_eq!(v["result"]["heralds"].as_f64(), Some(864.0));
    assert_eq!(v["result"]["raw_heralds"].as_f64(), Some(1728.0));
}

#[test]
fn sweep_csv_has_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = wvsteer(
        &[
            "sweep",
            "--theta",
            "1e-4:1e-2:log10",
            "--k",
            "0.5,1,2",
            "--out",
            path.to_str().unwrap(),
        ],
        None,
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 11 * 3);
    assert!(lines[0].starts_with("theta,k,heralding_probability,"));
    assert!(lines[0].ends_with("cfg_theta,cfg_k,cfg_gamma"));
    assert!(lines[1].starts_with("0.0001,0.5,"));
    assert!(lines[2].starts_with("0.0001,1,"));
    assert!(lines[4].starts_with("0.000158489319246111,0.5,"));
    assert!(!text.contains('\r'));
}

#[test]
fn empty_sweep_is_header_only() {
    let out = wvsteer(&["sweep", "--theta", "1e-4:1e-2:log10:0", "--format", "csv"], None);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1);
}

#[test]
fn sweep_svg_curve_approaches_one_half() {
    let out = wvsteer(&["sweep", "--theta", "1e-4:1e-1:log10:7", "--format", "svg"], None);
    assert!(out.status.success());
    let svg = String::from_utf8(out.stdout).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<polyline").count(), 1);
    assert!(svg.contains("<desc>sweep"));
    let v = stdout_json(&wvsteer(&["sweep", "--theta", "1e-4:1e-1:log10:7"], None));
    let rows = v["result"]["rows"].as_array().unwrap();
    assert!((rows[0]["visibility_gap"].as_f64().unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn check_mode_round_trip_and_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    assert!(wvsteer(
        &[
            "criterion",
            "--theta",
            "3e-3",
            "--k",
            "2",
            "--out",
            path.to_str().unwrap()
        ],
        None
    )
    .status
    .success());
    assert!(wvsteer(&["--check", path.to_str().unwrap()], None).status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    let x = v["result"]["visibility_gap"].as_f64().unwrap();
    v["result"]["visibility_gap"] = Value::from(f64::from_bits(x.to_bits() + 1));
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let out = wvsteer(&["--check", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("visibility_gap"));
}

#[test]
fn exit_codes() {
    let out = wvsteer(&["criterion", "--theta", "2"], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta"));
    let out = wvsteer(&["criterion", "--theta", "1e-2", "--kk", "1"], None);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("kk") && err.contains("valid keys"));
    let out = wvsteer(
        &["criterion", "--theta", "1e-2", "--out", "/nonexistent-dir/r.json"],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(wvsteer(&["warp"], None).status.code(), Some(1));
    assert_eq!(
        wvsteer(&["bmv", "--format", "svg", "--theta", "0.1"], None)
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        wvsteer(&["--check", "/nonexistent-dir/r.json"], None).status.code(),
        Some(2)
    );
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# criterion inputs\ntheta = 1e-2\nk = 3\ngamma = 1e-3 # coarse detector\n",
    )
    .unwrap();
    let v = stdout_json(&wvsteer(
        &["criterion", "--config", cfg.to_str().unwrap(), "--k", "2"],
        None,
    ));
    assert_eq!(v["config"]["k"], 2.0);
    assert_eq!(v["config"]["gamma"], 1e-3);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = wvsteer(&["resolution", "--format", "csv"], Some(dir.path()));
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("resolution.csv")).unwrap();
    assert!(text.starts_with("gamma,weak_value_ceiling,theta,k,shift,shift_exact,cfg_gamma"));
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn si_mode_derives_and_echoes_theta() {
    let v = stdout_json(&wvsteer(
        &[
            "bmv",
            "--mass1",
            "1e-14",
            "--mass2",
            "1e-14",
            "--separation",
            "2e-4",
            "--arm-length",
            "2.5e-4",
            "--tau",
            "2.5",
        ],
        None,
    ));
    assert!(v["result"]["theta"].as_f64().unwrap() > 0.0);
    assert!(v["config"]["newton_g"].is_number() && v["config"]["hbar"].is_number());
    assert_eq!(
        wvsteer(&["bmv", "--theta", "0.1", "--mass1", "1"], None).status.code(),
        Some(1)
    );
}

#[test]
fn montecarlo_is_deterministic_and_flags_empty_cells() {
    let args = ["montecarlo", "--theta", "1e-3", "--shots", "2000", "--seed", "5"];
    let a = wvsteer(&args, None);
    let b = wvsteer(&args, None);
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    assert!(v["result"]["estimate"]["visibilities"][2].is_null());
    let csv = wvsteer(&[&args[..], &["--format", "csv"]].concat(), None);
    assert!(String::from_utf8(csv.stdout).unwrap().contains("no data"));
}

#[test]
fn oscillator_scenario() {
    let v = stdout_json(&wvsteer(
        &["oscillator", "--g", "0.05", "--t", "3.141592653589793", "--nbar", "0.1"],
        None,
    ));
    let r = &v["result"];
    assert!((r["pure"]["visibility"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!(r["thermal"]["visibility"].as_f64().unwrap() < 1.0);
    assert!(r["pure"]["k_factor"].as_f64().unwrap() > 1.0);
    assert_eq!(
        wvsteer(&["oscillator", "--g", "0", "--t", "1"], None).status.code(),
        Some(1)
    );
}
