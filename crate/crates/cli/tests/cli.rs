use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nosig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nosig"))
        .args(args)
        .output()
        .expect("spawn nosig")
}

fn asset(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("assets")
        .join(name)
        .display()
        .to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn tmp(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn audit_mach_zehnder_passes() {
    let d = tempfile::tempdir().unwrap();
    let out = tmp(&d, "a.json");
    let o = nosig(&[
        "audit",
        "--variant",
        "mach-zehnder",
        "--phi-sweep",
        "64",
        "--trials",
        "100000",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert_eq!(v["verdict"], "pass");
    assert!(v["max_deviation"].as_f64().unwrap() <= 1e-12);
    assert_eq!(v["rows"].as_array().unwrap().len(), 64);
}

#[test]
fn audit_default_shiekh_passes() {
    let d = tempfile::tempdir().unwrap();
    let out = tmp(&d, "a.json");
    let o = nosig(&["audit", "--variant", "shiekh-density", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&out)["rows"][0]["trials"], 100_000);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&nosig(&["audit"])), 1);
    assert_eq!(code(&nosig(&["audit", "--variant", "triangle"])), 1);
    assert_eq!(
        code(&nosig(&["audit", "--variant", "mach-zehnder", "--trials", "many"])),
        1
    );
    assert_eq!(
        code(&nosig(&["audit", "--variant", "mach-zehnder", "--trials", "0"])),
        1
    );
    assert_eq!(code(&nosig(&["frobnicate"])), 1);
    assert_eq!(code(&nosig(&[])), 1);
    assert_eq!(code(&nosig(&["--help"])), 0);
}

#[test]
fn validate_bundled_circuits() {
    let o = nosig(&["validate", "--circuit", &asset("shiekh.circuit.json")]);
    assert_eq!(code(&o), 0);

    let o = nosig(&[
        "validate",
        "--circuit",
        &asset("canceller.circuit.json"),
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 2);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let f = &v["failures"][0];
    assert_eq!(f["kind"], "hypothetical_canceller");
    assert!((f["deviation"].as_f64().unwrap() - 0.5).abs() <= 1e-12);

    let o = nosig(&["validate", "--circuit", &asset("attenuator-0.9.circuit.json")]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("partial attenuation"));
}

#[test]
fn validate_malformed_files_exit_one() {
    let d = tempfile::tempdir().unwrap();
    let cases = [
        ("garbage.json", "{not json"),
        ("kind.json", r#"[{"kind": "teleporter", "in": ["a"], "out": ["a"]}]"#),
        (
            "param.json",
            r#"[{"kind": "phase_shifter", "in": ["a"], "out": ["a"]}]"#,
        ),
        (
            "arity.json",
            r#"[{"kind": "beam_splitter", "in": ["a"], "out": ["b", "c"]}]"#,
        ),
        ("label.json", r#"[{"kind": "mirror", "in": [""], "out": [""]}]"#),
        (
            "wiring.json",
            r#"[{"kind": "mirror", "in": ["a"], "out": ["a"]},
                {"kind": "beam_splitter", "in": ["a", "b"], "out": ["a", "a"]}]"#,
        ),
    ];
    for (name, body) in cases {
        let p = tmp(&d, name);
        std::fs::write(&p, body).unwrap();
        let o = nosig(&["validate", "--circuit", p.to_str().unwrap()]);
        assert_eq!(code(&o), 1, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!String::from_utf8_lossy(&o.stderr).contains("panicked"));
    }
    assert_eq!(code(&nosig(&["validate", "--circuit", "/no/such/file.json"])), 1);
}

#[test]
fn density_csv_profile() {
    let d = tempfile::tempdir().unwrap();
    let out = tmp(&d, "d.csv");
    let o = nosig(&["density", "--verify", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,density_phi0,density_phipi"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4097);
    let centre = rows.iter().find(|r| r[0] == 0.0).expect("r = 0 sampled");
    assert!(centre[2] <= 1e-12);
    assert!(centre[1] > 0.1);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("P_in=") && stdout.contains("verify density_phi0"));
}

#[test]
fn density_echo_matches_audit_sender_row() {
    let d = tempfile::tempdir().unwrap();
    let csv = tmp(&d, "d.csv");
    let rep = tmp(&d, "a.json");
    let o = nosig(&["density", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let echo = String::from_utf8_lossy(&o.stdout).to_string();
    let o = nosig(&[
        "audit",
        "--variant",
        "shiekh-density",
        "--phi",
        "0,pi",
        "--trials",
        "1000",
        "--out",
        rep.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let v = json(&rep);
    let lines: Vec<&str> = echo.lines().filter(|l| l.starts_with("phi=")).collect();
    for (i, line) in lines.iter().enumerate() {
        let field = |k: &str| -> f64 {
            line.split_whitespace()
                .find_map(|t| t.strip_prefix(&format!("{k}=")))
                .unwrap()
                .parse()
                .unwrap()
        };
        let row = &v["rows"][i]["sender"];
        assert_eq!(field("sender_in"), row["in"].as_f64().unwrap());
        assert_eq!(field("sender_out"), row["out"].as_f64().unwrap());
    }
    assert_eq!(lines.len(), 2);
}

#[test]
fn density_extra_phase_and_stdout() {
    let o = nosig(&["density", "--phi", "pi", "--n-points", "1025"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("r,density_phi0,density_phipi,density_phi\n"));
    assert_eq!(text.lines().count(), 1026);
    for l in text.lines().skip(1) {
        let c: Vec<&str> = l.split(',').collect();
        assert_eq!(c[2], c[3]);
    }
    assert!(String::from_utf8_lossy(&o.stderr).contains("P_in="));
    assert_eq!(code(&nosig(&["density", "--phi", "east"])), 1);
    assert_eq!(code(&nosig(&["density", "--n-points", "8"])), 1);
}

#[test]
fn calibration_round_trips_into_density() {
    let d = tempfile::tempdir().unwrap();
    let cal = tmp(&d, "cal.json");
    let o = nosig(&["calibrate", "--out", cal.to_str().unwrap()]);
    // contrast target is not reachable with this geometry
    assert_eq!(code(&o), 2);
    let v = json(&cal);
    assert_eq!(v, json(Path::new(&asset("calibration.json"))));
    assert!(v["contrast"].as_f64().unwrap() < 0.9);

    let a = nosig(&["density", "--calibration", cal.to_str().unwrap()]);
    let b = nosig(&["density"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn calibrate_absurd_grid_fails() {
    let o = nosig(&["calibrate", "--n-points", "64", "--extent", "2"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("calibration failed"));
}

#[test]
fn config_file_with_flag_override() {
    let d = tempfile::tempdir().unwrap();
    let cfg = tmp(&d, "run.json");
    std::fs::write(
        &cfg,
        r#"{"variant": "mach-zehnder", "phis": [0, "pi"], "trials": 500, "seed": 3}"#,
    )
    .unwrap();
    let o = nosig(&["audit", "--config", cfg.to_str().unwrap(), "--trials", "700"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["rows"][0]["trials"], 700);
    assert_eq!(v["rows"][0]["seed"], 3);

    std::fs::write(&cfg, r#"{"varient": "mach-zehnder"}"#).unwrap();
    assert_eq!(code(&nosig(&["audit", "--config", cfg.to_str().unwrap()])), 1);
}

#[test]
fn audit_csv_output() {
    let o = nosig(&[
        "audit",
        "--variant",
        "mach-zehnder",
        "--phi",
        "0",
        "--trials",
        "100",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("phi,sender_H,sender_V,receiver_analytic,receiver_empirical,trials,seed\n"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        vec![
            "audit",
            "--variant",
            "shiekh-density",
            "--trials",
            "20000",
            "--seed",
            "11",
        ],
        vec![
            "audit",
            "--variant",
            "mach-zehnder",
            "--trials",
            "20000",
            "--seed",
            "11",
        ],
        vec!["density", "--phi", "0.7"],
        vec!["calibrate"],
    ] {
        let mut outputs = Vec::new();
        for k in 0..2 {
            let p = tmp(&d, &format!("run{k}"));
            let mut a = args.clone();
            a.extend(["--out", p.to_str().unwrap()]);
            nosig(&a);
            outputs.push(std::fs::read(&p).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "{args:?}");
    }
}
