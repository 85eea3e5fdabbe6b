use std::fs;
use std::process::Command;

fn acmv() -> Command {
    Command::new(env!("CARGO_BIN_EXE_acmv"))
}

const CONFIG: &str = r#"
scenario = "case1"
optimizer = "bgpo"
sample_sizes = [10]
repetitions = 2
master_seed = 42
"#;

#[test]
fn sweep_is_byte_identical_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, CONFIG).unwrap();
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = dir.path().join(name);
        let status = acmv().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
        assert!(status.success());
        outputs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert!(text.starts_with("scenario,optimizer,sample_size,lambda,repetition,seed,w1,w2,w3,energy,pmv,pts_abs,esr,g\n"));
    assert_eq!(text.lines().count(), 1 + 11 * 2);
}

#[test]
fn report_reads_sweep_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, CONFIG).unwrap();
    let csv = dir.path().join("r.csv");
    assert!(acmv().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(&csv).status().unwrap().success());
    let json = dir.path().join("r.json");
    let out = acmv().args(["report", "--results"]).arg(&csv).arg("--json").arg(&json).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[case1 / bgpo / samples 10] runs 22"));
    assert!(text.contains("annual saving at EEP mean ESR"));
    let parsed: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(parsed["sections"].as_array().unwrap().len(), 1);
}

#[test]
fn optimize_prints_a_feasible_record() {
    let out = acmv()
        .args(["optimize", "--optimizer", "afa", "--lambda", "1.0", "--samples", "10", "--seed", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for w in v["w"].as_array().unwrap() {
        let w = w.as_f64().unwrap();
        assert!((30.0..=50.0).contains(&w));
    }
    assert!(v["esr"].as_f64().unwrap() < 0.0);
}

#[test]
fn errors_are_categorized_with_nonzero_exit() {
    let out = acmv().args(["calibrate", "--scenario", "nowhere"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error[input]: unknown scenario"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "scenario = \"case1\"\noptimizer = \"afa\"\nsample_sizes = []\nmaster_seed = 1\n").unwrap();
    let out = acmv().args(["sweep", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error[input]"));
}
