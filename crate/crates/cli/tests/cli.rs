use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gluelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gluelab")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

const IDENTITY: &str = r#"
name = "identity"
homeo = { family = "identity" }
[experiment]
kind = "distance"
pairs = 200
max_sigma_gap = 1e-6
"#;

#[test]
fn identity_distances_match_sigma() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.toml", IDENTITY);
    let out = tmp.path().join("out");
    let o = gluelab(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(out.join("distances.csv")).unwrap();
    let mut n = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        let sigma: f64 = rec[3].parse().unwrap();
        let d: f64 = rec[5].parse().unwrap();
        assert!((sigma - d).abs() < 1e-6);
        n += 1;
    }
    assert_eq!(n, 200);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["wall_seconds"].as_f64().is_some());
}

#[test]
fn identical_configs_give_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "s.toml",
        r#"
name = "power"
seed = 9
homeo = { family = "power", alpha = 2.0, beta = 2.0 }
[experiment]
kind = "distance"
pairs = 40
oracle_resolution = 8
"#,
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(gluelab(&["run", &cfg, "--out", d.to_str().unwrap()]).status.code(), Some(0));
    }
    for f in ["distances.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.toml", IDENTITY);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(gluelab(&["run", &cfg, "--out", a.to_str().unwrap(), "--threads", "1"]).status.code(), Some(0));
    assert_eq!(gluelab(&["run", &cfg, "--out", b.to_str().unwrap(), "--threads", "3"]).status.code(), Some(0));
    assert_eq!(fs::read(a.join("distances.csv")).unwrap(), fs::read(b.join("distances.csv")).unwrap());
}

#[test]
fn unknown_field_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.toml", &IDENTITY.replace("pairs = 200", "pairs = 200\npiars = 3"));
    let o = gluelab(&["run", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("piars"));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn out_of_range_knob_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.toml", &IDENTITY.replace("pairs = 200", "pairs = 0"));
    let o = gluelab(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("experiment.pairs"));
}

#[test]
fn invalid_homeo_parameters_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.toml", &IDENTITY.replace(r#"{ family = "identity" }"#, r#"{ family = "power", alpha = -1.0, beta = 2.0 }"#));
    assert_eq!(gluelab(&["run", &cfg]).status.code(), Some(1));
}

#[test]
fn cantor_capacity_writes_a_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
name = "cantor"
[experiment]
kind = "example-6-2"
fraction = 0.5
levels = [3, 4]
n = 48
positivity_threshold = 0.02
"#;
    let cfg = write(tmp.path(), "s.toml", text);
    let out = tmp.path().join("o");
    assert_eq!(gluelab(&["run", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let verdict = fs::read_to_string(out.join("verdict.txt")).unwrap();
    assert!(verdict.starts_with("not QC-equivalent: capacity bounded below"));

    let cfg = write(tmp.path(), "t.toml", &text.replace("0.02", "50.0"));
    let out = tmp.path().join("p");
    assert_eq!(gluelab(&["run", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(3));
    assert!(fs::read_to_string(out.join("verdict.txt")).unwrap().starts_with("inconclusive"));
}

#[test]
fn verify_reports_each_check() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gluelab(&["verify", "c3", "--out", tmp.path().to_str().unwrap(), "--resolution-scale", "0.25"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS c3.seam_measure"));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("verify_c3.json")).unwrap()).unwrap();
    assert_eq!(report["checks"][0]["passed"], true);
}

#[test]
fn verify_rejects_unknown_suites() {
    assert_eq!(gluelab(&["verify", "everything"]).status.code(), Some(1));
    assert_eq!(gluelab(&["verify", "c3", "--resolution-scale=-1"]).status.code(), Some(1));
    assert_eq!(gluelab(&["verify"]).status.code(), Some(1));
}
