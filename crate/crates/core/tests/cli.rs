use std::path::Path;
use std::process::{Command, Output};

fn selfsim(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_selfsim"));
    cmd.args(args);
    match cache {
        Some(dir) => cmd.env("SELFSIM_CACHE_DIR", dir),
        None => cmd.env_remove("SELFSIM_CACHE_DIR"),
    };
    cmd.output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn params_json() {
    let out = selfsim(&["params", "--N", "2", "--p", "1.6"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let v = json(&out);
    assert!((v["w_star"].as_f64().unwrap() - 8.0).abs() < 1e-12);
    assert!((v["mu"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    let pos = |k: &str| text.find(&format!("\"{k}\"")).unwrap();
    assert!(pos("N") < pos("p") && pos("p") < pos("mu") && pos("mu") < pos("w_star"));
    assert!(text.ends_with("}\n"));
}

#[test]
fn usage_errors_exit_one() {
    let out = selfsim(&["params", "--N", "2", "--p", "1.6", "--bogus"], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let out = selfsim(&["params", "--N", "2", "--p", "2.5"], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p = 2.5"));
    let out = selfsim(&["classify", "--N", "2", "--p", "1.6", "--beta", "-1"], None);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(selfsim(&["--help"], None).status.code(), Some(0));
}

#[test]
fn classify_list() {
    let out = selfsim(&["classify", "--N", "2", "--p", "1.6", "--beta-list", "0.05,10"], None);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let verdicts: Vec<&str> = v.as_array().unwrap().iter().map(|c| c["verdict"].as_str().unwrap()).collect();
    assert_eq!(verdicts, ["C", "A"]);
}

#[test]
fn bisect_cache_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["bisect", "--N", "2", "--p", "1.6"];
    let first = selfsim(&args, Some(dir.path()));
    assert_eq!(first.status.code(), Some(0));
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1);
    let cached = &entries[0];

    let second = selfsim(&args, Some(dir.path()));
    assert_eq!(second.stdout, first.stdout);
    let uncached = selfsim(&[&args[..], &["--no-cache"]].concat(), Some(dir.path()));
    assert_eq!(uncached.stdout, first.stdout);

    // a hit is served from the file
    let mut entry: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(cached).unwrap()).unwrap();
    entry["report"]["iterations"] = 999.into();
    std::fs::write(cached, serde_json::to_string(&entry).unwrap()).unwrap();
    assert_eq!(json(&selfsim(&args, Some(dir.path())))["iterations"], 999);

    // a stale version tag forces a recompute that rewrites the entry
    entry["version"] = "0.0.0+old".into();
    std::fs::write(cached, serde_json::to_string(&entry).unwrap()).unwrap();
    let fresh = selfsim(&args, Some(dir.path()));
    assert_eq!(fresh.stdout, first.stdout);
    let rewritten: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(cached).unwrap()).unwrap();
    assert_eq!(rewritten["version"], selfsim::io::CODE_VERSION);

    // a different tolerance is a different key
    let loose = selfsim(&[&args[..], &["--tol", "1e-4"]].concat(), Some(dir.path()));
    assert_eq!(loose.status.code(), Some(0));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
    assert!(json(&loose)["iterations"].as_u64().unwrap() < json(&first)["iterations"].as_u64().unwrap());
}

#[test]
fn profile_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out/profile.csv");
    let js = dir.path().join("profile.json");
    let out = selfsim(
        &["profile", "--N", "1", "--p", "1.5", "--beta", "1", "--csv", csv.to_str().unwrap(), "--json", js.to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("r,f,fp,g,w,wp,E\n") && text.ends_with('\n'));
    assert!(text.lines().count() > 10);
    let file: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&js).unwrap()).unwrap();
    assert_eq!(file, json(&out));
}

#[test]
fn numerical_failure_exits_two_with_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("partial.csv");
    let out = selfsim(
        &["profile", "--N", "2", "--p", "1.6", "--beta", "0.3", "--max-steps", "20", "--csv", csv.to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("integration stopped"));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("r,f,fp,g,w,wp,E\n") && text.lines().count() > 1);
}

#[test]
fn tailfit_reports_relative_error() {
    let out = selfsim(&["tailfit", "--N", "2", "--p", "1.6", "--beta", "0.05", "--kind", "K_C"], None);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["kind"], "K_C");
    assert!(v["rel_err"].as_f64().unwrap() < 0.05);
}

#[test]
fn residual_command() {
    let out = selfsim(
        &["residual", "--N", "2", "--p", "1.6", "--beta", "0.05", "--t-steps", "50", "--r-steps", "50"],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["refinement_order"].as_f64().unwrap() > 1.8);
}

#[test]
fn check_suite_passes() {
    let out = selfsim(&["check", "--N", "1", "--p", "1.5"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["passed"], true);
    assert!(v["betas"].as_array().unwrap().len() >= 10);
}
