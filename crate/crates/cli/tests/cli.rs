use std::path::Path;
use std::process::Command;

fn parex(args: &[&str], out: &Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_parex")).args(args).arg("--out").arg(out).output().unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stdout).into_owned())
}

#[test]
fn alpert_check_passes_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = parex(&["alpert-check", "--set", "alpert.kappas=[2]"], dir.path());
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS")), "{stdout}");
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["subcommand"], "alpert-check");
    assert_eq!(report["config"]["alpert"]["kappas"], serde_json::json!([2]));
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    assert!(std::fs::read_to_string(dir.path().join("ledger.csv")).unwrap().starts_with("# schema=1\n"));
}

#[test]
fn rescale_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = parex(&["rescale-check", "--set", "rescale.rhos=[0.5]", "--set", "rescale.qs=[4]"], dir.path());
    assert_eq!(code, 0);
    assert!(stdout.starts_with("PASS rescaling-identity"));
}

#[test]
fn malformed_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"rescale": {"tolerance": 1e-3}}"#).unwrap();
    let out = dir.path().join("out");
    let (code, _) = parex(&["rescale-check", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(code, parex_cli::exit::SCHEMA);
    assert!(!out.exists());
    let (code, _) = parex(&["grid", "--set", "subcommand=\"extend\""], &out);
    assert_eq!(code, parex_cli::exit::SCHEMA);
    let (code, _) = parex(&["no-such-command"], &out);
    assert_eq!(code, parex_cli::exit::SCHEMA);
    assert!(!out.exists());
}

#[test]
fn error_classes_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = parex(&["extend", "--set", "extend.budget=10"], dir.path());
    assert_eq!(code, parex_cli::exit::CAPACITY);
    let (code, _) = parex(&["bg-classify", "--set", "bg.nu_q=2"], dir.path());
    assert_eq!(code, parex_cli::exit::INPUT);
    let (code, _) = parex(&["rescale-check", "--set", "rescale.tol=0"], dir.path());
    assert_eq!(code, parex_cli::exit::FAIL);
}
