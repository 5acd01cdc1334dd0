use std::collections::BTreeSet;
use std::fs;
use std::process::Command;

use fqh_cli::config::{Grid, RunConfig, DEFAULT_CONFIG};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_fqh");

fn keys(v: &Value, prefix: &str, out: &mut BTreeSet<String>) {
    if let Value::Object(m) = v {
        for (k, v) in m {
            let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            out.insert(path.clone());
            if !path.ends_with("phis") && !path.ends_with("_mhz") && !path.ends_with("v_over_j") && path != "noise.site_t2_us" {
                keys(v, &path, out);
            }
        }
    }
}

fn schema_keys(v: &Value, prefix: &str, out: &mut BTreeSet<String>) {
    if let Some(Value::Object(props)) = v.get("properties") {
        for (k, sub) in props {
            let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            out.insert(path.clone());
            schema_keys(sub, &path, out);
        }
    }
}

#[test]
fn schema_lists_every_config_key() {
    let schema: Value = serde_json::from_str(include_str!("../config/schema.json")).unwrap();
    let cfg = RunConfig::parse(DEFAULT_CONFIG, &["schedule.duration_us=1.0".into(), "noise.t2_us=6.2".into(), "schedule.initial_sites=[5, 10]".into()]).unwrap();
    let mut ours = BTreeSet::new();
    keys(&cfg.to_json(), "", &mut ours);
    let mut theirs = BTreeSet::new();
    schema_keys(&schema, "", &mut theirs);
    assert_eq!(ours, theirs);
    assert_eq!(schema["required"], serde_json::json!(["lattice"]));
}

#[test]
fn missing_lattice_block_is_named() {
    let err = RunConfig::parse("[flux]\nphi = 0.2\n", &[]).unwrap_err();
    assert!(format!("{err:#}").contains("lattice"), "{err:#}");
}

#[test]
fn over_cap_coupling_warns_and_negative_t2_errors() {
    let cfg = RunConfig::parse(DEFAULT_CONFIG, &["lattice.j_mhz=50".into()]).unwrap();
    let r = cfg.validate();
    assert!(r.is_valid());
    assert!(r.warnings.iter().any(|w| w.contains("5 MHz")), "{r}");
    let cfg = RunConfig::parse(DEFAULT_CONFIG, &["noise.t2_us=-1".into()]).unwrap();
    assert!(!cfg.validate().is_valid());
}

#[test]
fn grid_accepts_both_forms() {
    let cfg = RunConfig::parse(DEFAULT_CONFIG, &["streda.phis=[0.25, 0.3]".into()]).unwrap();
    assert_eq!(cfg.streda.phis, Grid::Values(vec![0.25, 0.3]));
    assert_eq!(Grid::range(0.1, 0.3, 0.1).values().unwrap().len(), 3);
}

#[test]
fn validate_reports_and_exits() {
    let ok = Command::new(BIN).arg("validate").output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("valid, 0 warnings"));
    let bad = Command::new(BIN).args(["--set", "noise.t2_us=-1", "validate"]).output().unwrap();
    assert!(!bad.status.success());
}

#[test]
fn runs_are_byte_identical() {
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let out = Command::new(BIN)
                .args(["--seed", "7", "--jobs", "2", "--out"])
                .arg(dir.path())
                .args(["--set", "deflect.phis=[0.1]", "deflect"])
                .output()
                .unwrap();
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            let csv = fs::read(dir.path().join("deflect.csv")).unwrap();
            let meta: Value = serde_json::from_slice(&fs::read(dir.path().join("deflect.meta.json")).unwrap()).unwrap();
            assert!(fs::read_to_string(dir.path().join("deflect.svg")).unwrap().starts_with("<svg"));
            (csv, meta)
        })
        .collect();
    assert_eq!(runs[0].0, runs[1].0);
    let m = &runs[0].1["metadata"];
    assert_eq!(m["seed"], 7);
    assert_eq!(m["command"], "deflect");
    assert!(m["config"]["lattice"]["lx"] == 4);
}
