use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use parroll::config::{RunConfig, TargetSource};
use serde_json::Value;
use sha2::{Digest, Sha256};

fn parroll(args: &[&str], dir: &Path, threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_parroll"));
    cmd.args(args).current_dir(dir).env("RUST_LOG", "warn");
    if let Some(t) = threads {
        cmd.env("PARROLL_THREADS", t.to_string());
    }
    cmd.output().unwrap()
}

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::example();
    let r = &mut cfg.run;
    r.realizations = 3;
    r.duration = 300.0;
    r.dt = 0.01;
    r.discard = 50.0;
    r.superposition_realizations = 2;
    r.components = 256;
    r.moments.duration = 200.0;
    cfg
}

fn write_config(dir: &Path, cfg: &RunConfig) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, cfg.to_json().unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

/// Every file in the manifest exists with the recorded hash, and nothing
/// else was written.
fn assert_manifest_complete(out: &Path) -> Value {
    let m = manifest(out);
    let listed: BTreeSet<String> = m["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| {
            let p = f["path"].as_str().unwrap();
            let bytes = std::fs::read(out.join(p)).unwrap();
            assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64, "{p}");
            assert_eq!(
                f["sha256"].as_str().unwrap(),
                Sha256::digest(&bytes)
                    .iter()
                    .map(|b| format!("{b:02x}"))
                    .collect::<String>(),
                "{p}"
            );
            p.to_string()
        })
        .collect();
    let on_disk: BTreeSet<String> = std::fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.json")
        .collect();
    assert_eq!(listed, on_disk);
    m
}

#[test]
fn spectrum_writes_three_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &RunConfig::example());
    let o = parroll(
        &[
            "spectrum", "--config", &cfg, "--out", "spec", "--seed", "17",
        ],
        dir.path(),
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("spec");
    let m = assert_manifest_complete(&out);
    assert_eq!(m["command"], "spectrum");
    assert_eq!(m["seed"], 17);
    for name in [
        "spectrum_ittc.csv",
        "spectrum_effective.csv",
        "spectrum_arma.csv",
    ] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        assert_eq!(text.lines().count(), 513, "{name}");
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().count(), 3);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    let o = parroll(&["spectrum", "--config", "bad.json"], dir.path(), None);
    assert_eq!(o.status.code(), Some(2));

    let o = parroll(&["spectrum", "--config", "missing.json"], dir.path(), None);
    assert_eq!(o.status.code(), Some(2));

    let mut v = serde_json::to_value(RunConfig::example()).unwrap();
    v["filter"]["alpha"] = serde_json::json!([0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    std::fs::write(dir.path().join("unstable.json"), v.to_string()).unwrap();
    let o = parroll(
        &["fit-filter", "--config", "unstable.json"],
        dir.path(),
        None,
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("filter.alpha"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn diverging_moment_integration_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.run.moments.dt = 20.0;
    cfg.run.moments.duration = 4000.0;
    cfg.run.moments.record_every = 1;
    let path = write_config(dir.path(), &cfg);
    let o = parroll(&["moments", "--config", &path], dir.path(), None);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn simulate_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &small_config());
    let hashes = |threads: usize| {
        let out = format!("t{threads}");
        let o = parroll(
            &["simulate", "--config", &path, "--out", &out],
            dir.path(),
            Some(threads),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let m = assert_manifest_complete(&dir.path().join(&out));
        m["files"].clone()
    };
    let one = hashes(1);
    assert!(one.as_array().unwrap().len() >= 8);
    assert_eq!(one, hashes(3));
}

#[test]
fn closures_and_pdf_fits_from_a_targets_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    std::fs::write(
        dir.path().join("targets.json"),
        r#"{"m":[0.0,0.04,0.0,0.0048],"weights":[1,1,1,1]}"#,
    )
    .unwrap();
    cfg.run.pdf.targets_from = TargetSource::File;
    cfg.run.pdf.targets_file = Some("targets.json".into());
    let path = write_config(dir.path(), &cfg);

    let o = parroll(&["fit-pdf", "--config", &path], dir.path(), None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    assert_manifest_complete(&out);
    for kind in ["type1", "type2"] {
        let v: Value = serde_json::from_str(
            &std::fs::read_to_string(out.join(format!("pdf_{kind}.json"))).unwrap(),
        )
        .unwrap();
        assert_eq!(v["kind"], kind);
        assert!(v["residual"].as_f64().unwrap() < 1e-3);
    }

    let o = parroll(
        &["export-closures", "--config", &path, "--out", "cl"],
        dir.path(),
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cl = dir.path().join("cl");
    assert_manifest_complete(&cl);
    let sup: Value = serde_json::from_str(
        &std::fs::read_to_string(cl.join("closures_supplement.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(sup["closures"].as_array().unwrap().len(), 31);
    let p2: Value =
        serde_json::from_str(&std::fs::read_to_string(cl.join("closures_p2.json")).unwrap())
            .unwrap();
    assert!(p2["closures"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["target"].as_str().unwrap().starts_with("m_")));
}
