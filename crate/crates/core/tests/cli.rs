use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], config: &str, dir: &Path, budget: Option<&str>) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sumprodlab"));
    cmd.args(args).arg("--config").arg(&cfg).arg("--out").arg(dir.join("out"));
    match budget {
        Some(b) => cmd.env("SUMPRODLAB_BUDGET", b),
        None => cmd.env_remove("SUMPRODLAB_BUDGET"),
    };
    cmd.output().unwrap()
}

const ORACLE: &str = r#"{"schema": 1, "kind": "oracle-suite", "seed": 11,
    "oracle": {"instances": 20, "max_size": 12, "spread": 8}}"#;

const FLATTEN: &str = r#"{"schema": 1, "kind": "flatten", "seed": 5, "samples": 16,
    "measure": {"n": 1, "m": 10, "family": "cantor", "ratio": 0.3333333333333333, "depth": 5},
    "scales": [0.0625, 0.03125]}"#;

#[test]
fn malformed_config_exits_2() {
    let dir = scratch("malformed");
    assert_eq!(run(&["decay"], "{ not json", &dir, None).status.code(), Some(2));
    assert_eq!(run(&["decay"], ORACLE, &dir, None).status.code(), Some(2));
    assert_eq!(run(&["no-such-experiment"], ORACLE, &dir, None).status.code(), Some(2));
    let unseeded = r#"{"schema": 1, "kind": "oracle-suite"}"#;
    assert_eq!(run(&["oracle-suite"], unseeded, &dir, None).status.code(), Some(2));
}

#[test]
fn budget_overrun_exits_3() {
    let dir = scratch("budget");
    let cfg = r#"{"schema": 1, "kind": "decay", "delta_m": 8, "ks": [2],
        "measure": {"n": 1, "m": 12, "family": "cantor", "ratio": 0.3333333333333333, "depth": 6}}"#;
    let out = run(&["decay"], cfg, &dir, Some("64"));
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oracle_suite_passes_and_manifest_lists_every_file() {
    let dir = scratch("oracle");
    let out = run(&["oracle-suite"], ORACLE, &dir, None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out_dir = dir.join("out");
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["kind"], "oracle-suite");
    assert_eq!(manifest["pass"], true);
    let files = manifest["files"].as_array().unwrap();
    let mut listed: Vec<String> = files.iter().map(|f| f["name"].as_str().unwrap().to_string()).collect();
    for f in files {
        let bytes = std::fs::read(out_dir.join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
    let mut on_disk: Vec<String> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    listed.sort();
    on_disk.sort();
    assert_eq!(listed, on_disk);
}

#[test]
fn reruns_are_byte_identical() {
    let read_all = |dir: &Path| {
        let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.join("out"))
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        v.sort();
        v
    };
    let a = scratch("rerun-a");
    let b = scratch("rerun-b");
    assert!(run(&["flatten", "--threads", "1"], FLATTEN, &a, None).status.success());
    assert!(run(&["flatten", "--threads", "2"], FLATTEN, &b, None).status.success());
    let (fa, fb) = (read_all(&a), read_all(&b));
    assert!(fa.len() >= 2);
    assert_eq!(fa, fb);
}

#[test]
fn seed_flag_overrides_the_config() {
    let a = scratch("seed-a");
    let b = scratch("seed-b");
    assert!(run(&["flatten"], FLATTEN, &a, None).status.success());
    assert!(run(&["flatten", "--seed", "6"], FLATTEN, &b, None).status.success());
    let ma = std::fs::read_to_string(a.join("out/manifest.json")).unwrap();
    let mb = std::fs::read_to_string(b.join("out/manifest.json")).unwrap();
    assert!(ma.contains("\"seed\": 5") && mb.contains("\"seed\": 6"));
}
