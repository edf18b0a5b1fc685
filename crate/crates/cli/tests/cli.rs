use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vanet-trs"))
        .current_dir(dir)
        .args(args)
        .env_remove("VANET_TRS_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn keys(dir: &Path) {
    let o = bin(dir, &["keygen", "--out", "keys"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn keygen_roundtrip_verify() {
    let dir = TempDir::new().unwrap();
    keys(dir.path());
    for f in ["params.bin", "master.bin", "manifest.json"] {
        assert!(dir.path().join("keys").join(f).exists(), "{f}");
    }
    let o = bin(dir.path(), &["roundtrip", "--t", "3", "--r", "12", "--out", "ann.bin"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("verdict: accept"));
    for field in ["request_ms", "reply_ms_mean", "assemble_ms", "verify_ms"] {
        assert!(text.contains(field), "{field} missing");
    }

    let o = bin(dir.path(), &["verify", "ann.bin"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("accept"));

    let o = bin(dir.path(), &["verify", "ann.bin", "--now", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let o = bin(dir.path(), &["verify", "ann.bin", "--now", "301"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn tampered_announcement_is_rejected() {
    let dir = TempDir::new().unwrap();
    keys(dir.path());
    let o = bin(dir.path(), &["roundtrip", "--t", "2", "--r", "8", "--out", "ann.bin"]);
    assert!(o.status.success());
    let path = dir.path().join("ann.bin");
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x01;
    std::fs::write(&path, bytes).unwrap();
    let o = bin(dir.path(), &["verify", "ann.bin"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn variant_roundtrip_verifies() {
    let dir = TempDir::new().unwrap();
    keys(dir.path());
    let o = bin(dir.path(), &["roundtrip", "--variant", "--t", "3", "--r", "10", "--out", "v.bin"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(bin(dir.path(), &["verify", "v.bin"]).status.code(), Some(0));
}

#[test]
fn too_few_repliers_fails() {
    let dir = TempDir::new().unwrap();
    keys(dir.path());
    let o = bin(dir.path(), &["roundtrip", "--t", "4", "--r", "12", "--repliers", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fractions"));
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = TempDir::new().unwrap();
    assert_eq!(bin(dir.path(), &["keygen", "--n", "128"]).status.code(), Some(2));
    assert!(!dir.path().join("keys").exists());
    keys(dir.path());
    // refuses to overwrite without --force
    assert_eq!(bin(dir.path(), &["keygen", "--out", "keys"]).status.code(), Some(1));
    assert_eq!(bin(dir.path(), &["keygen", "--out", "keys", "--force"]).status.code(), Some(0));
    let o = bin(dir.path(), &["roundtrip", "--t", "10", "--r", "12"]);
    assert_ne!(o.status.code(), Some(0));
    assert_eq!(bin(dir.path(), &["anonymity", "--t", "5", "--r", "3"]).status.code(), Some(2));
    assert_eq!(bin(dir.path(), &["verify", "missing.bin"]).status.code(), Some(1));
}

#[test]
fn public_only_keygen_cannot_roundtrip() {
    let dir = TempDir::new().unwrap();
    let o = bin(dir.path(), &["keygen", "--public-only", "--out", "pub"]);
    assert!(o.status.success());
    assert!(!dir.path().join("pub/master.bin").exists());
    let o = bin(dir.path(), &["roundtrip", "--params", "pub/params.bin"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn anonymity_table() {
    let dir = TempDir::new().unwrap();
    let o = bin(dir.path(), &["anonymity", "--t", "3", "--r", "10"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,r,j,exact,probability");
    assert_eq!(lines.len(), 4);
    let exact: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(exact, ["17/24", "11/60", "1/120"]);

    let o = bin(dir.path(), &["anonymity", "--t", "3", "--r", "10", "--j", "3"]);
    assert_eq!(stdout(&o).lines().nth(1), Some("3,10,3,1/120,0.008333333333"));
}

const SCENARIO: &str = r#"
vehicles = 150
duration = 120.0
seed = 9

[sweep]
vehicles = [100, 200]
t = [2, 3]
runs = 4
"#;

#[test]
fn simulate_outputs_are_reproducible() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("s.toml"), SCENARIO).unwrap();
    let o = bin(dir.path(), &["simulate", "s.toml", "--out", "a"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["summary.csv", "runs.csv", "tidy.csv", "manifest.json"] {
        assert!(dir.path().join("a").join(f).exists(), "{f}");
    }
    let o = bin(dir.path(), &["simulate", "s.toml", "--out", "b"]);
    assert!(o.status.success());
    for f in ["summary.csv", "runs.csv", "tidy.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
    let summary = std::fs::read_to_string(dir.path().join("a/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["config"]["sweep"]["runs"], 4);

    // existing outputs are protected
    assert_eq!(bin(dir.path(), &["simulate", "s.toml", "--out", "a"]).status.code(), Some(1));
}

#[test]
fn simulate_overrides_and_jsonl() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("s.toml"), SCENARIO).unwrap();
    let o = bin(
        dir.path(),
        &["simulate", "s.toml", "--out", "o", "--t", "4", "--runs", "2", "--seed", "3", "--format", "jsonl"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let jsonl = std::fs::read_to_string(dir.path().join("o/tidy.jsonl")).unwrap();
    for line in jsonl.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["t"], 4);
    }
    let runs = std::fs::read_to_string(dir.path().join("o/runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 2 * 2);
}

#[test]
fn simulate_rejects_bad_config() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "vehicles = 10\nwarp_speed = 9\n").unwrap();
    assert_eq!(bin(dir.path(), &["simulate", "bad.toml"]).status.code(), Some(2));
    std::fs::write(dir.path().join("tight.toml"), "t = 5\nr = 8\n").unwrap();
    assert_eq!(bin(dir.path(), &["simulate", "tight.toml"]).status.code(), Some(2));
}

#[test]
fn bench_writes_csv_and_costs() {
    let dir = TempDir::new().unwrap();
    let o = bin(
        dir.path(),
        &["bench", "--t", "2,3", "--r", "10", "--reps", "2", "--out", "b.csv", "--calibrate", "costs.toml"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert!(csv.starts_with("t,r,"));
    assert_eq!(csv.lines().count(), 3);
    let costs: toml::Table = std::fs::read_to_string(dir.path().join("costs.toml")).unwrap().parse().unwrap();
    assert!(costs["costs"].get("request_base_ms").is_some());
    assert!(dir.path().join("b.csv.manifest.json").exists());
}
