use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_psolab");

fn psolab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).env_remove("PSOLAB_WORKERS").output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write(dir: &tempfile::TempDir, text: &str) -> String {
    let path = dir.path().join("config.json");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const TINY: &str = r#"{
    "name": "tiny",
    "distribution": {"kind": "uniform_bits", "d": 16},
    "n": 10, "w_low": "1/10", "trials": 50, "seed": 4,
    "mechanism": {"name": "counts", "queries": {"plan": "adversary"}},
    "adversary": {"name": "counting", "r": 2}
}"#;

#[test]
fn list_names_registries() {
    let (code, out, _) = psolab(&["list"]);
    assert_eq!(code, 0);
    for name in ["counts", "kanon-interval", "trivial-hash", "kanon-endpoint"] {
        assert!(out.contains(name), "{name} missing");
    }
}

#[test]
fn baseline_accepts_decimals_and_fractions() {
    assert_eq!(psolab(&["baseline", "--n", "4", "--w", "1/4"]).1.trim(), "0.421875000000");
    assert_eq!(psolab(&["baseline", "--n", "100", "--w", "0.01"]).1.trim(), "0.369729637650");
    let (code, _, err) = psolab(&["baseline", "--n", "4", "--w", "2"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn unknown_adversary_exits_2_and_echoes_the_name() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, &TINY.replace("\"counting\", \"r\"", "\"no-such-attack\", \"r\""));
    let (code, _, err) = psolab(&["run", "--config", &path]);
    assert_eq!(code, 2);
    assert!(err.contains("no-such-attack"), "{err}");
}

#[test]
fn runtime_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // odd n is only rejected once the extractor sees a dataset
    let text = r#"{
        "distribution": {"kind": "uniform_bits", "d": 16},
        "n": 9, "w_low": "2^-16", "trials": 3,
        "mechanism": {"name": "ext-enc", "m": 4},
        "adversary": {"name": "ext-enc"}
    }"#;
    let (code, _, err) = psolab(&["run", "--config", &write(&dir, text)]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn run_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, TINY);
    let (code, csv, _) = psolab(&["run", "--config", &path, "--trials", "20", "--seed", "9"]);
    assert_eq!(code, 0);
    let row = csv.lines().nth(1).unwrap();
    assert!(row.starts_with("tiny,10,16,16,20,") && row.ends_with(",9"), "{row}");
    let (code, json, _) = psolab(&["run", "--config", &path, "--out", "json", "--verbose"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 50);
    assert_eq!(v["config"]["adversary"]["name"], "counting");
}

#[test]
fn sweep_rows_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, TINY);
    let (code, csv, err) = psolab(&["sweep", "--config", &path, "--axis", "n", "--values", "8,10"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(csv.lines().count(), 3);
    let (code, _, _) = psolab(&["sweep", "--config", &path, "--axis", "zeta", "--values", "1"]);
    assert_eq!(code, 2);
}
