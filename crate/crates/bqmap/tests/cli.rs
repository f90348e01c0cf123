//! End-to-end tests of the `bqmap` binary: golden JSON schemas, exit
//! codes, config files, and byte-stable slice output across worker counts.

use std::path::Path;
use std::process::{Command, Output};

fn bqmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bqmap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    std::fs::read_to_string(path).expect("golden file")
}

#[test]
fn golden_constants() {
    let out = bqmap(&["constants", "--mu", "0,0,1,20", "--json"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        golden("constants_mu_0_0_1_20.json")
    );
}

#[test]
fn golden_classify() {
    let out = bqmap(&["classify", "--tau", "3,3,3,-3", "--json"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        golden("classify_tau_3_3_3_m3.json")
    );
}

#[test]
fn golden_trace() {
    let out = bqmap(&["trace", "--mu", "0,0,0,4", "--triple", "0,0,2", "--slope", "1", "--json"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        golden("trace_slope_1.json")
    );
}

#[test]
fn golden_bq_rejected() {
    let out = bqmap(&["bq", "--mu", "0,0,0,4", "--triple", "0,0,2", "--json"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        golden("bq_rejected.json")
    );
    // every --json output is valid JSON
    let doc: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("valid JSON");
    assert_eq!(doc["command"], "bq");
}

#[test]
fn exit_codes() {
    // validation error: missing required input
    let out = bqmap(&["bq", "--mu", "0,0,0,4"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error[E_VALIDATION]"), "stderr: {err}");

    // bad complex literal
    let out = bqmap(&["bq", "--mu", "0,0,x,4", "--triple", "0,0,2"]);
    assert_eq!(out.status.code(), Some(2));

    // budget-limited undetermined reports exit 3
    let out = bqmap(&[
        "bq",
        "--mu",
        "0,0,0,200",
        "--triple",
        "5,5,5",
        "--max-vertices",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));

    // success
    let out = bqmap(&["bq", "--mu", "0,0,0,200", "--triple", "5,5,5"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn seed_command_reports_verdict() {
    let out = bqmap(&["seed", "--mu", "0,-1,-1,4", "--json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid JSON");
    assert!(doc["verdict"]["Accepted"].is_object());
    assert_eq!(doc["seed"]["perm"], "Identity");
}

#[test]
fn omega_lists_regions() {
    let out = bqmap(&[
        "omega", "--mu", "0,0,0,200", "--triple", "5,5,5", "--k", "6", "--json",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid JSON");
    assert_eq!(doc["count"], 3);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"mu": "0,0,0,200", "triple": "5,5,5", "k": 1.0}"#,
    )
    .unwrap();
    // k from the flag overrides the config value
    let out = bqmap(&[
        "omega",
        "--config",
        cfg.to_str().unwrap(),
        "--k",
        "6",
        "--json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid JSON");
    assert_eq!(doc["count"], 3);

    // key=value form works too
    let cfg2 = dir.path().join("run.conf");
    std::fs::write(&cfg2, "mu = 0,0,0,200\ntriple = 5,5,5\nk = 6\n").unwrap();
    let out = bqmap(&["omega", "--config", cfg2.to_str().unwrap(), "--json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid JSON");
    assert_eq!(doc["count"], 3);
}

#[test]
fn slice_bytes_stable_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let seed_doc: serde_json::Value = serde_json::from_slice(
        &bqmap(&["seed", "--mu", "0,-1,-1,4", "--json"]).stdout,
    )
    .unwrap();
    let t = &seed_doc["seed"]["triple"];
    let base = format!(
        "{},{},{}",
        t["x"][0].as_f64().unwrap(),
        t["y"][0].as_f64().unwrap(),
        t["z"][0].as_f64().unwrap()
    );

    let render = |threads: &str, name: &str| -> Vec<u8> {
        let out_path = dir.path().join(name);
        let side_path = dir.path().join(format!("{name}.json"));
        let base_arg = format!("--line-base={base}");
        let out = bqmap(&[
            "slice",
            "--mu",
            "0,-1,-1,4",
            &base_arg,
            "--line-direction",
            "0,1,1",
            "--window=-0.02,0.02,-0.02,0.02",
            "--width",
            "16",
            "--height",
            "16",
            "--threads",
            threads,
            "--output",
            out_path.to_str().unwrap(),
            "--sidecar",
            side_path.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(side_path.exists());
        std::fs::read(out_path).unwrap()
    };
    let one = render("1", "one.ppm");
    let four = render("4", "four.ppm");
    assert_eq!(one, four, "worker count changed the output bytes");
    assert!(one.starts_with(b"P6\n16 16\n255\n"));
    assert_eq!(one.len(), b"P6\n16 16\n255\n".len() + 16 * 16 * 3);

    // sidecar echoes the spec and is valid JSON
    let sidecar: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("one.ppm.json")).unwrap()).unwrap();
    assert_eq!(sidecar["width"], 16);
    assert_eq!(sidecar["kinds"].as_array().unwrap().len(), 256);
}
