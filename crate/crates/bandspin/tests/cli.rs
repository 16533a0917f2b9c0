//! End-to-end checks of the command-line interface: subcommands, file
//! outputs, and exit codes.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bandspin"))
}

fn config_path(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bandspin-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn solve_prints_result() {
    let out = bin()
        .args(["solve", "--config", &config_path("paper_j2.toml"), "--seed", "7"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("spin:"), "missing spin line: {text}");
    assert!(text.contains("f0:"), "missing f0 line: {text}");
    assert!(text.contains("ue  0:"), "missing per-UE lines: {text}");
}

#[test]
fn missing_config_exits_2() {
    let out = bin()
        .args(["solve", "--config", "/nonexistent/nope.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn bad_flag_exits_2() {
    let out = bin().args(["solve", "--config"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_3() {
    // 17 satellites exceed the default spin-enumeration cap of 16.
    let dir = temp_dir("cap");
    let mut cfg = String::from(
        "altitude_m = 500e3\nue_count = 2\nregion_radius_m = 100.0\n\
         p_sat_max_w = 20.0\np_ue_max_w = 2.0\nseed = 0\n\
         antenna_count_x = 2\nantenna_count_y = 2\n\
         [bands]\nf1_hz = 2.4e9\nf2_hz = 1.9e9\nb1_hz = 10e6\nb2_hz = 10e6\n",
    );
    for i in 0..17 {
        cfg.push_str(&format!(
            "[[satellites]]\nelevation_deg = 60.0\nazimuth_deg = {}\n",
            i as f64 * 20.0
        ));
    }
    let path = dir.join("cap.toml");
    std::fs::write(&path, cfg).unwrap();
    let out = bin()
        .args(["solve", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn run_produces_all_output_files() {
    let dir = temp_dir("run");
    let out = bin()
        .args([
            "run",
            "--config",
            &config_path("paper_j2.toml"),
            "--drops",
            "2",
            "--mode",
            "both",
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for file in ["traces.csv", "rates.csv", "cdf.csv", "summary.json"] {
        assert!(dir.join(file).exists(), "{file} missing");
    }
    let rates = std::fs::read_to_string(dir.join("rates.csv")).unwrap();
    assert_eq!(rates.lines().count(), 1 + 2 * 2, "header plus drops x modes");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn dump_channels_to_stdout_and_file() {
    let out = bin()
        .args(["dump-channels", "--config", &config_path("paper_j2.toml")])
        .output()
        .unwrap();
    assert!(out.status.success());
    let parsed: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    assert_eq!(parsed["sat_ue"].as_array().unwrap().len(), 10 * 2 * 2);

    let dir = temp_dir("dump");
    let out = bin()
        .args(["dump-channels", "--config", &config_path("paper_j2.toml"), "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("channels.json").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn oracle_subcommand_brackets_solver() {
    // Tiny instance config within the oracle caps.
    let dir = temp_dir("oracle");
    let cfg = "altitude_m = 500e3\nue_count = 2\nregion_radius_m = 100.0\n\
               p_sat_max_w = 20.0\np_ue_max_w = 2.0\nnoise_variance_w = 5.0e-13\nseed = 3\n\
               antenna_count_x = 8\nantenna_count_y = 8\n\
               [bands]\nf1_hz = 2.4e9\nf2_hz = 1.9e9\nb1_hz = 10e6\nb2_hz = 10e6\n\
               [[satellites]]\nelevation_deg = 60.0\nazimuth_deg = 0.0\n\
               [[satellites]]\nelevation_deg = 60.0\nazimuth_deg = 180.0\n";
    let path = dir.join("tiny.toml");
    std::fs::write(&path, cfg).unwrap();
    let out = bin()
        .args(["oracle", "--config", path.to_str().unwrap(), "--grid-levels", "8"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("grid lower bound"), "{text}");
    assert!(text.contains("solver f0"), "{text}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn trace_csv_columns() {
    let dir = temp_dir("trace");
    let trace = dir.join("trace.csv");
    let out = bin()
        .args(["solve", "--config", &config_path("paper_j2.toml"), "--trace-out"])
        .arg(&trace)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "spin_bits,iteration,f2,f0,subproblem_nodes,wall_ms"
    );
    assert!(text.lines().count() > 4, "one row per iteration per spin");
    std::fs::remove_dir_all(&dir).ok();
}
