//! Black-box tests of the `wavecore` binary: flag handling, output files,
//! exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_wavecore")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wavecore-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_cli(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("chain.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

const SMALL_CONFIG: &str = "\
waveform = FBMC-OQAM
num_subcarriers = 64
num_real_symbols = 16
snr_db = 20
seed = 7
channel_profile = ITU_VehA
channel_mode = ergodic
channel_estimation = known
synchronization = off
trials = 2
";

#[test]
fn run_writes_the_three_files_and_reports_success() {
    let dir = scratch("run");
    let cfg = write_config(&dir, SMALL_CONFIG);
    let out = run_cli(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for f in ["mse.csv", "summary.csv", "config.echo"] {
        let text = std::fs::read_to_string(dir.join(f)).unwrap();
        assert!(!text.is_empty(), "{f} is empty");
    }
    let mse = std::fs::read_to_string(dir.join("mse.csv")).unwrap();
    assert!(mse.starts_with("subcarrier,mse_linear,mse_db"));
    // 64 subcarriers plus header.
    assert_eq!(mse.lines().count(), 65);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn seed_and_trials_flags_override_the_config() {
    let dir = scratch("override");
    let cfg = write_config(&dir, SMALL_CONFIG);
    let out_dir = dir.join("out");
    let out = run_cli(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "99",
        "--trials",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let echo = std::fs::read_to_string(out_dir.join("config.echo")).unwrap();
    assert!(echo.contains("seed = 99"), "echo should carry the override:\n{echo}");
    assert!(echo.contains("trials = 1"), "echo should carry the override:\n{echo}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn psd_writes_a_spectrum() {
    let dir = scratch("psd");
    let cfg = write_config(&dir, SMALL_CONFIG);
    let out = run_cli(&["psd", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let psd = std::fs::read_to_string(dir.join("psd.csv")).unwrap();
    assert!(psd.starts_with("freq_hz,power_db"));
    assert!(psd.lines().count() > 2);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn filter_dump_prints_the_taps() {
    let out = run_cli(&["filter", "dump", "--k", "4", "--subcarriers", "64"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,tap"));
    assert_eq!(lines.count(), 256);
}

#[test]
fn config_problems_exit_with_2() {
    let dir = scratch("badcfg");
    // Unknown key.
    let cfg = write_config(&dir, "waveform = FBMC-OQAM\nbogus_key = 1\n");
    let out = run_cli(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(!out.stderr.is_empty());

    // Missing file.
    let missing = dir.join("nope.cfg");
    let out = run_cli(&["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Bad flag value for the filter dump.
    let out = run_cli(&["filter", "dump", "--k", "9", "--subcarriers", "64"]);
    assert_eq!(out.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn runtime_failures_exit_with_3() {
    let dir = scratch("runtime");
    // Structurally valid, but the 6-tap delay spread cannot fit 4
    // subcarriers' worth of samples: the chain fails while building the
    // channel, which is a runtime error, not a config parse error.
    let cfg = write_config(
        &dir,
        "waveform = CP-OFDM\nnum_subcarriers = 4\nnum_real_symbols = 4\ncp_length = 2\n\
         channel_profile = ITU_VehA\nchannel_estimation = known\ntrials = 1\n",
    );
    let out = run_cli(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let _ = std::fs::remove_dir_all(&dir);
}
