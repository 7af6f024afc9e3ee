use std::process::{Command, Output};

fn rearrange(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rearrange"))
        .args(args)
        .env_remove("REARRANGE_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

#[test]
fn parity_semenov_constant_is_two() {
    let out = rearrange(&["semenov", "--builder", "parity", "--depth", "2", "--mode", "exact"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["result"]["ratio"], "2");
    assert_eq!(v["result"]["exact"], true);
    assert!(!v["result"]["witness"].as_array().unwrap().is_empty());
    assert_eq!(v["config"]["args"]["map"]["builder"], "parity");
}

#[test]
fn identity_norm_is_one() {
    let out = rearrange(&["norm", "--builder", "identity", "--p", "1.5", "--depth", "3"]);
    assert!(out.status.success());
    let v = json(&out);
    let value = v["result"]["value"].as_f64().unwrap();
    assert!((value - 1.0).abs() <= 1e-6, "{value}");
    assert!(v["result"]["witness"].is_object());
}

#[test]
fn sweep_table_increases() {
    let out = rearrange(&[
        "sweep",
        "--builder",
        "glued",
        "--space",
        "lp:1.2:16",
        "--q",
        "2",
        "--n",
        "1..3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "n,lower_bound,witness_ratio,seconds");
    let mut prev = 0.0;
    for (n, row) in (1..=3).zip(&rows[1..]) {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        let expected = (n as f64).powf(1.0 / 1.2 - 0.5);
        assert!(cols[1] >= expected * (1.0 - 1e-6) && cols[1] > prev);
        prev = cols[1];
    }
}

#[test]
fn same_seed_same_bytes() {
    let args = [
        "norm",
        "--builder",
        "random",
        "--depth",
        "3",
        "--p",
        "3",
        "--restarts",
        "8",
        "--seed",
        "17",
    ];
    let (a, b) = (rearrange(&args), rearrange(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = rearrange(&[
        "norm",
        "--builder",
        "random",
        "--depth",
        "3",
        "--p",
        "3",
        "--restarts",
        "8",
        "--seed",
        "18",
    ]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn seed_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_rearrange"))
        .args(["umd", "--p", "3", "--depth", "1", "--restarts", "4"])
        .env("REARRANGE_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(json(&out)["config"]["seed"], 42);
}

#[test]
fn failing_check_exits_one_with_counterexample() {
    let out = rearrange(&[
        "verify-maximal",
        "--builder",
        "parity",
        "--depth",
        "4",
        "--kappa",
        "1",
        "--samples",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["pass"], false);
    assert!(v["result"]["counterexample"]["sequence"].is_object());
}

#[test]
fn passing_checks_exit_zero() {
    for args in [
        &[
            "verify-maximal",
            "--builder",
            "glued",
            "--depth",
            "5",
            "--kappa",
            "3",
            "--samples",
            "100",
        ][..],
        &[
            "verify-monotone",
            "--builder",
            "parity",
            "--depth",
            "3",
            "--operator",
            "rademacher",
            "--samples",
            "50",
        ],
        &[
            "condition-c",
            "--builder",
            "parity",
            "--depth",
            "2",
            "--root",
            "0:0",
            "--kappa",
            "2",
        ],
    ] {
        let out = rearrange(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        assert_eq!(json(&out)["pass"], true);
    }
}

#[test]
fn invalid_configuration_is_a_usage_error() {
    for args in [
        &["semenov", "--builder", "parity", "--depth", "2", "--cap", "31"][..],
        &["norm", "--p", "2"],
        &["norm", "--builder", "identity", "--depth", "2", "--p", "0.5"],
        &[
            "norm",
            "--builder",
            "parity",
            "--depth",
            "2",
            "--p",
            "3",
            "--mode",
            "exact",
        ],
        &["sweep", "--space", "lp:1.2:2", "--q", "2", "--n", "1..3"],
        &["type", "--space", "lp:0.5:2", "--p", "2", "--n", "2"],
        &["frobnicate"],
    ] {
        let out = rearrange(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn example_map_round_trips_through_norm() {
    let dir = std::env::temp_dir().join(format!("rearrange-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("parity.json");
    let out = rearrange(&[
        "example",
        "--builder",
        "parity",
        "--depth",
        "3",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let norm = rearrange(&["norm", "--map", path.to_str().unwrap(), "--p", "2"]);
    let v = json(&norm);
    assert_eq!(v["result"]["kind"], "exact");
    assert!((v["result"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let semenov = rearrange(&["semenov", "--map", path.to_str().unwrap(), "--mode", "shadow"]);
    assert_eq!(json(&semenov)["result"]["ratio"], "2");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn carleson_of_a_chain() {
    let out = rearrange(&["carleson", "--intervals", "0:0,1:0,2:0"]);
    let v = json(&out);
    assert_eq!(v["result"]["carleson_constant"], "7/4");
    assert_eq!(v["result"]["union_measure"], "1");
}
