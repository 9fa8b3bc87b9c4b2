use std::fs;
use std::process::{Command, Output};

use cavity_readout_cli::config::{ScenarioConfig, ScenarioName};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavity-readout"))
        .args(args)
        .output()
        .unwrap()
}

fn header(stdout: &[u8]) -> String {
    String::from_utf8_lossy(stdout)
        .lines()
        .find(|l| !l.starts_with('#'))
        .unwrap_or_default()
        .to_string()
}

#[test]
fn headers_match_the_documented_columns() {
    for (cmd, cols) in [
        ("bounds", "n,eps_H,I_max,I_accessible_model"),
        ("zeno", "n,p_obs_model_state1,p_obs_model_state0,n_tilde"),
        ("depump", "n,S_model"),
        (
            "figure4",
            "m,free_space_bound,I_max_cavity,I_acc_perfect_detectors,I_acc_experiment",
        ),
    ] {
        let out = run(&[cmd]);
        assert!(out.status.success(), "{cmd}");
        assert_eq!(header(&out.stdout), cols);
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.starts_with("# scenario=paper\n# seed=20110101\n# version="));
    }
    let out = run(&["detect", "--trials", "200"]);
    assert_eq!(header(&out.stdout), "n,eps_mc,ci,eps_exact,eps_mc_jumps");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["bounds", "--frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["bounds", "--scenario", "nowhere"]).status.code(), Some(1));
    assert_eq!(run(&["bounds", "--scenario", "custom"]).status.code(), Some(1));
    assert_eq!(run(&["bounds", "--config", "/nonexistent.toml"]).status.code(), Some(1));
    assert_eq!(run(&["detect", "--trials", "0"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let strong = dir.path().join("strong.toml");
    let text = ScenarioConfig::paper_toml().replace("drive_ratio = 0.00025", "drive_ratio = 0.2");
    fs::write(&strong, text).unwrap();
    let out = run(&["lindblad", "--config", strong.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_keys_fail_before_computing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    fs::write(
        &path,
        ScenarioConfig::paper_toml().replace("[zeno]", "[zeno]\ntua = 8.8"),
    )
    .unwrap();
    let out = run(&["detect", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("tua"));
}

#[test]
fn exported_config_reproduces_the_built_in_scenario() {
    let dir = tempfile::tempdir().unwrap();
    for name in ScenarioName::BUILT_IN {
        let path = dir.path().join(format!("{name}.toml"));
        let path = path.to_str().unwrap();
        let out = run(&["validate-config", "--scenario", name.as_str(), "--out", path]);
        assert!(out.status.success());
        let parsed = ScenarioConfig::load(path.as_ref()).unwrap();
        assert_eq!(parsed, ScenarioConfig::built_in(name).unwrap());

        let from_file = run(&["figure4", "--config", path]);
        let built_in = run(&["figure4", "--scenario", name.as_str()]);
        assert!(from_file.status.success());
        assert_eq!(from_file.stdout, built_in.stdout);
    }
}

#[test]
fn output_path_and_seed_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("detect.csv");
    let out = run(&[
        "detect",
        "--trials",
        "500",
        "--seed",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains("# seed=3\n"));
    let first: Vec<f64> = text
        .lines()
        .find(|l| l.starts_with("0,"))
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    // Half the 1000 records are wrong at n = 0; Wilson half-width at z = 1.
    let records = 1000.0f64;
    let wilson = (0.25 / records + 0.25 / (records * records)).sqrt() / (1.0 + 1.0 / records);
    assert_eq!(first[..2], [0.0, 0.5]);
    assert!((first[2] - wilson).abs() < 1e-15);
    assert_eq!(first[3..], [0.5, 0.5]);
}

#[test]
fn fluorescence_scenario_has_free_space_overlap() {
    let out = run(&["bounds", "--scenario", "ideal-fluorescence"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# scenario=ideal-fluorescence\n"));
    assert!(text.contains("# zeta=2\n"));
}

#[test]
fn improved_cavity_reaches_about_110_per_scatter() {
    let out = run(&["figure4", "--scenario", "improved-cavity"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let exponent: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# exponent_experiment="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((exponent / 110.0 - 1.0).abs() < 0.3, "{exponent}");
}
