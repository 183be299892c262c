use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[scenario]
M = 4
N = 4
L = 2
r_a_m = 10.0
r_u_m = 100.0
x_u_m = 200.0
trials = 20

[grid]
x_min_m = 0.0
x_max_m = 400.0
x_step_m = 200.0
z_min_m = 20.0
z_max_m = 220.0
z_step_m = 100.0
trials = 10

[sweep]
l_values = [1, 2]
r_a_values = [5.0, 10.0]
r_u_values = [50.0]

[est]
n_groups = [1, 8]
pilot_snr_db = [10.0, "inf"]
"#;

fn saris(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_saris"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn saris")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn each_subcommand_writes_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let cases = [
        ("deploy-map", "x_m,z_m,mean_gain_db", 9),
        ("rate-vs-uavs", "L,mean_rate_bps_hz,baseline_rate_bps_hz,ci95", 2),
        ("rate-vs-radius", "r_a_m,r_u_m,mean_rate_bps_hz,ci95", 2),
        ("estimate", "n_groups,overhead,pilot_snr_db,mse,rate_perfect,rate_estimated", 4),
    ];
    for (cmd, header, rows) in cases {
        let out = dir.path().join(format!("{cmd}.csv"));
        let res = saris(dir.path(), &[cmd, "--config", &cfg, "--seed", "3", "--out", out.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&res.stderr));
        let text = fs::read_to_string(&out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with(&format!("# command={cmd} seed=3 config_sha256=")), "{}", lines[0]);
        assert_eq!(lines[0].rsplit('=').next().unwrap().len(), 64);
        assert_eq!(lines[1], header);
        assert_eq!(lines.len() - 2, rows, "{cmd}");
        let cols = header.split(',').count();
        for line in &lines[2..] {
            assert_eq!(line.split(',').count(), cols, "{line}");
        }
    }
}

#[test]
fn preset_runs_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("est.csv");
    let res = saris(
        dir.path(),
        &[
            "estimate", "--config", "estimation", "--trials", "2", "--groups", "1,200", "--pilot-snr", "inf",
            "--out", out.to_str().unwrap(),
        ],
    );
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(2).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][..3], ["1", "2", "inf"]);
    assert_eq!(rows[1][..3], ["200", "201", "inf"]);
}

#[test]
fn default_output_goes_to_results_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let res = saris(dir.path(), &["deploy-map", "--config", &cfg]);
    assert_eq!(res.status.code(), Some(0));
    assert!(dir.path().join("results/deploy_map.csv").is_file());
    assert!(String::from_utf8_lossy(&res.stdout).contains("wrote results/deploy_map.csv"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let res = saris(dir.path(), &["deploy-map", "--bogus"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("Usage"));
    assert_eq!(saris(dir.path(), &["teleport"]).status.code(), Some(1));
    assert_eq!(saris(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = dir.path().join("bad_key.toml");
    fs::write(&bad_key, format!("{SMALL}\n[extra]\nwarp = 9\n")).unwrap();
    let res = saris(dir.path(), &["deploy-map", "--config", bad_key.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("extra.warp"));

    let missing = dir.path().join("missing.toml");
    fs::write(&missing, "[scenario]\nL = 3\nr_a_m = 10.0\n").unwrap();
    let res = saris(dir.path(), &["deploy-map", "--config", missing.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("scenario.r_u_m") && err.contains("scenario.x_u_m"), "{err}");

    let cfg = small_config(dir.path());
    let res = saris(dir.path(), &["estimate", "--config", &cfg, "--groups", "3"]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(saris(dir.path(), &["deploy-map", "--config", "nowhere"]).status.code(), Some(1));
}

#[test]
fn unwritable_output_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("x.csv");
    let res = saris(dir.path(), &["deploy-map", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn identical_runs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    for cmd in ["deploy-map", "rate-vs-uavs", "rate-vs-radius", "estimate"] {
        let run = |name: &str, seed: &str| {
            let out = dir.path().join(name);
            let res = saris(dir.path(), &[cmd, "--config", &cfg, "--seed", seed, "--out", out.to_str().unwrap()]);
            assert_eq!(res.status.code(), Some(0));
            fs::read(out).unwrap()
        };
        let a = run("a.csv", "11");
        assert_eq!(a, run("b.csv", "11"), "{cmd}");
        assert_ne!(a, run("c.csv", "12"), "{cmd}");
    }
}
