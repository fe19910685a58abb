use std::path::PathBuf;
use std::process::{Command, Output};

use wardrop_approx_cli::load_config;
use wardrop_approx_cli::report::read_csv;

fn example(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wardrop-approx")).args(args).output().unwrap()
}

#[test]
fn bundled_configs_parse() {
    for name in ["two_links.cfg", "two_links_no_utility.cfg"] {
        let cfg = load_config(&example(name)).unwrap();
        assert_eq!(cfg.experiment.nu, vec![5, 20, 40, 100]);
        assert_eq!(cfg.links.len(), 2);
    }
}

#[test]
fn validate_accepts_bundled_config() {
    let out = run(&["validate", "--config", example("two_links.cfg").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok:"));
}

#[test]
fn invalid_config_exits_with_one_and_lists_problems() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(
        &path,
        "[experiment]\nnu = [0]\n\n[[links]]\nkind = \"affine\"\nslope = -1.0\nintercept = 0.0\n\n\
         [[segments]]\nstart = 0.0\nend = 0.5\nset = { kind = \"simplex\", demand = { kind = \"constant\", value = 1.0 } }\n",
    )
    .unwrap();
    let out = run(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("nu"), "{err}");
    assert!(err.contains("links"), "{err}");
    assert!(err.contains("segments"), "{err}");
}

#[test]
fn missing_config_exits_with_three() {
    let out = run(&["validate", "--config", "/nonexistent/config.cfg"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bounds_prints_constants() {
    let out = run(&["bounds", "--config", example("two_links.cfg").to_str().unwrap(), "--nu", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for key in ["players = 20", "c_min = ", "alpha = ", "bound_no_u = ", "bound_with_u_trunc = "] {
        assert!(text.contains(key), "{key} missing from {text}");
    }
}

#[test]
fn solve_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "solve",
        "--config",
        example("two_links_no_utility.cfg").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--nu-ref",
        "200",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["report.csv", "reference_profile.csv", "plot.csv", "checks.csv", "jumps.csv", "profile_nu5.csv"] {
        assert!(dir.path().join(file).exists(), "{file}");
    }
    let report = read_csv(std::fs::File::open(dir.path().join("report.csv")).unwrap()).unwrap();
    assert_eq!(report.rows.len(), 4);
    assert!(report.rows.iter().all(|r| r.converged && r.seconds == 0.0));
}
