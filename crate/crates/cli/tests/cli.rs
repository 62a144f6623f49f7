//! End-to-end command-line tests: the worked four-ion pipeline, exit codes,
//! and artifact determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spinforge"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn spinforge")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spinforge-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

#[test]
fn modes_exports_both_branches() {
    let dir = tmp("modes");
    let out = run(&["modes", "--n", "4", "--out", "m"], &dir);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("m/modes_transverse.csv")).unwrap();
    assert!(csv.starts_with("# schema_version=1"));
    assert!(csv
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("frequency_hz,b_1,b_2,b_3,b_4"));
    assert_eq!(csv.lines().count(), 6);
    assert!(dir.join("m/modes_axial.csv").exists());
}

#[test]
fn missing_trap_file_names_the_path() {
    let dir = tmp("missing");
    let out = run(&["modes", "--trap", "nope/trap.json"], &dir);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("nope/trap.json"), "stderr: {err}");
}

#[test]
fn unknown_flag_exits_one() {
    let dir = tmp("flag");
    let out = run(&["modes", "--frobnicate"], &dir);
    assert_eq!(code(&out), 1);
}

#[test]
fn four_ion_pipeline_design_validate_evolve_report() {
    let dir = tmp("pipeline");
    let design = run(
        &[
            "design",
            "--target",
            "schwinger",
            "--n",
            "4",
            "--x",
            "6",
            "--mu",
            "1",
            "--scheme",
            "single",
            "--seed",
            "7",
            "--out",
            "d",
        ],
        &dir,
    );
    assert_eq!(
        code(&design),
        0,
        "{}",
        String::from_utf8_lossy(&design.stderr)
    );
    for artifact in [
        "design.json",
        "drive_i.json",
        "drive_ii.json",
        "drive_iii.json",
        "fit_xx.json",
        "fit_yy.json",
        "fit_zz.json",
        "target.json",
        "target_jzz.csv",
    ] {
        assert!(dir.join("d").join(artifact).exists(), "missing {artifact}");
    }

    let validate = run(
        &[
            "validate",
            "--design",
            "d/design.json",
            "--tmax-ms",
            "0.4",
            "--steps",
            "24",
            "--out",
            "v",
        ],
        &dir,
    );
    assert_eq!(
        code(&validate),
        0,
        "{}",
        String::from_utf8_lossy(&validate.stderr)
    );
    assert!(dir.join("v/panels.csv").exists());
    assert!(dir.join("v/constraints.json").exists());
    assert!(dir.join("v/first_order_bound.json").exists());
    let constraints = std::fs::read_to_string(dir.join("v/constraints.json")).unwrap();
    assert!(constraints.contains("\"passed\": true"));
    let panels = std::fs::read_to_string(dir.join("v/panels.csv")).unwrap();
    assert!(panels
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("t_ms,panel,series,re,im"));

    let evolve = run(
        &[
            "evolve",
            "--n",
            "4",
            "--x",
            "0.6",
            "--mu",
            "0.1",
            "--tmax",
            "40",
            "--steps",
            "40",
            "--ensemble",
            "24",
            "--out",
            "e",
        ],
        &dir,
    );
    assert_eq!(
        code(&evolve),
        0,
        "{}",
        String::from_utf8_lossy(&evolve.stderr)
    );
    assert!(dir.join("e/vpa.csv").exists());
    assert!(dir.join("e/band.csv").exists());

    let report = run(&["report", "--design", "d/design.json", "--out", "r"], &dir);
    assert_eq!(
        code(&report),
        0,
        "{}",
        String::from_utf8_lossy(&report.stderr)
    );
    let summary = std::fs::read_to_string(dir.join("r/summary.json")).unwrap();
    assert!(summary.contains("\"constraints_passed\": true"));
}

#[test]
fn zero_budget_design_is_infeasible_exit_two() {
    let dir = tmp("budget");
    let out = run(
        &[
            "design",
            "--n",
            "4",
            "--scheme",
            "multi",
            "--budget-mhz",
            "0",
            "--out",
            "b",
        ],
        &dir,
    );
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn evolve_zero_grid_gives_single_unit_row() {
    let dir = tmp("zero");
    let out = run(&["evolve", "--n", "4", "--tmax", "0", "--out", "z"], &dir);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("z/vpa.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 3, "header lines plus one data row: {csv}");
    assert!(rows[2].starts_with("0.0000000000000000e0,1.0000000000000000e0"));
}

#[test]
fn identical_seeds_give_byte_identical_artifacts() {
    let dir = tmp("determinism");
    let args = [
        "design",
        "--target",
        "schwinger",
        "--n",
        "4",
        "--x",
        "6",
        "--mu",
        "1",
        "--scheme",
        "multi",
        "--seed",
        "21",
    ];
    let mut first = args.to_vec();
    first.extend(["--out", "a"]);
    let mut second = args.to_vec();
    second.extend(["--out", "b"]);
    assert_eq!(code(&run(&first, &dir)), 0);
    assert_eq!(code(&run(&second, &dir)), 0);
    for artifact in [
        "drive_i.json",
        "drive_iii.json",
        "fit_zz.json",
        "target_jxx.csv",
    ] {
        let a = std::fs::read(dir.join("a").join(artifact)).unwrap();
        let b = std::fs::read(dir.join("b").join(artifact)).unwrap();
        assert_eq!(a, b, "{artifact} differs between identical runs");
    }
}

#[test]
fn raman_defaults_report_force_balance() {
    let dir = tmp("raman");
    let out = run(&["raman", "--out", "r"], &dir);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.join("r/raman.json")).unwrap();
    assert!(report.contains("\"force_balanced\": true"));
}

#[test]
fn xy_and_ising_targets_design_through_the_registry() {
    let dir = tmp("registry");
    // 2x2 XY lattice on four ions, multi-frequency scheme.
    let xy = run(
        &[
            "design", "--target", "xy2d", "--n", "4", "--lx", "2", "--ly", "2", "--out", "xy",
        ],
        &dir,
    );
    assert_eq!(code(&xy), 0, "{}", String::from_utf8_lossy(&xy.stderr));
    // 3x3 site lattice -> 2x2 dual Ising on four ions.
    let ising = run(
        &[
            "design", "--target", "z2-ising", "--n", "4", "--l", "3", "--lambda", "0.8", "--out",
            "is",
        ],
        &dir,
    );
    assert_eq!(
        code(&ising),
        0,
        "{}",
        String::from_utf8_lossy(&ising.stderr)
    );
    let target = std::fs::read_to_string(dir.join("is/target.json")).unwrap();
    assert!(target.contains("\"bx\""));

    let unknown = run(&["design", "--target", "su3", "--out", "u"], &dir);
    assert_eq!(code(&unknown), 1);
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("available"));
}

#[test]
fn external_mode_tables_feed_a_design() {
    let dir = tmp("modecsv");
    assert_eq!(code(&run(&["modes", "--n", "4", "--out", "m"], &dir)), 0);
    let out = run(
        &[
            "design",
            "--n",
            "4",
            "--scheme",
            "single",
            "--transverse-csv",
            "m/modes_transverse.csv",
            "--axial-csv",
            "m/modes_axial.csv",
            "--out",
            "d",
        ],
        &dir,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("d/design.json").exists());
}
