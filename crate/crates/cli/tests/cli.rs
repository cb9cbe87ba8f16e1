//! End-to-end runs of the `dcf` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn dcf(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcf"))
        .args(args)
        .arg(format!("out={}", out.display()))
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn header(dir: &Path, name: &str) -> String {
    read(dir, name)
        .lines()
        .next()
        .unwrap_or_default()
        .to_string()
}

#[test]
fn delay_analysis_reports_slots_of_delay() {
    let dir = TempDir::new().unwrap();
    let o = dcf(&["mode=analyze-delay", "delta_us=140", "n=2"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(dir.path(), "analyze-delay_run.csv");
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("m,delta_us,sigma_us,gamma,theta,beta_d,beta_s,beta_c,beta")
    );
    assert!(lines.next().unwrap().starts_with("7,140,20,"));
}

#[test]
fn delay_with_three_nodes_exits_with_validation_error() {
    let dir = TempDir::new().unwrap();
    let o = dcf(&["mode=analyze-delay", "n=3", "delta_us=140"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("delay analysis supports n=2 only"));
}

#[test]
fn unknown_key_and_bad_flag_exit_with_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        dcf(&["mode=bianchi", "speed=3"], dir.path()).status.code(),
        Some(1)
    );
    assert_eq!(
        dcf(&["--mode", "bianchi", "--bogus"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        dcf(&["--mode", "bianchi", "--n", "0"], dir.path())
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn flags_override_configuration_file() {
    let dir = TempDir::new().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(
        &conf,
        "# classical fixed point\nmode=bianchi\nn=2;3\nlabel=file\n",
    )
    .unwrap();
    let o = dcf(
        &["--config", conf.to_str().unwrap(), "--n", "4..6"],
        dir.path(),
    );
    assert!(o.status.success());
    let text = read(dir.path(), "bianchi_file.csv");
    let ns: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(ns, ["4", "5", "6"]);
}

#[test]
fn mean_backoff_schedule_matches_preset() {
    let dir = TempDir::new().unwrap();
    let a = dcf(
        &[
            "mode=bianchi",
            "n=2..4",
            "schedule=K:7;b:1,3,9,27,81,243,729,2187",
            "label=a",
        ],
        dir.path(),
    );
    let b = dcf(
        &["mode=bianchi", "n=2..4", "schedule=seq1", "label=b"],
        dir.path(),
    );
    assert!(a.status.success() && b.status.success());
    assert_eq!(
        read(dir.path(), "bianchi_a.csv"),
        read(dir.path(), "bianchi_b.csv")
    );
}

#[test]
fn simulation_output_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let args = [
        "mode=simulate",
        "n=3",
        "cycles=2000",
        "seed=5",
        "trace=true",
        "window=200",
        "schedule=seq3",
    ];
    let first = TempDir::new().unwrap();
    assert!(dcf(&args, first.path()).status.success());
    assert!(dcf(&args, dir.path()).status.success());
    for name in [
        "simulate_run.csv",
        "simulate_run_trace.csv",
        "simulate_run_unfairness.csv",
    ] {
        assert_eq!(read(first.path(), name), read(dir.path(), name), "{name}");
    }
    assert_eq!(
        header(dir.path(), "simulate_run_trace.csv"),
        "cycle,kind,winner,attackers,duration_us,misalignment"
    );
    assert_eq!(
        read(dir.path(), "simulate_run_trace.csv").lines().count(),
        2001
    );
    assert_eq!(
        header(dir.path(), "simulate_run_unfairness.csv"),
        "window_index,node,gamma"
    );
}

#[test]
fn compare_writes_joined_table_and_errors() {
    let dir = TempDir::new().unwrap();
    let o = dcf(
        &["mode=compare", "schedule=seq3", "n=2;3", "cycles=20000"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        header(dir.path(), "compare_run.csv"),
        "n,gamma_sim,gamma_mrp,gamma_bianchi,theta_sim,theta_mrp,beta_d,beta_s,beta_c,beta"
    );
    let text = read(dir.path(), "compare_run.csv");
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert!(row.iter().all(|f| !f.is_empty()));
    assert_eq!(
        read(dir.path(), "compare_run_errors.csv").lines().count(),
        3
    );
}

#[test]
fn every_mode_writes_its_documented_header() {
    let dir = TempDir::new().unwrap();
    let cases: [(&[&str], &str, &str); 6] = [
        (
            &["mode=analyze-zero", "n=2;5"],
            "analyze-zero_run.csv",
            "n,gamma_sim,gamma_mrp,gamma_bianchi,theta_sim,theta_mrp,beta_d,beta_s,beta_c,beta",
        ),
        (
            &["mode=bianchi", "n=2..10"],
            "bianchi_run.csv",
            "n,gamma_fp",
        ),
        (
            &["mode=meanfield", "schedule=seq1", "mu0=uniform"],
            "meanfield_run.csv",
            "t,norm_diff",
        ),
        (
            &["mode=fairness", "n=3", "L=1;10"],
            "fairness_run_jain.csv",
            "L,J",
        ),
        (
            &["mode=sweep-slot", "delta_us=60", "m_max=4"],
            "sweep-slot_run.csv",
            "m,sigma_us,theta",
        ),
        (
            &["mode=sweep-minbe", "delta_us=40", "minbe_range=4..6"],
            "sweep-minbe_run.csv",
            "minBE,EU1,feasible,theta",
        ),
    ];
    for (args, file, expected) in cases {
        let o = dcf(args, dir.path());
        assert!(
            o.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert_eq!(header(dir.path(), file), expected, "{args:?}");
    }
    assert_eq!(header(dir.path(), "fairness_run_runs.csv"), "param,r11,EU1");
}

#[test]
fn minbe_fairness_table_lists_each_candidate() {
    let dir = TempDir::new().unwrap();
    let o = dcf(
        &["mode=fairness", "delta_us=200", "minbe_range=6..8"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(dir.path(), "fairness_run_runs.csv");
    let params: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(params, ["6", "7", "8"]);
}

#[test]
fn sweep_slot_needs_positive_delay() {
    let dir = TempDir::new().unwrap();
    assert_eq!(dcf(&["mode=sweep-slot"], dir.path()).status.code(), Some(1));
}
