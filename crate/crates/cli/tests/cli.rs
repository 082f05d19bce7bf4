use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn truncsde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_truncsde"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const SMALL: [&str; 8] = ["--paths", "200", "-T", "1", "--ref-m", "9", "--dt", "2^-5..2^-7"];

#[test]
fn empty_argv_prints_usage_and_fails() {
    let o = truncsde(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
}

#[test]
fn non_dyadic_dt_is_a_usage_error() {
    let o = truncsde(&["convergence", "--dt", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dt must be dyadic multiple of reference step"), "{}", stderr(&o));
}

#[test]
fn unknown_names_are_usage_errors() {
    for args in [
        &["convergence", "--schemes", "rk4"][..],
        &["check", "--model", "vasicek"],
        &["convergence", "--model", "example-3-2", "--schemes", "stem"],
        &["convergence", "--kappa", "2"],
    ] {
        let o = truncsde(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).starts_with("error: "), "{args:?}");
    }
}

#[test]
fn convergence_is_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        let mut args = vec!["convergence", "--model", "example-3-2", "--seed", "42", "--threads", threads];
        args.extend(SMALL);
        args.extend(["--output", path.to_str().unwrap()]);
        let o = truncsde(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(o.stdout.is_empty());
        fs::read(path).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "3");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("scheme,dt,rmse,n_excluded,rate,p_hat,ci,seconds"));
    // 2 schemes × 3 step sizes, then one rate row per scheme
    assert_eq!(lines.count(), 8);
    let mut names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names, ["a.csv", "b.csv", "c.csv"]);
}

#[test]
fn check_reports_ait_validity() {
    let o = truncsde(&["check", "--model", "example-ait"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("κ+1 = 5 > 2θ = 3: validity OK"), "{}", stdout(&o));
}

#[test]
fn check_reports_cir_lamperti_constants() {
    let o = truncsde(&["check", "--model", "example-cir"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("ϖ = 2b1b2/σ² = 6 > 5: Lamperti corollary OK"), "{s}");
    assert!(s.contains("â = (4b1b2 − σ²)/8 = 1.375"), "{s}");
    assert!(s.contains("b̂ = −b1/2 = -0.5"), "{s}");
}

#[test]
fn check_reports_three_halves_threshold() {
    let o = truncsde(&["check", "--model", "example-3-2", "--sigma", "1"]);
    let s = stdout(&o);
    assert!(s.contains("λ = 2 + 2c1/σ² = 10"), "{s}");
    assert!(s.contains("TEM corollary (λ > 6): OK"));
    assert!(s.contains("bound K = 8: OK"));

    // λ = 4: warning and fallback, not an error
    let o = truncsde(&["check", "--model", "example-3-2", "--sigma", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("TEM corollary (λ > 6): FAILED"));
    assert!(stderr(&o).contains("falls back to the generic truncation exponent"));
}

#[test]
fn config_file_round_trips_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("exp.cfg");
    fs::write(
        &file,
        "# table run\nmodel = example-ait\nschemes = tem, tmil, stem  # three of them\ndt = 2^-6..2^-8\nseed = 7\n",
    )
    .unwrap();
    let print = |cfg: &Path, extra: &[&str]| {
        let mut args = vec!["convergence", "--print-config", "--config", cfg.to_str().unwrap()];
        args.extend(extra);
        let o = truncsde(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
    };
    let first = print(&file, &["--seed", "9"]);
    assert!(first.contains("seed = 9\n"), "{first}");
    assert!(first.contains("schemes = tem,tmil,stem\n"));
    assert!(first.contains("l1 = 50\n"));
    let again = dir.path().join("again.cfg");
    fs::write(&again, &first).unwrap();
    assert_eq!(print(&again, &[]), first);
}

#[test]
fn bad_config_line_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.cfg");
    fs::write(&file, "paths 100\n").unwrap();
    let o = truncsde(&["check", "--config", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"));
}

#[test]
fn all_cells_failing_is_a_runtime_error() {
    // sup f' = c1 c2 = 16, so BEM is refused at both step sizes
    let o = truncsde(&[
        "convergence", "--model", "three-halves", "--c1", "16", "--schemes", "bem", "--dt", "2^-2,2^-3", "--paths", "10",
        "--ref-m", "4", "-T", "1",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).starts_with("scheme,dt,rmse"));
    assert!(stderr(&o).contains("every cell failed"));
}

#[test]
fn positivity_and_compare_and_simulate_write_csv() {
    let o = truncsde(&["positivity", "--paths", "100", "--ref-m", "7", "--dt", "2^-3..2^-5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 4);

    let o = truncsde(&[
        "compare", "--model", "example-ait", "--schemes", "tem,bem", "--dt", "2^-6", "--paths", "50", "--ref-m", "8", "-T",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    let rows: Vec<_> = s.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| !r.ends_with(',')), "seconds column filled: {s}");

    let o = truncsde(&["simulate", "--dt", "2^-2", "--paths", "2", "-T", "1", "--ref-m", "4"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("path,k,t,x_raw,x_pos\n0,0,0,2,2\n"), "{s}");
    // 2 paths × 5 grid points
    assert_eq!(s.lines().count(), 11);
}
