use pmbench::{execute, Status};
use std::path::Path;
use std::process::Command;

fn pmbench(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pmbench"))
        .args(args)
        .env_remove("PRECOND_MOMENTUM_CACHE")
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn run_csv(args: &[&str]) -> (Status, String) {
    let mut argv = vec!["pmbench"];
    argv.extend_from_slice(args);
    let (out, _) = execute(argv).unwrap();
    (out.status, out.csv)
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn without_column(csv: &str, col: usize) -> String {
    csv.lines()
        .map(|l| {
            let mut f: Vec<_> = l.split(',').collect();
            f.remove(col);
            f.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn fixture(dir: &Path, n: usize) -> std::path::PathBuf {
    // sparse binary rows, label from the first two features
    let mut text = String::new();
    for i in 0..n {
        let a = i % 3 == 0;
        let b = i % 5 < 2;
        let label = if a ^ b { "+1" } else { "-1" };
        let mut feats = Vec::new();
        if a {
            feats.push("1:1".to_string());
        }
        if b {
            feats.push("2:1".to_string());
        }
        feats.push(format!("{}:1", 3 + i % 7));
        text.push_str(&format!("{label} {}\n", feats.join(" ")));
    }
    let path = dir.join("toy.libsvm");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn unit_step_gd_converges_in_one_row() {
    let (status, csv) = run_csv(&[
        "run",
        "--method",
        "gd",
        "--synthetic",
        "quad:d=1,kappa=1",
        "--gamma",
        "1",
    ]);
    assert_eq!(status, Status::Success);
    assert_eq!(
        csv.lines().next().unwrap(),
        "iter,f,grad_sq_norm,elapsed_ms,dhat_min,dhat_max"
    );
    let r = rows(&csv);
    assert_eq!(r.len(), 2);
    assert_eq!(r[1][0], "1");
    assert!(r[1][2].parse::<f64>().unwrap() <= 1e-20);
}

#[test]
fn row_count_follows_the_stopping_rule() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(dir.path(), 120);
    for (iters, tol) in [("30", "1e-4"), ("5000", "1e-4")] {
        let (_, csv) = run_csv(&[
            "run",
            "--method",
            "phb",
            "--beta1",
            "0.9",
            "--precond",
            "adam",
            "--gamma",
            "0.05",
            "--dataset",
            data.to_str().unwrap(),
            "--iters",
            iters,
            "--tol",
            tol,
        ]);
        assert!(csv.lines().next().unwrap().ends_with(",test_loss"));
        let r = rows(&csv);
        let first_hit = r.iter().position(|row| row[2].parse::<f64>().unwrap() <= 1e-4);
        let budget: usize = iters.parse().unwrap();
        assert_eq!(r.len(), first_hit.unwrap_or(budget).min(budget) + 1);
        assert!(r.iter().all(|row| row[6].parse::<f64>().unwrap().is_finite()));
    }
}

#[test]
fn seeded_runs_repeat_byte_for_byte() {
    let args = [
        "run",
        "--method",
        "pn",
        "--precond",
        "oasis",
        "--synthetic",
        "logistic:n=150,d=8",
        "--gamma",
        "0.2",
        "--iters",
        "200",
        "--seed",
        "17",
    ];
    let (_, a) = run_csv(&args);
    let (_, b) = run_csv(&args);
    assert_eq!(without_column(&a, 3), without_column(&b, 3));
    let mut other = args.to_vec();
    let last = other.len() - 1;
    other[last] = "18";
    let (_, c) = run_csv(&other);
    assert_ne!(without_column(&a, 3), without_column(&c, 3));
}

#[test]
fn compare_reports_every_method() {
    let (status, csv) = run_csv(&[
        "compare",
        "--synthetic",
        "quad:d=10,kappa=50",
        "--gamma",
        "grid",
        "--iters",
        "2000",
        "--tol",
        "1e-8",
        "--select",
        "iters",
    ]);
    assert_eq!(status, Status::Success);
    assert_eq!(csv.lines().next().unwrap(), "method,iter,f,grad_sq_norm");
    let methods: std::collections::BTreeSet<_> = rows(&csv).into_iter().map(|r| r[0].clone()).collect();
    assert_eq!(methods.len(), 4);

    let mut argv = vec![
        "pmbench",
        "compare",
        "--synthetic",
        "quad:d=10,kappa=50",
        "--method",
        "pn",
    ];
    argv.extend(["--gamma", "0.01", "--iters", "50"]);
    let (out, _) = execute(argv).unwrap();
    assert_eq!(out.report.lines().count(), 2);
    assert!(out.report.lines().nth(1).unwrap().starts_with("pn,"));
}

#[test]
fn diverging_member_is_marked_and_exit_stays_zero() {
    let base = [
        "compare",
        "--synthetic",
        "quad:d=20,kappa=100",
        "--gamma",
        "1",
        "--iters",
        "3000",
    ];
    let mut argv = base.to_vec();
    argv.extend(["--method", "gd,phb", "--out", "/dev/null"]);
    let (code, stdout, _) = pmbench(&argv);
    assert_eq!(code, 0);
    let gd = stdout.lines().find(|l| l.starts_with("gd,")).unwrap();
    assert!(gd.contains(",diverged,"), "{stdout}");
    assert!(!stdout
        .lines()
        .find(|l| l.starts_with("phb,"))
        .unwrap()
        .contains("diverged"));

    let mut argv = base.to_vec();
    argv.extend(["--method", "gd,heavy-ball", "--out", "/dev/null"]);
    assert_eq!(pmbench(&argv).0, 2);
}

#[test]
fn tune_picks_the_exact_step() {
    let (_, csv) = run_csv(&[
        "tune",
        "--method",
        "gd",
        "--synthetic",
        "quad:d=1,kappa=1",
        "--gamma",
        "grid:0.5,1,2",
        "--tol",
        "1e-12",
    ]);
    let mut argv = vec!["pmbench", "tune", "--method", "gd", "--synthetic", "quad:d=1,kappa=1"];
    argv.extend(["--gamma", "grid:0.5,1,2", "--tol", "1e-12"]);
    let (out, _) = execute(argv).unwrap();
    assert_eq!(out.report, "best gamma = 1e0\n");
    let r = rows(&csv);
    assert_eq!(r[2][0], "2e0");
    assert_eq!(r[2][1], "not-converged");
}

#[test]
fn tune_failure_exits_with_divergence() {
    let (code, _, err) = pmbench(&[
        "tune",
        "--method",
        "gd",
        "--synthetic",
        "quad:d=3,kappa=10",
        "--gamma",
        "grid:1e3,1e4",
        "--iters",
        "3000",
    ]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn usage_errors() {
    for args in [
        &["run"][..],
        &["run", "--synthetic", "quad:d=2"],
        &["run", "--synthetic", "quad:d=2,kappa=3", "--beta1", "1.5"],
        &["run", "--dataset", "/nonexistent/a9a"],
        &["run", "--synthetic", "quad:d=2,kappa=3", "--precond", "newton"],
        &["frobnicate"],
    ] {
        let (code, _, err) = pmbench(args);
        assert_eq!(code, 1, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
    assert_eq!(pmbench(&["--help"]).0, 0);
}

#[test]
fn file_config_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# one-step gd\nmethod = gd\nsynthetic = quad:d=1,kappa=1\ngamma = 0.5\niters = 3\n",
    )
    .unwrap();
    let out = dir.path().join("trace.csv");
    let (code, _, _) = pmbench(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(rows(&std::fs::read_to_string(&out).unwrap()).len(), 4);
    let (code, _, _) = pmbench(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--gamma",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(rows(&std::fs::read_to_string(&out).unwrap()).len(), 2);
}

#[test]
fn verify_suites_and_negative_control() {
    let (code, stdout, _) = pmbench(&["verify", "props", "--out", "/dev/null"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("PASS gradient domination: worst margin 0.000e0"));
    assert_eq!(stdout.matches(", clamped chaining]").count(), 8);
    let (code, stdout, _) = pmbench(&["verify", "envelopes", "--halve-l", "--out", "/dev/null"]);
    assert_eq!(code, 3);
    assert!(stdout.contains("FAIL"));
}

#[test]
fn held_out_split_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(dir.path(), 50);
    let (_, csv) = run_csv(&[
        "run",
        "--dataset",
        data.to_str().unwrap(),
        "--iters",
        "2",
        "--normalize",
    ]);
    assert!(csv.lines().next().unwrap().ends_with("test_loss"));
    let (_, csv) = run_csv(&[
        "run",
        "--dataset",
        data.to_str().unwrap(),
        "--iters",
        "2",
        "--train-frac",
        "1",
    ]);
    assert!(!csv.contains("test_loss"));
}
