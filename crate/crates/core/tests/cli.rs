use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn betabo(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_betabo"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(String::from).collect()
}

#[test]
fn optimize_row_count_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let o = betabo(
        &["optimize", "--set", "function=levy", "--set", "d=2", "--set", "n_iter=10", "--set", "n_init=6"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let traj = dir.path().join("trajectory_0.csv");
    assert_eq!(
        header(&traj),
        ["iter", "x_unit_0", "x_unit_1", "x_raw_0", "x_raw_1", "y", "best", "delta_boundary"]
    );
    let t = rows(&traj);
    assert_eq!(t.len(), 16);
    // printed values re-format to the same text
    for row in &t {
        for cell in &row[1..] {
            let v: f64 = cell.parse().unwrap();
            assert_eq!(&format!("{v:.16e}"), cell);
        }
    }
    let s = rows(&dir.path().join("summary.csv"));
    assert_eq!(header(&dir.path().join("summary.csv")), ["kernel", "acq", "setting", "mean_final_best", "stderr"]);
    assert_eq!(s.len(), 1);
    assert_eq!(s[0][3], t[15][6]);
}

#[test]
fn summary_stderr_uses_every_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = betabo(
        &[
            "optimize",
            "--set", "d=1",
            "--set", "n_iter=2",
            "--set", "seeds=[0,1,2,3,4,5,6,7,8,9]",
            "--set", "restarts=2",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let finals: Vec<f64> = (0..10)
        .map(|s| {
            let t = rows(&dir.path().join(format!("trajectory_{s}.csv")));
            t.last().unwrap()[4].parse().unwrap()
        })
        .collect();
    let n = finals.len() as f64;
    let mean = finals.iter().sum::<f64>() / n;
    let se = (finals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt();
    let s = rows(&dir.path().join("summary.csv"));
    let (m, e): (f64, f64) = (s[0][3].parse().unwrap(), s[0][4].parse().unwrap());
    assert!((m - mean).abs() <= 1e-12 * mean.abs().max(1.0));
    assert!((e - se).abs() <= 1e-12 * se.max(1.0));
}

#[test]
fn two_kernels_give_two_summary_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "[optimize]\nfunction = \"ackley\"\nd = 2\nn_iter = 3\nkernels = [\"beta\", \"matern\"]\nrestarts = 2\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = betabo(&["optimize", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = rows(&out.join("summary.csv"));
    let keys: Vec<(&str, &str)> = s.iter().map(|r| (r[0].as_str(), r[1].as_str())).collect();
    assert_eq!(keys, [("beta", "ucb"), ("matern", "ucb")]);
    assert!(out.join("beta_ucb").join("trajectory_0.csv").exists());
    assert!(out.join("matern_ucb").join("trajectory_0.csv").exists());
}

#[test]
fn spectrum_is_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "spectrum",
        "--set", "kernels=[\"beta\", \"rbf\"]",
        "--set", "h_grid=[0.5, 1.5]",
        "--set", "d_grid=[2]",
        "--set", "n_matrices=3",
        "--set", "n_points=20",
    ];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(betabo(&args, &a).status.code(), Some(0));
    assert_eq!(betabo(&[&args[..], &["--workers", "1"]].concat(), &b).status.code(), Some(0));
    for f in ["spectrum.csv", "spectrum_regression.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let reg = rows(&a.join("spectrum_regression.csv"));
    assert_eq!(reg.len(), 3);
    assert_eq!(rows(&a.join("spectrum.csv")).len(), 60);
}

#[test]
fn bench_grid_cells() {
    let dir = tempfile::tempdir().unwrap();
    let o = betabo(
        &[
            "bench",
            "--set", "functions=[\"griewank\"]",
            "--set", "d=2",
            "--set", "settings=[2]",
            "--set", "kernels=[\"beta\", \"rbf\"]",
            "--set", "seeds=[0, 1]",
            "--set", "n_iter=2",
            "--set", "restarts=2",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let t = rows(&dir.path().join("table2_style.csv"));
    assert_eq!(t.len(), 2);
    assert!(t.iter().all(|r| r[5] == "2" && r[8] == "ok"));
}

#[test]
fn infeasible_bench_cell_is_marked_and_run_continues() {
    let dir = tempfile::tempdir().unwrap();
    let o = betabo(
        &[
            "bench",
            "--set", "functions=[\"branin\", \"levy\"]",
            "--set", "d=2",
            "--set", "settings=[3]",
            "--set", "margin=0.3",
            "--set", "kernels=[\"rbf\"]",
            "--set", "seeds=[0]",
            "--set", "n_iter=1",
            "--set", "restarts=1",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    let t = rows(&dir.path().join("table2_style.csv"));
    assert_eq!(t.len(), 2);
    assert!(t[0][8].starts_with("failed"));
    assert_eq!(t[1][8], "ok");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &["spectrum", "--set", "h_grid=[]"],
        &["bench", "--set", "kernels=[]"],
        &["optimize", "--set", "n_iterations=5"],
        &["optimize", "--set", "kernels=[\"cosine\"]"],
        &["optimize", "--config", "/nonexistent/run.toml"],
    ];
    for args in cases {
        assert_eq!(betabo(args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn black_box_failure_exits_3_and_keeps_partial_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let counter = dir.path().join("calls");
    let script = dir.path().join("flaky.sh");
    fs::write(
        &script,
        format!(
            "read x\nn=$(cat {c} 2>/dev/null || echo 0)\nn=$((n+1))\necho $n > {c}\n\
             if [ $n -ge 4 ]; then echo boom >&2; exit 1; fi\necho 1.5\n",
            c = counter.display()
        ),
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = betabo(
        &[
            "optimize",
            "--set", "function=external",
            "--set", "d=2",
            "--set", &format!("command=[\"sh\", \"{}\"]", script.display()),
            "--set", "n_iter=3",
        ],
        &out,
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("boom"));
    let t = rows(&out.join("trajectory_0.csv"));
    assert_eq!(t.len(), 3);
    assert!(t.iter().all(|r| r[5] == "1.5000000000000000e0"));
}
