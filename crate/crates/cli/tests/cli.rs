use std::path::Path;
use std::process::{Command, Output};

fn bandprec(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bandprec"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn parse_matrix(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn estimate_full_band_inverts_s() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.csv"), "1,0\n0,1\n").unwrap();
    for est in ["mle", "cholesky"] {
        let out = stdout(&bandprec(&["estimate", "x.csv", "--k", "1", "--estimator", est], dir.path()));
        // S = I/2
        let m = parse_matrix(&out);
        let expected = [[2.0, 0.0], [0.0, 2.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[i][j] - expected[i][j]).abs() < 1e-12, "{est}: {m:?}");
            }
        }
    }
}

#[test]
fn header_and_json_output() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.csv"), "a,b,c\n1,0.2,0\n0.3,1,-1\n0,0.5,1\n-1,2,0.1\n").unwrap();
    let o = bandprec(&["estimate", "x.csv", "--k", "1"], dir.path());
    assert!(!o.status.success());
    let out = stdout(&bandprec(
        &["estimate", "x.csv", "--header", "--auto-k", "--estimator", "bayes-l2", "--format", "json"],
        dir.path(),
    ));
    assert!(out.contains("\"precision\""));
    assert!(out.contains("\"estimator\": \"bayes-l2\""));
    assert!(out.contains("\"n\": 4"));
}

#[test]
fn ragged_input_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.csv"), "1,2\n3,4\n5\n").unwrap();
    let o = bandprec(&["select-k", "x.csv"], dir.path());
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn select_k_reports_log_marginals() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..30)
        .map(|i| {
            let t = i as f64;
            format!("{},{},{}\n", (t * 0.7).sin(), (t * 1.3).cos(), (t * 0.37).sin() + 0.2)
        })
        .collect();
    std::fs::write(dir.path().join("x.csv"), rows).unwrap();
    let csv = stdout(&bandprec(&["select-k", "x.csv", "--rho-prior", "uniform"], dir.path()));
    assert_eq!(csv.lines().next().unwrap(), "k,log_marginal,log_prior,log_posterior,posterior");
    assert_eq!(csv.lines().count(), 1 + 3);
    let json = stdout(&bandprec(&["select-k", "x.csv", "--format", "json", "--k-max", "1"], dir.path()));
    assert!(json.contains("\"log_marginals\""));
    assert!(json.contains("\"k_max\": 1"));
}

#[test]
fn sample_posterior_draws() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.csv"), "1,0.5,0\n0.2,1,0.3\n-1,0.3,0.9\n0.4,-0.7,0\n0.1,0.1,-0.5\n").unwrap();
    let args = ["sample-posterior", "x.csv", "--k", "1", "--draws", "4", "--seed", "7"];
    let a = stdout(&bandprec(&args, dir.path()));
    // header plus 4 draws of 5 band entries
    assert_eq!(a.lines().count(), 1 + 4 * 5);
    assert_eq!(a, stdout(&bandprec(&args, dir.path())));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "# small fGn study\nmodel = fgn\nhurst = 0.7\nn = 50\np = 8\nreps = 4\nk = 1\nnorms = linf-op\n",
    )
    .unwrap();
    let out = stdout(&bandprec(&["--config", "run.cfg", "simulate", "--n", "60", "--format", "csv"], dir.path()));
    let row = out.lines().nth(1).unwrap();
    assert!(row.starts_with("fgn,"), "{row}");
    assert!(row.contains(",60,8,1,1,4,"), "{row}");
    assert_eq!(out.lines().count(), 1 + 4);

    std::fs::write(dir.path().join("bad.cfg"), "model = ar1\nnonsense = 3\n").unwrap();
    let o = bandprec(&["--config", "bad.cfg", "simulate"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn simulate_output_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        for fmt in ["csv", "json"] {
            let name = format!("out{i}.{fmt}");
            let o = bandprec(
                &["--threads", threads, "simulate", "--model", "ar4", "--n", "80", "--p", "20", "--reps", "12",
                  "--seed", "3", "--format", fmt, "-o", &name],
                dir.path(),
            );
            let summary = stdout(&o);
            assert!(summary.contains("mean") || summary.contains("linf-op"));
            files.push(std::fs::read(dir.path().join(&name)).unwrap());
        }
    }
    assert_eq!(files[0], files[2]);
    assert_eq!(files[1], files[3]);
    let json = String::from_utf8(files[1].clone()).unwrap();
    assert!(json.contains("\"seed\": 3"));
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = bandprec(
        &["simulate", "--p", "5", "--n", "20", "--reps", "2", "-o", "/nonexistent-dir/t.csv"],
        dir.path(),
    );
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent-dir/t.csv"));
}

#[test]
fn conflicting_bandwidth_flags_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.csv"), "1,0\n0,1\n").unwrap();
    let o = bandprec(&["estimate", "x.csv", "--k", "1", "--auto-k"], dir.path());
    assert!(!o.status.success());
}
