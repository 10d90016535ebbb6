use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_parafac2"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn generate(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(name).display().to_string();
    let mut args = vec![
        "generate",
        "--subjects",
        "12",
        "--variables",
        "10",
        "--max-rows",
        "8",
        "--true-rank",
        "2",
        "--seed",
        "5",
        "--out",
        &path,
    ];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    path
}

#[test]
fn info_reports_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate(dir.path(), "x.txt", &[]);
    let o = run(&["info", &path]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        String::from_utf8(o.stdout).unwrap(),
        "K\t12\nJ\t10\nmax_I\t8\nnnz\t960\n"
    );
}

#[test]
fn fit_then_rank() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate(dir.path(), "x.txt", &[]);
    let out = dir.path().join("f").display().to_string();
    let o = run(&[
        "fit",
        &path,
        "--rank",
        "2",
        "--restarts",
        "3",
        "--max-iters",
        "50",
        "--out",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("f/report.json")).unwrap())
            .unwrap();
    let traces = report["traces"].as_array().unwrap();
    assert_eq!(traces.len(), 3);
    let finals: Vec<f64> = traces
        .iter()
        .map(|t| {
            t["iterations"].as_array().unwrap().last().unwrap()["fit"]
                .as_f64()
                .unwrap()
        })
        .collect();
    let best = report["best_restart"].as_u64().unwrap() as usize;
    assert!(finals.iter().all(|&f| f <= finals[best]));
    assert_eq!(report["data"]["subjects"], 12);

    let o = run(&["rank", &out, "--subject", "3", "--top", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let lines: Vec<(usize, f64)> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(|l| {
            let (c, s) = l.split_once('\t').unwrap();
            (c.parse().unwrap(), s.parse().unwrap())
        })
        .collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].1 >= lines[1].1);

    assert_eq!(code(&run(&["rank", &out, "--subject", "12"])), 2);
    assert_eq!(
        code(&run(&["rank", &out, "--subject", "0", "--top", "3"])),
        1
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate(dir.path(), "x.txt", &[]);
    let out = dir.path().join("o").display().to_string();

    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["fit", &path, "--out", &out])), 1);
    assert_eq!(
        code(&run(&[
            "fit", &path, "--rank", "2", "--tol", "0", "--out", &out
        ])),
        1
    );
    assert_eq!(
        code(&run(&[
            "fit",
            &path,
            "--rank",
            "2",
            "--restarts",
            "0",
            "--out",
            &out
        ])),
        1
    );
    assert_eq!(
        code(&run(&["fit", &path, "--rank", "11", "--out", &out])),
        2
    );
    assert_eq!(
        code(&run(&[
            "generate",
            "--subjects",
            "2",
            "--variables",
            "3",
            "--max-rows",
            "2",
            "--true-rank",
            "1",
            "--density",
            "0",
            "--out",
            &out
        ])),
        1
    );

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "2 3\n0 0 5 1.0\n").unwrap();
    let o = run(&["info", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert_eq!(
        stderr(&o).trim(),
        "error: column index out of range at line 2"
    );

    let huge = dir.path().join("huge.txt");
    fs::write(&huge, "1 2\n0 0 0 1e300\n0 1 1 1e300\n0 1 0 -1e300\n").unwrap();
    let o = run(&["fit", huge.to_str().unwrap(), "--rank", "1", "--out", &out]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn bench_marks_over_budget_cells() {
    let o = run(&[
        "bench",
        "--subjects",
        "50",
        "--variables",
        "20",
        "--max-rows",
        "6",
        "--true-rank",
        "2",
        "--density",
        "0.3",
        "--rank",
        "2",
        "--reps",
        "2",
        "--budget-mb",
        "0",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = report["bench"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    for row in rows {
        let naive = row["kernel"] == "naive";
        assert_eq!(row["oom"].as_bool().unwrap(), naive);
        if !naive {
            assert_eq!(row["times_ms"].as_array().unwrap().len(), 2);
        }
    }
    assert!(report["speedups"]
        .as_array()
        .unwrap()
        .iter()
        .all(|s| s["speedup"].is_null()));
    assert_eq!(code(&run(&["bench", "--rank", "2"])), 1);
}

#[test]
fn generate_warns_about_dropped_subjects() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.txt").display().to_string();
    let o = run(&[
        "generate",
        "--subjects",
        "200",
        "--variables",
        "3",
        "--max-rows",
        "1",
        "--true-rank",
        "1",
        "--density",
        "0.2",
        "--out",
        &out,
    ]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("came out empty"));
}
