use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cube-energy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn higher_energy_of_binary_cube() {
    let out = run(&[
        "energy", "--set", "cube:1x3", "--k", "2", "--kind", "higher",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["report"]["energy"], "216");
    assert_eq!(v["config"]["set"], "cube:1x3");
    assert_eq!(v["config"]["kind"], "higher");
}

#[test]
fn energy_from_file_and_brute_force_agree() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("set.txt");
    std::fs::write(&path, "# three points\n0 0\n1 0\n0 2\n").unwrap();
    let p = path.to_str().unwrap();
    let a = json(&run(&["energy", "--set", p, "--k", "3"]));
    let b = json(&run(&["energy", "--set", p, "--k", "3", "--brute-force"]));
    assert_eq!(a["report"]["energy"], b["report"]["energy"]);
    assert_eq!(a["report"]["witness_path"], p);
}

#[test]
fn sign_table_csv() {
    let out = run(&["signs", "--k-max", "10", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let expected = "\
k,C1*,C2*,C3*,C4*,C5*,C6*,C7*,C8*,C9*,C10*
2,-1,1,,,,,,,,
3,-1,1,1,,,,,,,
4,-1,1,1,1,,,,,,
5,-1,1,1,1,1,,,,,
6,-1,1,1,1,1,1,,,,
7,-1,-1,1,1,1,1,1,,,
8,-1,-1,1,1,1,1,1,1,,
9,-1,-1,-1,1,1,1,1,1,1,
10,-1,-1,-1,1,1,1,1,1,1,1
";
    assert_eq!(stdout(&out), expected);
}

#[test]
fn psi_seven_is_not_concave() {
    let csv = run(&[
        "curves",
        "--which",
        "psi",
        "--k",
        "7",
        "--samples",
        "1000",
        "--format",
        "csv",
    ]);
    assert_eq!(csv.status.code(), Some(0));
    let text = stdout(&csv);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,value"));
    let values: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 1000);
    assert!(values.windows(3).any(|w| w[0] - 2.0 * w[1] + w[2] > 0.0));
    let report = json(&run(&[
        "curves",
        "--which",
        "psi",
        "--k",
        "7",
        "--samples",
        "1000",
    ]));
    assert!(
        report["report"]["positive_second_differences"]
            .as_u64()
            .unwrap()
            > 0
    );
}

#[test]
fn goal_curve_carries_its_assumption() {
    let out = run(&[
        "curves",
        "--which",
        "goal_q",
        "--k",
        "4",
        "--samples",
        "50",
        "--format",
        "csv",
    ]);
    let text = stdout(&out);
    assert!(text.starts_with("# "));
    assert_eq!(text.lines().nth(1), Some("x,value"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "extension",
        "optimize",
        "--alphabet",
        "list:0,1,2",
        "--p",
        "2.68",
        "--seed",
        "7",
        "--starts",
        "16",
    ];
    let a = run(&args);
    let b = run(&args);
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "1"]);
    let c = run(&threaded);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let v = json(&a);
    assert_eq!(v["config"]["seed"], 7);
    assert!(v["report"]["lower_bound"].as_f64().unwrap() > 1.0);

    let sampled = ["verify", "--cube", "2x3", "--samples", "200", "--seed", "3"];
    assert_eq!(run(&sampled).stdout, run(&sampled).stdout);
}

#[test]
fn report_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tn.csv");
    let out = run(&[
        "tn-bounds",
        "--n-max",
        "40",
        "--format",
        "csv",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 41);
    assert!(text.lines().nth(2).unwrap().starts_with("2,1,19,"));
}

#[test]
fn violation_exits_one_with_witness() {
    let out = run(&["verify", "--cube", "1x2", "--k", "2", "--exponent", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["status"], "violation");
    assert!(v["report"]["violation_count"].as_u64().unwrap() > 0);
    assert!(v["report"]["witness_points"].is_array());
}

#[test]
fn usage_and_budget_exit_codes() {
    assert_eq!(
        run(&["energy", "--set", "/no/such/file"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["energy", "--set", "cube:1x2", "--kind", "cubic"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(
        run(&[
            "extension",
            "compare",
            "--alphabet",
            "list:0,1",
            "--q",
            "2",
            "--format",
            "csv"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(run(&["verify", "--cube", "1x5"]).status.code(), Some(3));
    assert_eq!(
        run(&[
            "energy",
            "--set",
            "cube:2x2",
            "--brute-force",
            "--budget",
            "10"
        ])
        .status
        .code(),
        Some(3)
    );
}

#[test]
fn identity_and_witness_jobs() {
    let out = run(&["identity-check", "--random", "20", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["report"]["checks"], 80);
    assert_eq!(v["report"]["failures"], 0);

    let w = run(&["witness", "--d-max", "3", "--format", "csv"]);
    assert_eq!(w.status.code(), Some(0));
    let text = stdout(&w);
    assert!(text.starts_with("d,theta,size,energy,ratio,verdict\n"));
    assert!(text.contains("\n1,1/2,3,19,"));
}

#[test]
fn extension_jobs() {
    let t = run(&[
        "extension",
        "tensor",
        "--a",
        "list:0,1",
        "--b",
        "list:0,1",
        "--p",
        "2.584962500721156",
    ]);
    assert_eq!(
        t.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&t.stdout)
    );
    let c = run(&[
        "extension",
        "compare",
        "--alphabet",
        "list:0,1,2,3,4,5",
        "--q",
        "2",
    ]);
    assert_eq!(c.status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.csv");
    std::fs::write(&path, "point,weight\n0,1\n1,3/10\n").unwrap();
    let p = path.to_str().unwrap();
    let d = json(&run(&["extension", "dyadic", "--weights", p]));
    assert_eq!(d["status"], "ok");
    assert_eq!(d["report"]["remainder"][0]["weight"], "1/2");
    assert_eq!(d["report"]["remainder"][1]["weight"], "3/10");
    let e = json(&run(&[
        "extension",
        "weighted-energy",
        "--weights",
        p,
        "--mode",
        "rational",
    ]));
    // 1 + 4·(3/10)^2 + (3/10)^4
    assert_eq!(e["report"]["energy"], "13681/10000");
}
