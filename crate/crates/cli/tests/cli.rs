use std::fs;
use std::process::{Command, Output};

fn scaledwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scaledwave"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn classify_json_record() {
    let out = stdout(&scaledwave(&[
        "classify", "--n", "1", "--p", "2", "--q", "3", "--mu", "0.5", "--json",
    ]));
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["verdict"], "BlowUpCombined");
    assert_eq!(v["lambda_shifted"], 0.0);
    assert_eq!(v["lifespan_exponent"], -2.0);
}

#[test]
fn classify_table_and_switches() {
    let out = stdout(&scaledwave(&[
        "classify", "--n", "3", "--p", "4", "--q", "5", "--mu", "0.1",
    ]));
    assert!(out.contains("verdict") && out.contains("NoCriterion"), "{out}");
    let out = stdout(&scaledwave(&[
        "classify", "--n", "1", "--p", "2", "--q", "3", "--mu", "0.5", "--b", "0",
    ]));
    assert!(!out.contains("BlowUpCombined"), "{out}");
    assert!(
        !scaledwave(&["classify", "--n", "1", "--p", "2", "--q", "3", "--mu", "0.5", "--a", "2"])
            .status
            .success()
    );
}

#[test]
fn verify_lemmas_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("lemma.csv");
    let out = scaledwave(&[
        "verify-lemmas",
        "--n",
        "2",
        "--r",
        "2",
        "--tmax",
        "4",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    stdout(&out);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,integral,bound_power,ratio"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert!(r[1] > 0.0 && (r[3] - r[1] / r[2]).abs() <= 1e-12 * r[3]);
    }
}

#[test]
fn solve_writes_trace_and_refuses_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "n = 1\nmu = 0.5\np = 2\nq = 3\nepsilon = 0.4\nh = 0.02\nt_max = 20\n",
    )
    .unwrap();
    let trace = dir.path().join("trace.csv");
    let args = [
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        trace.to_str().unwrap(),
    ];
    let out = stdout(&scaledwave(&args));
    assert!(out.contains("outcome: blow-up"), "{out}");
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("t,dt,sup_abs_u,F,F1,F2"));
    assert!(text.lines().count() > 3);

    assert!(!scaledwave(&args).status.success());
    let mut forced = args.to_vec();
    forced.push("--force");
    stdout(&scaledwave(&forced));
}

#[test]
fn bad_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "n = 1\nspeed = 2\n").unwrap();
    let out = scaledwave(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("t.csv").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn ode_fit_json() {
    let out = stdout(&scaledwave(&[
        "ode-fit",
        "--n",
        "1",
        "--p",
        "2",
        "--q",
        "3",
        "--mu",
        "0.5",
        "--eps-start",
        "0.1",
        "--eps-decades",
        "3",
        "--points",
        "7",
        "--json",
    ]));
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 7);
    assert_eq!(v["predicted_slope"], -2.0);
    assert!(v["relative_slope_error"].as_f64().unwrap() <= 0.1);
    assert_eq!(v["constants"], "fitted");
}

#[test]
fn sweep_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(&cfg, "h = 0.02\nt_max = 40\nepsilons = 0.4, 0.3, 0.2\n").unwrap();
    let out_dir = dir.path().join("out");
    let args = [
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--workers",
        "2",
    ];
    let out = scaledwave(&args);
    let text = stdout(&out);
    assert!(text.contains("slope") && text.contains("config hash"), "{text}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("upper bound"));

    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("fit.json")).unwrap()).unwrap();
    assert_eq!(record["fit"]["rows"].as_array().unwrap().len(), 3);
    assert_eq!(record["config_hash"].as_str().unwrap().len(), 64);
    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("epsilon,T_num,outcome,predicted_T"));

    assert!(!scaledwave(&args).status.success());
}
