use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn tpdes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tpdes"))
        .args(args)
        .env_remove("TPDES_OUT_DIR")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = tpdes(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
}

#[test]
fn time_case_without_tick_names_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let model = root().join("models/system2.json");
    let o = tpdes(&[
        "preprocess",
        "--model",
        path(&model),
        "--runs",
        "x",
        "--case",
        "time",
        "--k",
        "5",
        "--out",
        "y",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--ti"));

    let cfg = dir.path().join("c.toml");
    let text = std::fs::read_to_string(root().join("configs/case2.toml"))
        .unwrap()
        .replace("ti = 0.1", "");
    std::fs::write(&cfg, text).unwrap();
    let o = tpdes(&["pipeline", "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ti"), "{}", stderr(&o));
}

#[test]
fn missing_model_is_a_validation_error() {
    let o = tpdes(&[
        "simulate",
        "--model",
        "/nonexistent.json",
        "--count",
        "2",
        "--out",
        "/tmp/x",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn staged_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = |f: &str| dir.path().join(f);
    let model = root().join("models/system2.json");
    let m = path(&model);
    let ok = |o: Output| assert!(o.status.success(), "{}", stderr(&o));

    ok(tpdes(&[
        "simulate",
        "--model",
        m,
        "--count",
        "20",
        "--seed",
        "3",
        "--ti",
        "0.1",
        "--out",
        path(&d("runs.jsonl")),
    ]));
    ok(tpdes(&[
        "preprocess",
        "--model",
        m,
        "--runs",
        path(&d("runs.jsonl")),
        "--case",
        "time",
        "--k",
        "5",
        "--ti",
        "0.1",
        "--split",
        "0.6,0.2,0.2",
        "--out",
        path(&d("samples.txt")),
    ]));
    ok(tpdes(&[
        "train",
        "--model",
        m,
        "--samples",
        path(&d("samples.txt")),
        "--preset",
        "deep",
        "--epochs",
        "2",
        "--out",
        path(&d("weights.json")),
    ]));
    ok(tpdes(&[
        "compare",
        "--model",
        m,
        "--weights",
        path(&d("weights.json")),
        "--runs",
        path(&d("runs.jsonl")),
        "--samples",
        path(&d("samples.txt")),
        "--case",
        "time",
        "--k",
        "5",
        "--ti",
        "0.1",
        "--out",
        path(&d("report.json")),
        "--trajectories",
        path(&d("traj.csv")),
    ]));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d("report.json")).unwrap()).unwrap();
    assert_eq!(report["case"], "time");
    assert_eq!(report["runs"], 4);
    assert!(std::fs::read_to_string(d("traj.csv"))
        .unwrap()
        .starts_with("time,P(s1),P(s2),P(s3),P(s4),source"));

    let o = tpdes(&[
        "compare",
        "--model",
        m,
        "--weights",
        path(&d("weights.json")),
        "--runs",
        path(&d("runs.jsonl")),
        "--case",
        "time",
        "--k",
        "3",
        "--ti",
        "0.1",
        "--out",
        path(&d("r2.json")),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = tpdes(&[
        "estimate",
        "--model",
        m,
        "--weights",
        path(&d("weights.json")),
        "--obs",
        path(&root().join("scenarios/time.txt")),
        "--extra-ticks",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = String::from_utf8(o.stdout).unwrap();
    // 55 ticks of observations plus 2 silent ones, plus t = 0, for each source
    assert_eq!(csv.lines().count(), 1 + 2 * 58);
}

#[test]
fn gradcheck_and_oracle() {
    let o = tpdes(&["gradcheck", "--preset", "compact", "--input", "6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("checked 200 parameters"));

    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.txt");
    std::fs::write(&obs, "(a,0.2)(b,0.3)").unwrap();
    let model = root().join("models/system2.json");
    let o = tpdes(&[
        "oracle",
        "--model",
        path(&model),
        "--obs",
        path(&obs),
        "--n",
        "20000",
        "--seed",
        "1",
        "--elapsed",
        "0.3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let sum: f64 = v["filter"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
    assert!((sum - 1.0).abs() < 1e-9);
    assert!(v["l1"].as_f64().unwrap() < 0.1);
}

#[test]
fn pipeline_honours_out_dir_variable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    let text = std::fs::read_to_string(root().join("configs/case1.toml"))
        .unwrap()
        .replace("../", &format!("{}/", root().display()))
        .replace("count = 400", "count = 30")
        .replace("seed = 11", "seed = 11\nepochs = 2");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("elsewhere");
    let o = Command::new(env!("CARGO_BIN_EXE_tpdes"))
        .args(["pipeline", "--config", path(&cfg)])
        .env("TPDES_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "runs.jsonl",
        "samples.txt",
        "weights.json",
        "report.json",
        "trajectories.csv",
        "scenario.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
}
