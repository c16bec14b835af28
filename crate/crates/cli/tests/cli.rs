use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn tradeoff(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tradeoff"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("run binary")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

/// Splits a CSV output into its metadata object and data rows.
fn read_output(path: &Path) -> (serde_json::Value, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let (first, rest) = text.split_once('\n').unwrap();
    let meta: serde_json::Value = serde_json::from_str(first.strip_prefix("# ").unwrap()).unwrap();
    let mut reader = csv::Reader::from_reader(rest.as_bytes());
    let mut rows = vec![reader.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(
        reader
            .records()
            .map(|r| r.unwrap().iter().map(String::from).collect()),
    );
    (meta, rows)
}

const PAIRS: &str = "problem_id,n_trials,n_chose_a,a_1,a_2,a_3,b_1,b_2,b_3\n\
    p1,10,6,10,7,9,3,15,5\n\
    p2,10,7,3,14,9,3,15,5\n\
    p3,5,5,4,4,4,3,3,3\n";

#[test]
fn ratio_table_for_attribute_pairs() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "pairs.csv", PAIRS);
    let out = tradeoff(
        &[
            "ratio",
            "--input",
            "pairs.csv",
            "--domain",
            "multiattribute",
            "--out",
            "r.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (meta, rows) = read_output(&dir.path().join("r.csv"));
    assert_eq!(
        rows[0],
        [
            "problem_id",
            "value_diff",
            "dissimilarity",
            "ratio",
            "dominance_flag"
        ]
    );
    let ratio = |i: usize| rows[i][3].parse::<f64>().unwrap();
    assert!((ratio(1) - 3.0 / 19.0).abs() < 1e-15);
    assert!((ratio(2) - 3.0 / 5.0).abs() < 1e-15);
    assert_eq!((ratio(3), rows[3][4].as_str()), (1.0, "1"));
    assert_eq!(rows[1][4], "0");
    assert_eq!(meta["command"], "ratio");
    assert_eq!(meta["seed"], 0);
    let digest = hex_digest(&serde_json::to_string(&meta["config"]).unwrap());
    assert_eq!(meta["config_sha256"], digest);
}

fn hex_digest(s: &str) -> String {
    Sha256::digest(s.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[test]
fn malformed_probability_names_the_row() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "lot.csv",
        "problem_id,n_trials,n_chose_a,a_payoffs,a_probs,b_payoffs,b_probs\n\
         q1,10,4,23.5;0,0.19;0.81,4.75;0,0.94;0.06\n\
         q2,10,4,23.5;0,0.19;oops,4.75;0,0.94;0.06\n",
    );
    let out = tradeoff(
        &[
            "ratio", "--input", "lot.csv", "--domain", "lottery", "--out", "r.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("a_probs"), "{err}");
    assert!(!dir.path().join("r.csv").exists());
}

#[test]
fn figure_reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "cfg.json", r#"{"draws": 4096}"#);
    let run = |out: &str, threads: &str| {
        let o = tradeoff(
            &[
                "simulate-figure",
                "decoy-cases",
                "--config",
                "cfg.json",
                "--seed",
                "11",
                "--threads",
                threads,
                "--out",
                out,
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(dir.path().join(out)).unwrap()
    };
    let a = run("a.csv", "4");
    assert_eq!(a, run("b.csv", "4"));
    assert_eq!(a, run("c.csv", "1"));
    let (meta, rows) = read_output(&dir.path().join("a.csv"));
    assert_eq!(meta["config"]["draws"], 4096);
    assert_eq!(meta["config"]["figure"], "decoy-cases");
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1][0], "case1");
}

#[test]
fn unknown_figure_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let out = tradeoff(&["simulate-figure", "fig-99", "--out", "x.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

fn temporal_data(dir: &Path) {
    let mut body = String::from(
        "problem_id,n_trials,n_chose_a,a_amounts,a_delays_days,b_amounts,b_delays_days\n",
    );
    for i in 1..=8 {
        body += &format!("t{i},40,{},10,0,{},{}\n", 10 + 3 * i, 10 + 2 * i, 30 * i);
    }
    write(dir, "t.csv", &body);
}

#[test]
fn fit_emits_one_row_per_family() {
    let dir = TempDir::new().unwrap();
    temporal_data(dir.path());
    write(dir.path(), "cfg.json", r#"{"fit": {"starts": 4}}"#);
    let args = [
        "fit",
        "--input",
        "t.csv",
        "--domain",
        "temporal",
        "--families",
        "edu,qdu,hdu,cpf-complexity",
    ];
    let out = tradeoff(
        &[&args[..], &["--config", "cfg.json", "--out", "f.csv"]].concat(),
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (meta, rows) = read_output(&dir.path().join("f.csv"));
    assert_eq!(rows.len(), 5);
    let col = |name: &str| rows[0].iter().position(|h| h == name).unwrap();
    let models: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(models, ["edu", "qdu", "hdu", "cpf-complexity"]);
    assert!(rows[1..].iter().all(|r| r[col("completeness")].is_empty()));
    assert!(rows[1][col("kappa")].is_empty());
    let nll = |i: usize| rows[i][col("nll")].parse::<f64>().unwrap();
    assert!(nll(2) <= nll(1) + 1e-9);
    assert_eq!(meta["config"]["fit"]["starts"], 4);

    let out = tradeoff(
        &[
            &args[..],
            &["--config", "cfg.json", "--e-star", "0.3", "--out", "g.csv"],
        ]
        .concat(),
        dir.path(),
    );
    assert!(out.status.success());
    let (_, rows) = read_output(&dir.path().join("g.csv"));
    assert!(rows[1..].iter().all(|r| !r[col("completeness")].is_empty()));
}

#[test]
fn fit_rejects_wrong_domain_family() {
    let dir = TempDir::new().unwrap();
    temporal_data(dir.path());
    let out = tradeoff(
        &[
            "fit",
            "--input",
            "t.csv",
            "--domain",
            "temporal",
            "--families",
            "eu",
            "--out",
            "f.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

fn market_json(dir: &Path, kind: &str, config: Option<&str>) -> (Output, serde_json::Value) {
    let mut args = vec!["market", kind, "--out", "m.json"];
    if let Some(body) = config {
        write(dir, "m_cfg.json", body);
        args.extend(["--config", "m_cfg.json"]);
    }
    let out = tradeoff(&args, dir);
    let doc = fs::read_to_string(dir.join("m.json"))
        .ok()
        .map(|t| serde_json::from_str(&t).unwrap());
    (out, doc.unwrap_or(serde_json::Value::Null))
}

#[test]
fn market_commands() {
    let dir = TempDir::new().unwrap();
    let (out, doc) = market_json(
        dir.path(),
        "duopoly",
        Some(r#"{"costs": [1, 1], "dq": 0.5}"#),
    );
    assert!(out.status.success());
    assert_eq!(doc["result"]["equilibrium"]["prices"][0], 1.5);
    assert!(doc["result"]["max_deviation_gain"].as_f64().unwrap() <= 1e-6);

    let stage = r#"{"costs": [0, 1], "total_quantity": 2, "q_lo": 0.925, "q_hi": 1.075}"#;
    let (out, doc) = market_json(dir.path(), "stage", Some(stage));
    assert!(out.status.success());
    assert_eq!(doc["result"]["regime"], "imitate");

    let (out, doc) = market_json(dir.path(), "three-firm", None);
    assert!(out.status.success());
    assert_eq!(doc["result"]["profit_b_decreasing"], true);
    assert_eq!(doc["metadata"]["command"], "market three-firm");
}

#[test]
fn solver_failure_exit_code() {
    let dir = TempDir::new().unwrap();
    let (out, _) = market_json(
        dir.path(),
        "three-firm",
        Some(r#"{"search": {"max_iters": 1, "restarts": 0}}"#),
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (out, _) = market_json(
        dir.path(),
        "stage",
        Some(r#"{"costs": [0, 1], "total_quantity": 2, "q_lo": 1.2, "q_hi": 0.8}"#),
    );
    assert_eq!(out.status.code(), Some(2));
}
