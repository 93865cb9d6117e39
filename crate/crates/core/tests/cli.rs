use std::path::Path;
use std::process::{Command, Output};

use credmech::cli::{parse_results_csv, parse_scenarios_csv, EXIT_INPUT, EXIT_NODE_LIMIT, EXIT_TOO_LARGE};
use credmech::credmodel::{CredentialSpec, FaultModel};
use credmech::mechanism::PartialTruthTable;

fn credmech(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_credmech")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_model(dir: &Path, name: &str, model: &FaultModel) -> String {
    let path = dir.join(name);
    std::fs::write(&path, model.to_csv()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn loss_pair() -> FaultModel {
    FaultModel::uniform(2, CredentialSpec::new(0.9, 0.1, 0.0, 0.0).unwrap()).unwrap()
}

#[test]
fn search_loss_pair_finds_or() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "m.csv", &loss_pair());

    let o = credmech(&["search", "--model", &model, "--delta", "1e-6", "--format", "json"]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["n"], 2);
    assert_eq!(json["minimal_true_vectors"], serde_json::json!(["01", "10"]));
    assert!((json["success_probability"].as_f64().unwrap() - 0.99).abs() < 1e-12);
    assert_eq!(json["delta"].as_f64().unwrap(), 1e-6);
    assert!(json["stats"]["nodes_visited"].as_u64().unwrap() > 0);

    let o = credmech(&["search", "--model", &model, "--format", "csv"]);
    let rows = parse_results_csv(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].mechanism, "01,10");
    assert_eq!(rows[0].algorithm, "search");

    let o = credmech(&["search", "--model", &model]);
    let text = stdout(&o);
    assert!(text.contains("mechanism: 01,10"));
    assert!(text.contains("certified: true"));
}

#[test]
fn wallet_evaluate_and_search() {
    let dir = tempfile::tempdir().unwrap();
    let o = credmech(&["model", "--family", "wallet", "--n-regular", "2", "--n-weak", "2"]);
    assert!(o.status.success());
    let model_path = dir.path().join("wallet.csv");
    std::fs::write(&model_path, &o.stdout).unwrap();
    let model = model_path.to_str().unwrap();

    let and = dir.path().join("and.txt");
    std::fs::write(&and, "n=4\n1100\n").unwrap();
    let o = credmech(&["evaluate", "--model", model, "--mechanism", and.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((json["failure_probability"].as_f64().unwrap() - 0.02).abs() < 1e-12);

    let found = dir.path().join("found.txt");
    let o = credmech(&["search", "--model", model, "--delta", "1e-6", "--mechanism-out", found.to_str().unwrap(), "--format", "csv"]);
    assert!(o.status.success());
    let rows = parse_results_csv(&stdout(&o)).unwrap();
    // any weak credential, or both regular ones; exhaustively confirmed optimum
    assert!((rows[0].failure_probability - 1.891e-3).abs() < 1e-12);
    assert!(rows[0].failure_probability < 2e-2);
    let table = PartialTruthTable::from_text(&std::fs::read_to_string(&found).unwrap()).unwrap();
    assert_eq!(table.to_string(), rows[0].mechanism);
}

#[test]
fn scenarios_listing_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = credmech(&["model", "--family", "hetero", "--n-regular", "9"]);
    let path = dir.path().join("h.csv");
    std::fs::write(&path, &o.stdout).unwrap();

    let o = credmech(&["scenarios", "--model", path.to_str().unwrap(), "--top-k", "10"]);
    assert!(o.status.success());
    let (counts, rows) = parse_scenarios_csv(&stdout(&o)).unwrap();
    assert_eq!((counts.n, counts.total, counts.viable, counts.positive), (9, 262144, 242461, 766));
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[0].rank, 1);
    assert_eq!(rows[0].user, "111111111");
    assert_eq!(rows[0].attacker, "000000000");
    assert!(rows.windows(2).all(|w| w[0].probability >= w[1].probability && w[1].cumulative >= w[0].cumulative));
}

#[test]
fn casestudy_writes_results_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results.csv");
    let o = credmech(&[
        "casestudy", "--family", "questions", "--n-weak", "1", "--min-regular", "2", "--max-regular", "3", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = parse_results_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let algorithms = rows.iter().filter(|r| r.n == 3).map(|r| r.algorithm.as_str()).collect::<Vec<_>>();
    assert_eq!(algorithms, ["search", "symmetric", "exhaustive", "reference", "regular_only"]);
    for n in [3, 4] {
        let get = |a: &str| rows.iter().find(|r| r.n == n && r.algorithm == a).unwrap().failure_probability;
        assert!((get("search") - get("exhaustive")).abs() < 1e-5);
        assert!(get("search") <= get("symmetric") + 1e-5);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let two = write_model(dir.path(), "two.csv", &loss_pair());
    let six = write_model(
        dir.path(),
        "six.csv",
        &FaultModel::uniform(6, CredentialSpec::new(0.9, 0.1, 0.0, 0.0).unwrap()).unwrap(),
    );

    assert_eq!(credmech(&["exhaustive", "--model", &six]).status.code(), Some(EXIT_TOO_LARGE));
    assert_eq!(credmech(&["simulate", "--n", "4"]).status.code(), Some(EXIT_TOO_LARGE));
    assert_eq!(credmech(&["search", "--model", "/nonexistent.csv"]).status.code(), Some(EXIT_INPUT));
    assert_eq!(credmech(&["search", "--model", &two, "--delta", "2"]).status.code(), Some(EXIT_INPUT));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "safe,loss,leak,theft\n0.5,0.5,0.5,0\n").unwrap();
    assert_eq!(credmech(&["search", "--model", bad.to_str().unwrap()]).status.code(), Some(EXIT_INPUT));

    let mech = dir.path().join("m.txt");
    std::fs::write(&mech, "n=2\n01\n11\n").unwrap();
    let o = credmech(&["evaluate", "--model", &two, "--mechanism", mech.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_INPUT));
    std::fs::write(&mech, "n=3\n011\n").unwrap();
    let o = credmech(&["evaluate", "--model", &two, "--mechanism", mech.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_INPUT));

    let fig = credmech(&["model", "--family", "fig1b", "--n-regular", "5"]);
    let fig_path = dir.path().join("fig.csv");
    std::fs::write(&fig_path, &fig.stdout).unwrap();
    let o = credmech(&["search", "--model", fig_path.to_str().unwrap(), "--node-limit", "5"]);
    assert_eq!(o.status.code(), Some(EXIT_NODE_LIMIT));
    assert!(stdout(&o).contains("certified: false"));

    assert!(credmech(&["exhaustive", "--model", &two]).status.success());
}

#[test]
fn simulate_small_sweep() {
    let o = credmech(&["simulate", "--n", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("n=2 horizon=2 functions=6 scenarios=16 mismatches=0"));
    assert!(text.ends_with("PASS\n"));
}
