use std::fs;
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn narrametric(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_narrametric"))
        .args(args)
        .env_remove("NARRAMETRIC_ENDPOINT")
        .env_remove("NARRAMETRIC_API_KEY")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn dead_endpoint() -> String {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    format!("http://127.0.0.1:{port}")
}

#[test]
fn fit_prints_rate() {
    let o = narrametric(&["fit", "--trajectory", "117.86, 30.26, 17.79, 18.46, 20.97, 15.10"]);
    assert!(o.status.success());
    let fit: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((fit["r"].as_f64().unwrap() - 0.15).abs() < 0.01);
    assert!(fit["r_squared"].as_f64().unwrap() >= 0.98);
}

#[test]
fn fit_rejects_flat_and_garbage() {
    assert_eq!(narrametric(&["fit", "--trajectory", "3,3,3,3"]).status.code(), Some(1));
    assert_eq!(narrametric(&["fit", "--trajectory", "3,x,1"]).status.code(), Some(1));
}

#[test]
fn stats_prints_tables() {
    let table = fixture("method_scores.csv");
    let o = narrametric(&["stats", "--results", table.to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("| CCPR | 33.09 | 6 | <0.001 | 3.68 |"), "{out}");
    assert!(out.contains("omnibus not significant"));
}

#[test]
fn stats_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let table = fixture("method_scores.csv");
    let o = narrametric(&["stats", "--results", table.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["friedman.csv", "friedman.md", "nemenyi.csv", "nemenyi.md"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn score_with_mock() {
    let o = narrametric(&["score", "--provider", "mock", "--text", "The risk is high. The risk is high because debt is high. So the risk is high."]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["sentences"], 3);
    assert!(v["metrics"]["cecpr"].is_number());
}

#[test]
fn single_sentence_reports_undefined() {
    let o = narrametric(&["score", "--provider", "mock", "--text", "Only one sentence here."]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["metrics"]["csr"]["undefined"].is_string());
    assert!(v["metrics"]["dcpr"]["undefined"].is_string());
}

#[test]
fn score_with_script_file() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("script.json");
    let text = "Alpha beta gamma. Delta epsilon.";
    fs::write(
        &script,
        serde_json::json!({"texts": [
            {"text": text, "perplexity": 12.0},
            {"text": "Delta epsilon. Alpha beta gamma.", "perplexity": 18.0},
            {"text": "Alpha beta gamma.", "perplexity": 30.0},
        ]})
        .to_string(),
    )
    .unwrap();
    let o = narrametric(&[
        "score", "--provider", "scripted", "--script", script.to_str().unwrap(), "--single-shuffle", "--text", text,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["ppl"].as_f64().unwrap() - 12.0).abs() < 1e-9);
    assert!((v["metrics"]["csr"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn unreachable_provider_exits_2() {
    let o = narrametric(&["score", "--endpoint", &dead_endpoint(), "--no-cache", "--text", "A b. C d."]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_endpoint_exits_1() {
    let o = narrametric(&["score", "--text", "A b. C d."]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("NARRAMETRIC_ENDPOINT"));
}

#[test]
fn benchmark_with_mock_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixture("corpus.jsonl");
    let o = narrametric(&["benchmark", "--provider", "mock", "--corpus", corpus.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.lines().count() > 3 * 12);
}

#[test]
fn benchmark_failing_provider_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixture("corpus.jsonl");
    let o = narrametric(&[
        "benchmark", "--endpoint", &dead_endpoint(), "--no-cache", "--corpus", corpus.to_str().unwrap(), "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_is_strict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"shufles": 3}"#).unwrap();
    let o = narrametric(&["--config", cfg.to_str().unwrap(), "score", "--provider", "mock", "--text", "A b. C d."]);
    assert_eq!(o.status.code(), Some(1));
}
