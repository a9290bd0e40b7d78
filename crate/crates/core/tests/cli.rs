mod common;

use std::process::{Command, Output};

fn rdrqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdrqa")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn kb_stats_prints_histograms() {
    let o = rdrqa(&["--lang", "en", "kb", "stats"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("nodes: 19"), "{out}");
    assert!(out.contains("layer 1: "), "{out}");
    assert!(out.contains("structure And: "), "{out}");
}

#[test]
fn eval_reports_accuracy_and_histograms() {
    let corpus = common::data_dir().join("corpus/vi_ir.jsonl");
    let o = rdrqa(&["eval", corpus.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("accuracy: 13/13"), "{out}");
    assert!(out.lines().any(|l| l.starts_with("layers: 1:")), "{out}");
    assert!(out.lines().any(|l| l.starts_with("structures: ")), "{out}");
}

#[test]
fn analyze_shows_path() {
    let config = common::config_path("en_nine");
    let o = rdrqa(&["--config", config.to_str().unwrap(), "analyze", common::PARTNERS]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("path: 0-1-2-3-5-40-42-43-45 (last fired 40)"));
}

#[test]
fn answer_with_selection() {
    let q = "Liệt kê tất cả các sinh viên học lớp khoa học máy tính";
    let o = rdrqa(&["answer", q]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("did you mean"));
    let o = rdrqa(&["answer", q, "--select", "lớp K50 khoa học máy tính"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("answer: "), "{}", stdout(&o));
}

#[test]
fn exit_codes() {
    assert_eq!(rdrqa(&["--lang", "en", "analyze", ""]).status.code(), Some(1));
    assert_eq!(rdrqa(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(rdrqa(&["--lang", "fr", "kb", "stats"]).status.code(), Some(1));
    assert_eq!(rdrqa(&["--config", "/nonexistent/config.json", "kb", "stats"]).status.code(), Some(2));
    assert_eq!(rdrqa(&["eval", "/nonexistent/corpus.jsonl"]).status.code(), Some(2));
}

#[test]
fn dry_run_rule_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let draft = dir.path().join("draft.json");
    std::fs::write(
        &draft,
        r#"{"id": 90, "rule_text": "({Token.string == \"likes\"}):v --> :v.RDR90_={}", "extra": [],
            "conclusion": {"structure": "UnknTerm", "tuples": [["\"UnknTerm\"", "RDR1_QP.QuestionPhrase.category", "?", "RDR1_Rel", "RDR1_NP", "?"]]}}"#,
    )
    .unwrap();
    let o = rdrqa(&["--lang", "en", "kb", "add-rule", "--question", "Who/WP likes/VBZ cats/NNS ?/.", "--draft", draft.to_str().unwrap(), "--dry-run"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\"node_id\": 90"));

    let out = dir.path().join("vi_kb.json");
    let script = common::data_dir().join("kb/vi_script.jsonl");
    let o = rdrqa(&["kb", "replay", script.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let shipped: serde_json::Value = serde_json::from_str(&common::read_data("kb/vi_kb.json")).unwrap();
    let rebuilt: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(shipped, rebuilt);
}
