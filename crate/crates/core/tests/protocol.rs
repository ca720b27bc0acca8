use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

use cellfree::config::load_config_file;
use cellfree::protocol::{serve, Control, Session};
use serde_json::Value;

fn golden(name: &str) -> Vec<u8> {
    std::fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn config_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.toml")
}

#[test]
fn library_replay_matches_golden_transcript() {
    let mut session = Session::new(load_config_file(config_path()).unwrap());
    let mut out = Vec::new();
    serve(golden("requests.jsonl").as_slice(), &mut out, &mut session).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), String::from_utf8(golden("responses.jsonl")).unwrap());
}

#[test]
fn binary_replay_over_stdio_matches_golden_transcript() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_cellfree"))
        .arg("serve")
        .arg("--config")
        .arg(config_path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&golden("requests.jsonl")).unwrap();
    let output = child.wait_with_output().unwrap();
    assert!(output.status.success());
    assert_eq!(output.stdout, golden("responses.jsonl"));
}

#[test]
fn transcript_has_one_response_per_request_until_close() {
    let requests = golden("requests.jsonl");
    let responses = golden("responses.jsonl");
    let requests: Vec<&str> = std::str::from_utf8(&requests).unwrap().lines().collect();
    let responses: Vec<Value> = std::str::from_utf8(&responses)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let close = requests.iter().position(|l| l.contains("\"close\"")).unwrap();
    assert_eq!(responses.len(), close + 1);
    assert_eq!(responses.last().unwrap()["ok"], Value::Bool(true));
}

#[test]
fn step_response_carries_all_fields() {
    let mut session = Session::new(load_config_file(config_path()).unwrap());
    let (reply, _) = session.handle_line(r#"{"cmd":"reset","seed":3}"#);
    let reset: Value = serde_json::from_str(&reply).unwrap();
    assert_eq!(reset["obs"].as_array().unwrap().len(), 138);

    let action = vec![vec![0.25; 19]; 6];
    let line = serde_json::json!({"cmd": "step", "action": action}).to_string();
    let (reply, control) = session.handle_line(&line);
    assert!(matches!(control, Control::Continue));
    let step: Value = serde_json::from_str(&reply).unwrap();
    for key in ["obs", "reward", "q1", "q2", "q3", "eps", "clusters", "done"] {
        assert!(step.get(key).is_some(), "missing {key}");
    }
    assert_eq!(step["eps"].as_array().unwrap().len(), 6);
    assert_eq!(step["clusters"][0].as_array().unwrap().len(), 19);
}

#[test]
fn wrong_action_shape_is_reported_without_closing() {
    let mut session = Session::new(load_config_file(config_path()).unwrap());
    session.handle_line(r#"{"cmd":"reset","seed":0}"#);
    let (reply, control) = session.handle_line(r#"{"cmd":"step","action":[[0.5]]}"#);
    assert!(matches!(control, Control::Continue));
    let v: Value = serde_json::from_str(&reply).unwrap();
    assert_eq!(v["ok"], Value::Bool(false));
    assert_eq!(session.steps_served(), 0);
}
