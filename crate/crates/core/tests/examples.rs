use std::path::PathBuf;
use std::process::Command;

fn example(name: &str) -> PathBuf {
    // target/<profile>/deps/<this test> -> target/<profile>/examples/<name>
    let exe = std::env::current_exe().unwrap();
    let dir = exe.parent().unwrap().parent().unwrap().join("examples");
    dir.join(format!("{name}{}", std::env::consts::EXE_SUFFIX))
}

fn run(name: &str) -> String {
    let path = example(name);
    assert!(path.exists(), "{} not built", path.display());
    let out = Command::new(&path).output().unwrap();
    assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn score_extraction() {
    let out = run("score_extraction");
    assert!(out.contains("gate: Passed"));
    assert!(out.contains("truncated response: gate InvalidJson, reward 0"));
}

#[test]
fn list_matching() {
    let out = run("list_matching");
    assert!(out.contains("tied matrix pairs: [(0, 0), (1, 1)]"));
    assert!(out.contains("matches 0 pair(s)"));
}

#[test]
fn chunk_and_extract() {
    let out = run("chunk_and_extract");
    assert!(out.contains("doc-c (4 chunks)"));
    assert!(out.contains("[1] ceo = \"Ada Lovelace\""));
}

#[test]
fn augment_corpus() {
    assert!(run("augment_corpus").contains("doc-a#0"));
}

#[test]
fn training_math() {
    let out = run("training_math");
    assert!(out.contains("lr at step 500: 1e-4"));
    assert!(out.contains("in band after"));
}

#[test]
fn evaluate_replay() {
    assert!(run("evaluate_replay").contains("50 tasks"));
}
