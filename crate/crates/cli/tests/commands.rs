use std::io::Write;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cycaudit")).args(args).output().expect("spawn cycaudit")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn temp_file(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

#[test]
fn hminus_59() {
    let o = run(&["hminus", "59"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("h-(59) = 41241 = 3 · 59 · 233"));
    assert!(text.contains("Q = 1, w = 118"));
}

#[test]
fn hminus_small_and_normalized() {
    assert_eq!(stdout(&run(&["hminus", "3"])).lines().next(), Some("h-(3) = 1"));
    assert_eq!(stdout(&run(&["hminus", "23"])).lines().next(), Some("h-(23) = 3"));
    let o = stdout(&run(&["hminus", "46"]));
    assert!(o.starts_with("h-(46) = 3\ncomputed for Q(zeta_23)"));
}

#[test]
fn hminus_rejects_q() {
    let o = run(&["hminus", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
}

#[test]
fn bound_outputs() {
    assert_eq!(stdout(&run(&["bound", "--disc", "59", "--m", "2"])), "H = 62.64031880 (rounded up)\n");
    let o = stdout(&run(&["bound", "--disc", "3969", "--m", "1"]));
    assert!(o.starts_with("H = 63\nnote: "));
    assert_eq!(run(&["bound", "--disc", "1", "--m", "2"]).status.code(), Some(2));
    assert_eq!(run(&["bound", "--disc", "59", "--m", "x"]).status.code(), Some(2));
}

#[test]
fn subfields_of_59() {
    let o = stdout(&run(&["subfields", "59"]));
    let rows: Vec<&str> = o.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    let degrees: Vec<&str> = rows.iter().map(|r| r.split_whitespace().next().unwrap()).collect();
    assert_eq!(degrees, ["1", "2", "29", "58"]);
    assert!(rows[1].contains("-59") && rows[1].contains("62.64031880"));
}

#[test]
fn verify_paper_is_clean() {
    let o = run(&["verify-paper"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().last(), Some("0 violations"));
    assert!(text.contains("49 records"));
}

#[test]
fn verify_paper_structured() {
    let o = run(&["verify-paper", "--format", "structured"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["summary"]["violation"], 0);
    for line in text.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
}

#[test]
fn audit_reports_file_and_line() {
    let f = temp_file(
        "{\"field\":{\"kind\":\"cyclotomic\",\"u\":59},\"h_minus\":[[3,1]],\"source\":\"t\"}\n\
         {\"field\":{\"kind\":\"cyclotomic\",\"u\":59},\"h_minus\":[[91,1]],\"source\":\"t\"}\n",
    );
    let path = f.path().to_str().unwrap();
    let o = run(&["audit", path]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(&format!("{path}:2:")), "{err}");
    assert!(err.contains("91 = 7 · 13 is not prime"), "{err}");
}

#[test]
fn audit_missing_file() {
    assert_eq!(run(&["audit", "/nonexistent/records.jsonl"]).status.code(), Some(2));
}

#[test]
fn audit_finds_violation() {
    let f = temp_file("{\"field\":{\"kind\":\"abelian\",\"degree\":3,\"conductor\":7},\"h\":[[5,1]],\"source\":\"t\"}\n");
    let o = run(&["audit", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("VIOLATION"));
    assert_eq!(text.lines().last(), Some("2 violations"));
}

#[test]
fn probable_prime_flag() {
    let f = temp_file(
        "{\"field\":{\"kind\":\"cyclotomic\",\"u\":59},\"h\":[[\"170141183460469231731687303715884105727\",1]],\"source\":\"t\"}\n",
    );
    let path = f.path().to_str().unwrap();
    assert_ne!(run(&["audit", path]).status.code(), Some(2));
    assert_eq!(run(&["--reject-probable-primes", "audit", path]).status.code(), Some(2));
}
