use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mindstream::{PriorityFunction, Session};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn mindstream(args: &[&str], session: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mindstream"))
        .args(args)
        .env("MINDSTREAM_SESSION", session)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn ingest(fixture_name: &str, session: &Path) {
    let input = fixture(fixture_name);
    let out = mindstream(&["ingest", "--input", input.to_str().unwrap()], session);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn ingest_listing_then_list_actors() {
    let dir = tempfile::tempdir().unwrap();
    let session = dir.path().join("s.json");
    ingest("listing_t1_t9.txt", &session);

    let loaded = Session::load(&session).unwrap();
    assert_eq!(loaded.actors(), ["Wolf", "Jäger", "Frau", "Bett"]);
    assert_eq!(loaded.position_counter(), 9);

    let out = mindstream(&["actors"], &session);
    assert_eq!(stdout(&out), "Wolf\nJäger\nFrau\nBett\n");
    let out = mindstream(&["actors", "--c", "3"], &session);
    assert_eq!(stdout(&out), "Wolf\nJäger\n");
}

#[test]
fn query_text_lines() {
    let dir = tempfile::tempdir().unwrap();
    let session = dir.path().join("s.json");
    ingest("wolf_repetition.txt", &session);
    let out = mindstream(&["query", "--actor", "Wolf", "--fn", "f1", "--c", "20"], &session);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "sein\tböse\t0.156\n");

    ingest("blumen.txt", &session);
    let out = mindstream(&["query", "--actor", "Blumen", "--fn", "f2", "--c", "22"], &session);
    assert_eq!(stdout(&out).lines().next(), Some("sein\tschön\t0.563"));
}

#[test]
fn text_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let session = dir.path().join("s.json");
    ingest("listing_t1_t9.txt", &session);
    let args = ["query", "--actor", "Jäger", "--actor", "Wolf", "--fn", "f3"];
    let first = mindstream(&args, &session).stdout;
    assert_eq!(first, mindstream(&args, &session).stdout);
    assert!(String::from_utf8(first).unwrap().starts_with("# Jäger\nsuchen\tWolf\t1.000\n"));
}

#[test]
fn query_json_matches_engine_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let session = dir.path().join("s.json");
    ingest("blumen.txt", &session);
    let out = mindstream(
        &["query", "--actor", "Blumen", "--fn", "f2", "--c", "22", "--format", "json"],
        &session,
    );
    let printed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let engine = Session::load(&session)
        .unwrap()
        .snapshot("Blumen", PriorityFunction::F2, Some(22), None)
        .unwrap();
    assert_eq!(printed, serde_json::to_value(engine).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let session = dir.path().join("s.json");
    ingest("wolf_repetition.txt", &session);

    let out = mindstream(&["query", "--actor", "Niemand"], &session);
    assert_eq!(out.status.code(), Some(4));
    let out = mindstream(&["query", "--actor", "Wolf", "--c", "21"], &session);
    assert_eq!(out.status.code(), Some(5));

    let passage = fixture("passage.txt");
    let out = mindstream(&["ingest", "--mode", "raw", "--input", passage.to_str().unwrap()], &session);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lexicon required"));

    let out = mindstream(&["ingest", "--input", "/definitely/missing.txt"], &session);
    assert_eq!(out.status.code(), Some(2));

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "Wolf|legen\n").unwrap();
    let out = mindstream(&["ingest", "--input", bad.to_str().unwrap()], &session);
    assert_eq!(out.status.code(), Some(3));

    let corrupt = dir.path().join("corrupt.json");
    std::fs::write(&corrupt, "{ not json").unwrap();
    let out = mindstream(&["actors"], &corrupt);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn empty_input_gives_empty_session() {
    let dir = tempfile::tempdir().unwrap();
    let session = dir.path().join("s.json");
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "").unwrap();
    let out = mindstream(&["ingest", "--input", empty.to_str().unwrap()], &session);
    assert!(out.status.success());
    let loaded = Session::load(&session).unwrap();
    assert!(loaded.actors().is_empty());
    assert_eq!(loaded.position_counter(), 0);
}

#[test]
fn raw_ingest_settles_pending_requests() {
    let dir = tempfile::tempdir().unwrap();
    let session = dir.path().join("s.json");
    let (input, lexicon) = (fixture("passage.txt"), fixture("passage.lex"));
    let out = mindstream(
        &[
            "ingest",
            "--mode",
            "raw",
            "--input",
            input.to_str().unwrap(),
            "--lexicon",
            lexicon.to_str().unwrap(),
        ],
        &session,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let loaded = Session::load(&session).unwrap();
    assert!(loaded.pending().is_empty());
    assert_eq!(loaded.actors(), ["Wolf", "Jäger", "Frau", "Bett"]);
    assert!(loaded.dropped().iter().any(|d| d.text == "Wer bist du?"));
}

#[test]
fn resolve_command_answers_request() {
    let dir = tempfile::tempdir().unwrap();
    let session = dir.path().join("s.json");
    let input = dir.path().join("in.txt");
    std::fs::write(&input, "Jäger|gehen|vorbei|1\n").unwrap();
    ingest_path(&input, &session);

    // A pronoun line left pending: build it through the library, save, then
    // answer it from the command line.
    let mut s = Session::load(&session).unwrap();
    let delta = s.step("Er(PRON)|eintreten|-").unwrap();
    let id = delta.pending[0].request_id.clone();
    s.save(&session).unwrap();

    let listed = stdout(&mindstream(&["resolve"], &session));
    assert!(listed.starts_with(&format!("{id}\tPRONOUN_BINDING\t")));

    let out = mindstream(
        &["resolve", "--id", &id, "--actor", "Jäger", "--object", "Haus"],
        &session,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out), "Jäger|eintreten|Haus|2\n");

    let again = mindstream(&["resolve", "--id", &id, "--actor", "Jäger"], &session);
    assert!(!again.status.success());
}

fn ingest_path(input: &Path, session: &Path) {
    let out = mindstream(&["ingest", "--input", input.to_str().unwrap()], session);
    assert!(out.status.success());
}
