use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn cgbench(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgbench"))
        .current_dir(dir)
        .args(args)
        .env_remove("CGBENCH_SEED")
        .output()
        .expect("spawn cgbench")
}

fn cgbench_stdin(dir: &Path, args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_cgbench"))
        .current_dir(dir)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn cgbench");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const PROGRAM: &str = "function f() { g(); }\nfunction g() {}\nf();\n";

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.js"), PROGRAM).unwrap();
    dir
}

fn merged(dir: &Path) {
    assert!(cgbench(dir, &["extract", "a.js", "-o", "p.json"]).status.success());
    assert!(cgbench(dir, &["extract", "--mode", "optimistic", "a.js", "-o", "o.json"]).status.success());
    let o = cgbench(dir, &["merge", "--tool", "pess=p.json", "--tool", "opt=o.json", "-o", "m.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn extract_prints_interchange_json() {
    let dir = setup();
    let o = cgbench(dir.path(), &["extract", "a.js"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["nodes"].as_array().unwrap().len(), 3);
    assert_eq!(doc["edges"].as_array().unwrap().len(), 2);
    assert_eq!(doc["nodes"][0]["label"], "toplevel");
}

#[test]
fn syntax_error_exits_one_with_code() {
    let dir = setup();
    fs::write(dir.path().join("bad.js"), "function (").unwrap();
    let o = cgbench(dir.path(), &["extract", "bad.js"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[PARSE_ERROR]"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    let dir = setup();
    assert_eq!(cgbench(dir.path(), &["nope"]).status.code(), Some(2));
    assert_eq!(cgbench(dir.path(), &["extract"]).status.code(), Some(2));
    assert_eq!(cgbench(dir.path(), &["extract", "--mode", "lazy", "a.js"]).status.code(), Some(2));
}

#[test]
fn dot_roundtrip_through_convert() {
    let dir = setup();
    let d = dir.path();
    assert!(cgbench(d, &["extract", "a.js", "-o", "a.json"]).status.success());
    assert!(cgbench(d, &["extract", "--format", "dot", "a.js", "-o", "a.dot"]).status.success());
    let o = cgbench(d, &["convert", "a.dot"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), fs::read_to_string(d.join("a.json")).unwrap());
}

#[test]
fn convert_edge_list_with_offsets_and_patch() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("e.txt"), "x.js:0:0 -> x.js:4:2\n").unwrap();
    fs::write(d.join("patch.txt"), "x.js:5:3 -> x.js:6:1\n").unwrap();
    let o = cgbench(
        d,
        &["convert", "--from", "edges", "--line-offset", "1", "--column-offset", "1", "--patch", "patch.txt", "--format", "edges", "e.txt"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "x.js:1:1 -> x.js:6:1");
}

#[test]
fn stats_refuses_unvalidated_merge() {
    let dir = setup();
    merged(dir.path());
    let o = cgbench(dir.path(), &["stats", "m.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error[UNVALIDATED_EDGES]"));
}

#[test]
fn venn_csv_counts_shared_edges() {
    let dir = setup();
    merged(dir.path());
    let o = cgbench(dir.path(), &["venn", "--format", "csv", "m.json"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("opt+pess,2,0,100.0"), "{text}");
}

#[test]
fn validate_then_stats() {
    let dir = setup();
    let d = dir.path();
    merged(d);
    let o = cgbench_stdin(d, &["validate", "m.json"], "t\nf\n");
    assert!(o.status.success(), "{}", stderr(&o));
    let o = cgbench(d, &["stats", "--format", "csv", "m.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("combination,TP,All,TPstar,precision_pct,recall_pct,f_pct\n"));
    assert!(text.contains("opt+pess,1,2,1,50,100,67"), "{text}");
}

#[test]
fn validate_quit_and_eof_leave_file_untouched() {
    let dir = setup();
    let d = dir.path();
    merged(d);
    let before = fs::read_to_string(d.join("m.json")).unwrap();
    assert!(cgbench_stdin(d, &["validate", "m.json"], "q\n").status.success());
    assert!(cgbench_stdin(d, &["validate", "m.json"], "").status.success());
    assert!(cgbench_stdin(d, &["validate", "m.json"], "s\ns\n").status.success());
    assert_eq!(fs::read_to_string(d.join("m.json")).unwrap(), before);
}

#[test]
fn validate_partial_session_resumes() {
    let dir = setup();
    let d = dir.path();
    merged(d);
    assert!(cgbench_stdin(d, &["validate", "m.json"], "t\nq\n").status.success());
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("m.json")).unwrap()).unwrap();
    let flagged = doc["edges"].as_array().unwrap().iter().filter(|e| e.get("valid").is_some()).count();
    assert_eq!(flagged, 1);
    let o = cgbench_stdin(d, &["validate", "m.json"], "f\n");
    assert!(stderr(&o).contains("[1/1]"), "{}", stderr(&o));
}

#[test]
fn validate_reports_missing_source() {
    let dir = setup();
    let d = dir.path();
    merged(d);
    fs::remove_file(d.join("a.js")).unwrap();
    let o = cgbench_stdin(d, &["validate", "m.json"], "q\n");
    assert!(stderr(&o).contains("MISSING_SOURCE a.js"), "{}", stderr(&o));
}

#[test]
fn sample_is_seeded_and_sized() {
    let dir = setup();
    let d = dir.path();
    merged(d);
    let a = cgbench(d, &["sample", "m.json", "--region", "opt,pess", "--size", "1", "--seed", "7"]);
    let b = cgbench(d, &["sample", "m.json", "--region", "opt,pess", "--size", "1", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a).lines().count(), 1);
    let c = cgbench(d, &["sample", "m.json", "--region", "opt,pess", "--size", "5"]);
    assert_eq!(c.status.code(), Some(1));
    assert!(stderr(&c).contains("error[SAMPLE_TOO_LARGE]"));
}

#[test]
fn generate_verify_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = cgbench(
        d,
        &["generate", "--category", "complex", "--functions", "24", "--edges", "40", "--seed", "5", "--name", "c24", "--out", "gen"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(d.join("gen/c24/ground-truth.json").is_file());
    let o = cgbench(d, &["verify", "gen/c24"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 3);

    let o = cgbench(d, &["bench", "--runs", "2", "--interval-ms", "10", "--samples-dir", "samples", "gen/c24"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "target,input,run,wall_seconds,peak_rss_mb");
    assert_eq!(rows.len(), 3);
    assert!(d.join("samples/reference_c24_run1.csv").is_file());
}

#[test]
fn generate_rejects_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let o = cgbench(dir.path(), &["generate", "--functions", "5", "--edges", "100"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error[INFEASIBLE_PARAMS]"));
}

#[test]
fn verify_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(cgbench(d, &["generate", "--functions", "10", "--edges", "20", "--name", "s", "--out", "."]).status.success());
    let src = d.join("s/src/s.js");
    let text = fs::read_to_string(&src).unwrap();
    fs::write(&src, text.replacen("f1(", "f1 + (", 1)).unwrap();
    let o = cgbench(d, &["verify", "s"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn scripted_session_true_false_quit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("a.js"), "function f() { g(); h(); }\nfunction g() {}\nfunction h() {}\nf();\n").unwrap();
    assert!(cgbench(d, &["extract", "a.js", "-o", "g.json"]).status.success());
    assert!(cgbench(d, &["merge", "--tool", "ref=g.json", "-o", "m.json"]).status.success());
    let o = cgbench_stdin(d, &["validate", "m.json"], "t\nf\nq\n");
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("m.json")).unwrap()).unwrap();
    let valid: Vec<Option<bool>> = doc["edges"].as_array().unwrap().iter().map(|e| e["valid"].as_bool()).collect();
    assert_eq!(valid.len(), 3);
    assert_eq!(valid.iter().filter(|v| **v == Some(true)).count(), 1);
    assert_eq!(valid.iter().filter(|v| **v == Some(false)).count(), 1);
    assert_eq!(valid.iter().filter(|v| v.is_none()).count(), 1);

    // Fully labelled document without --revisit: nothing to ask, file unchanged.
    assert!(cgbench_stdin(d, &["validate", "m.json"], "t\n").status.success());
    let before = fs::read_to_string(d.join("m.json")).unwrap();
    let o = cgbench_stdin(d, &["validate", "m.json"], "");
    assert!(stderr(&o).contains("no changes"));
    assert_eq!(fs::read_to_string(d.join("m.json")).unwrap(), before);
}

#[test]
fn validate_only_listed_sample() {
    let dir = setup();
    let d = dir.path();
    merged(d);
    let o = cgbench(d, &["sample", "m.json", "--region", "opt,pess", "--size", "1", "--seed", "7", "-o", "keys.txt"]);
    assert!(o.status.success());
    let o = cgbench_stdin(d, &["validate", "m.json", "--only", "keys.txt"], "t\n");
    assert!(stderr(&o).contains("[1/1]"), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("m.json")).unwrap()).unwrap();
    let flagged = doc["edges"].as_array().unwrap().iter().filter(|e| e.get("valid").is_some()).count();
    assert_eq!(flagged, 1);
}
