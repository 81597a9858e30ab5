use std::fs;
use std::io::Write;
use std::process::{Command, Output, Stdio};

const LINE3: &str = r#"{"1Q": {"0": {}, "1": {}, "2": {}}, "2Q": {"0-1": {}, "1-2": {}}}"#;

fn quilt(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_quilt"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn isa_file(dir: &tempfile::TempDir) -> String {
    let path = dir.path().join("line3.json");
    fs::write(&path, LINE3).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn compiles_stdin_to_stdout() {
    let out = quilt(&[], "H 0\nCNOT 0 1\n");
    assert!(out.status.success(), "{}", text(&out.stderr));
    let program = text(&out.stdout);
    assert_eq!(program.matches("CZ").count(), 1);
    assert!(!program.contains("CNOT") && !program.contains("H "));
}

#[test]
fn file_in_file_out_with_chip() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("prog.quil");
    let output = dir.path().join("out.quil");
    fs::write(&input, "CCNOT 0 1 2\n").unwrap();
    let isa = isa_file(&dir);
    let out = quilt(
        &[input.to_str().unwrap(), "-o", output.to_str().unwrap(), "--isa", &isa, "--verify"],
        "",
    );
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(out.stdout.is_empty());
    let compiled = fs::read_to_string(&output).unwrap();
    assert!(compiled.matches("CZ").count() <= 7);
    for line in compiled.lines().filter(|l| l.starts_with("CZ")) {
        let qs: Vec<usize> = line.split_whitespace().skip(1).map(|q| q.parse().unwrap()).collect();
        assert_eq!(qs[0].abs_diff(qs[1]), 1, "{line} is not on a link");
    }
    assert!(text(&out.stderr).contains("verified"));
}

#[test]
fn stats_json_is_a_report() {
    let out = quilt(&["--stats", "json"], "CNOT 0 1\nCNOT 1 0\n");
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&text(&out.stderr)).unwrap();
    let program = text(&out.stdout);
    assert_eq!(report["instruction_count"].as_u64().unwrap() as usize, program.lines().count());
    assert_eq!(report["two_qubit_count"], 2);
    assert!(report["timings_ms"].is_object());
}

#[test]
fn stats_text_and_verbose_go_to_stderr() {
    let out = quilt(&["--stats", "text", "--verbose"], "RZ(-pi) 0\nRZ(pi) 0\nH 0\n");
    assert!(out.status.success());
    let err = text(&out.stderr);
    assert!(err.contains("instructions:"));
    assert!(err.contains("[compress]") || err.contains("[nativize]"));
    assert!(!text(&out.stdout).contains('['));
}

#[test]
fn parametric_programs_verify_at_samples() {
    let out = quilt(&["--verify"], "DECLARE a REAL\nRZ(a) 0\nRZ(0.5*a) 0\nRZ(0.2) 0\n");
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("RZ(0.2 + 1.5*a) 0"));
}

#[test]
fn state_prep_flag_is_accepted() {
    let out = quilt(&["--enable-state-prep-reductions", "--verify"], "H 0\nCNOT 0 1\nZ 1\n");
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stderr).contains("state"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(quilt(&["--no-such-flag"], "").status.code(), Some(1));
    assert_eq!(quilt(&["--discount", "1.5"], "H 0\n").status.code(), Some(1));
    assert_eq!(quilt(&["--compression-limit", "9"], "H 0\n").status.code(), Some(1));
    assert_eq!(quilt(&["--disable-rule", "no-such-rule"], "H 0\n").status.code(), Some(1));
    assert_eq!(quilt(&["--isa", "/nonexistent/chip.json"], "H 0\n").status.code(), Some(1));
    assert_eq!(quilt(&["--help"], "").status.code(), Some(0));
}

#[test]
fn compile_errors_exit_2() {
    let out = quilt(&[], "H 0\nBOGUS 1\n");
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("line 2"));
    let dir = tempfile::tempdir().unwrap();
    let isa = isa_file(&dir);
    assert_eq!(quilt(&["--isa", &isa], "CNOT 0 1\nCNOT 2 3\n").status.code(), Some(2));
}

#[test]
fn unverifiable_programs_exit_3() {
    let out = quilt(&["--verify"], "DECLARE ro BIT\nH 0\nMEASURE 0 ro\n");
    assert_eq!(out.status.code(), Some(3));
    assert!(text(&out.stderr).contains("cannot verify"));
}

#[test]
fn rules_can_be_listed_and_disabled() {
    let out = quilt(&["--list-rules"], "");
    let names = text(&out.stdout);
    assert!(names.lines().any(|l| l.starts_with("CCNOT-to-CNOT")));
    assert!(names.lines().any(|l| l.starts_with("kak")));
    let dir = tempfile::tempdir().unwrap();
    let isa = isa_file(&dir);
    let classified = text(&quilt(&["--list-rules", "--isa", &isa], "").stdout);
    assert!(classified.lines().any(|l| l.starts_with("agglutinate-RZs\t")));
    let out = quilt(&["--isa", &isa, "--disable-rule", "CCNOT-to-CNOT", "--verify"], "CCNOT 0 1 2\n");
    assert!(out.status.success(), "{}", text(&out.stderr));
}

#[test]
fn same_seed_same_output() {
    let dir = tempfile::tempdir().unwrap();
    let isa = isa_file(&dir);
    let prog = "CNOT 0 2\nCNOT 1 2\nCNOT 0 1\nRX(0.3) 2\nCNOT 2 0\n";
    let a = quilt(&["--isa", &isa, "--seed", "7", "--search", "a-star"], prog);
    let b = quilt(&["--isa", &isa, "--seed", "7", "--search", "a-star"], prog);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn naive_rewiring_starts_from_identity() {
    let dir = tempfile::tempdir().unwrap();
    let isa = isa_file(&dir);
    let out = quilt(&["--isa", &isa, "--naive-rewiring", "--stats", "json", "--verify"], "CNOT 0 2\n");
    assert!(out.status.success(), "{}", text(&out.stderr));
    let err = text(&out.stderr);
    let json_end = err.rfind('}').unwrap();
    let report: serde_json::Value = serde_json::from_str(&err[..=json_end]).unwrap();
    assert_eq!(report["initial_rewiring"]["0"], 0);
    assert_eq!(report["initial_rewiring"]["2"], 2);
    assert!(report["swap_count"].as_u64().unwrap() >= 1);
}
