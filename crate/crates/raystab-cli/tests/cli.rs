//! End-to-end CLI tests: exit codes, output determinism, fault injection.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_raystab"))
}

fn fixture(name: &str) -> String {
    format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

#[test]
fn member_exit_codes() {
    let dihedral = fixture("dihedral.group");
    let member = run(&["member", "--group", &dihedral, "--word", "b", "--period", "1"]);
    assert_eq!(member.status.code(), Some(0));
    assert!(stdout_of(&member).contains("member"));

    let non = run(&["member", "--group", &dihedral, "--word", "a", "--period", "1"]);
    assert_eq!(non.status.code(), Some(1));

    let missing = run(&["member", "--group", "/nonexistent.group", "--word", "a", "--period", "1"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn classify_csv() {
    let out = run(&["classify", "--group", &fixture("img_z2i.group"), "--csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("a,directed,,,10,true"));
    assert!(text.contains("b,finitary,1,,,true"));
    assert!(text.contains("c,directed,,,01,true"));
}

#[test]
fn enum_wp_counts() {
    let out = run(&[
        "enum-wp",
        "--group",
        &fixture("dihedral.group"),
        "--period",
        "1",
        "--max-len",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.starts_with("\nb\naa\nbb\naab\nbaa\nbbb\n"), "{text}");
    assert!(text.contains("3,3,8"));
}

#[test]
fn xval_passes_and_is_deterministic() {
    let args = [
        "xval",
        "--group",
        &fixture("dihedral.group"),
        "--period",
        "1",
        "--max-len",
        "5",
        "--seed",
        "3",
    ];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0), "{}", stdout_of(&first));
    let second = run(&args);
    assert_eq!(stdout_of(&first), stdout_of(&second));
    assert!(stdout_of(&first).lines().filter(|l| l.starts_with("PASS")).count() >= 8);
}

#[test]
fn xval_flags_a_corrupted_grammar() {
    let dir = std::env::temp_dir().join(format!("raystab-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let wrong: PathBuf = dir.join("wrong.et0l");
    // write the complement grammar where the language grammar is expected
    let gen = run(&[
        "grammar",
        "--group",
        &fixture("dihedral.group"),
        "--period",
        "1",
        "--variant",
        "eprime",
        "--out",
        wrong.to_str().unwrap(),
    ]);
    assert_eq!(gen.status.code(), Some(0));
    let out = run(&[
        "xval",
        "--group",
        &fixture("dihedral.group"),
        "--period",
        "1",
        "--max-len",
        "4",
        "--grammar-e",
        wrong.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout_of(&out);
    assert!(text.contains("FAIL  grammar-vs-oracle"), "{text}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn grammar_roundtrip_through_lang_and_checks() {
    let dir = std::env::temp_dir().join(format!("raystab-rt-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("e.et0l");
    let gen = run(&[
        "grammar",
        "--group",
        &fixture("dihedral.group"),
        "--period",
        "1",
        "--out",
        path.to_str().unwrap(),
        "--stats",
    ]);
    assert_eq!(gen.status.code(), Some(0));

    let lang = run(&["lang", "--grammar", path.to_str().unwrap(), "--max-len", "3"]);
    assert_eq!(lang.status.code(), Some(0));
    assert_eq!(stdout_of(&lang), "\nb\naa\nbb\naab\nbaa\nbbb\n");

    let check = run(&["check-grammar", "--grammar", path.to_str().unwrap(), "--max-len", "3", "--rounds", "4"]);
    assert_eq!(check.status.code(), Some(0));
    assert!(stdout_of(&check).contains("ok"));

    let gfun = run(&["gfun", "--grammar", path.to_str().unwrap(), "--max-deg", "4"]);
    assert_eq!(gfun.status.code(), Some(0));
    let text = stdout_of(&gfun);
    assert!(text.contains("0,1\n1,1\n2,2\n3,3\n4,6"), "{text}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn check_grammar_rejects_bad_fixtures() {
    for name in ["bad_eps_beta.et0l", "bad_empty_gamma.et0l", "ambiguous.et0l"] {
        let out = run(&["check-grammar", "--grammar", &fixture(name)]);
        assert_eq!(out.status.code(), Some(1), "{name}: {}", stdout_of(&out));
    }
    let ok = run(&["check-grammar", "--grammar", &fixture("astar.et0l")]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn transduce_identity_preserves_language() {
    let dir = std::env::temp_dir().join(format!("raystab-td-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let e_path = dir.join("e.et0l");
    let t_path = dir.join("t.et0l");
    run(&[
        "grammar",
        "--group",
        &fixture("dihedral.group"),
        "--period",
        "1",
        "--out",
        e_path.to_str().unwrap(),
    ]);
    let td = run(&[
        "transduce",
        "--grammar",
        e_path.to_str().unwrap(),
        "--gsm",
        &fixture("identity.gsm"),
        "--out",
        t_path.to_str().unwrap(),
    ]);
    assert_eq!(td.status.code(), Some(0), "{}", String::from_utf8_lossy(&td.stderr));
    let lang_before = run(&["lang", "--grammar", e_path.to_str().unwrap(), "--max-len", "4"]);
    let lang_after = run(&["lang", "--grammar", t_path.to_str().unwrap(), "--max-len", "4"]);
    assert_eq!(stdout_of(&lang_before), stdout_of(&lang_after));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn schreier_and_green_outputs() {
    let out = run(&[
        "schreier",
        "--group",
        &fixture("dihedral.group"),
        "--level",
        "12",
        "--period",
        "1",
        "--component-only",
        "--counts",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("0,1\n1,1\n2,2\n3,3"), "{text}");

    let green = run(&[
        "green",
        "--group",
        &fixture("dihedral.group"),
        "--period",
        "1",
        "--max-len",
        "3",
    ]);
    assert_eq!(green.status.code(), Some(0));
    let text = stdout_of(&green);
    assert!(text.contains("0,1,1\n1,1,2\n2,1,2\n3,3,8"), "{text}");
}
