use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forcelab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(stdout(o).trim()).expect("one json object")
}

#[test]
fn atomic_query_on_fixture() {
    let sys = fixture("sysA.fsys");
    let o = run(&["atomic", "--system", &sys, "--p", "p", "--x", "zero", "--rel", "in", "--y", "y"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "true");

    let query = ["atomic", "--system", &sys, "--p", "q", "--x", "zero", "--rel", "in", "--y", "xp"];
    let o = run(&query);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not hereditarily symmetric"));

    let mut plain = vec!["--json"];
    plain.extend(query);
    plain.push("--plain");
    let o = run(&plain);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["holds"], false);
}

#[test]
fn truth_check_passes_on_fixture() {
    let sys = fixture("sysA.fsys");
    let o = run(&["truth-check", "--system", &sys, "--phi", "ex z . z in y", "--bind", "y=y", "--cutoff", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "PASS (2 generics, exact)");
}

#[test]
fn pretame_refusal_reports_minimal_sizes() {
    let base = ["--family", "SYS-B", "--param", "M=2", "--param", "N=2"];
    let mut args: Vec<&str> = vec!["--json", "pretame"];
    args.extend(base);
    args.extend(["--family-dense", "length", "--p", "root", "--cap", "1", "--at-p"]);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert_eq!(v["outcome"], "refusal");
    assert_eq!(v["minimal_sizes"], serde_json::json!([2, 4]));

    let mut args: Vec<&str> = vec!["pretame"];
    args.extend(base);
    args.extend(["--family-dense", "length", "--p", "root", "--cap", "4", "--at-p"]);
    assert_eq!(run(&args).status.code(), Some(0));
}

#[test]
fn invalid_systems_exit_with_errors() {
    let o = run(&["check-system", "--system", &fixture("no_filterbase.fsys")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("filter base required"));

    let o = run(&["check-system", "--system", &fixture("broken_auto.fsys")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("(r, p)"));

    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["check-system", "--family", "SYS-Z"]).status.code(), Some(2));
}

#[test]
fn families_and_probes() {
    let o = run(&["check-system", "--family", "SYS-A"]);
    assert_eq!(o.status.code(), Some(0));

    let o = run(&[
        "orbit", "--family", "SYS-C", "--param", "A=2", "--param", "B=1", "--param", "C=3",
        "--q", "a1n0g0v1", "--e", "0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "3");

    let o = run(&["--json", "generics", "--family", "SYS-B", "--param", "M=2", "--param", "N=2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["generics"].as_array().map(Vec::len), Some(4));
}

#[test]
fn witness_certificate_is_emitted() {
    let sys = fixture("sysA.fsys");
    let o = run(&[
        "witness", "--system", &sys, "--p", "p", "--x", "zero", "--rel", "in", "--y", "y", "--emit-certificate",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("true"));
    let cert: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert!(cert["tuples"].as_array().unwrap().iter().any(|t| t["rel"] == "in" && t["q"] == "p"));
}

#[test]
fn axioms_report_on_fixture() {
    let sys = fixture("sysA.fsys");
    let o = run(&["--json", "axioms", "--system", &sys, "--comprehension", "ex w . w in x"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}
