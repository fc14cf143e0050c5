mod common;

use std::io::Write as _;
use std::process::Command;

use phylotorus::cli::{run, EXIT_CAP, EXIT_INPUT, EXIT_OK};
use phylotorus::{parse_group_spec, parse_newick};
use serde_json::Value;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn phylotorus(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("phylotorus").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn json(o: &Outcome) -> Value {
    serde_json::from_str(&o.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", o.stdout))
}

fn expected_codim(group: &str, newick: &str) -> usize {
    let g = parse_group_spec(group).unwrap().order();
    common::expected_codim(&parse_newick(newick).unwrap(), g)
}

#[test]
fn generate_tripod_kimura3() {
    let o = phylotorus(&["generate", "--group", "Z2xZ2", "--tree", "(1,2,3);"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let v = json(&o);
    let n = v["invariants"].as_array().unwrap().len();
    assert_eq!(n, expected_codim("Z2xZ2", "(1,2,3);"));
    assert_eq!(n, 6);
    assert!(o.stderr.is_empty());
}

#[test]
fn verify_quartet_z3_passes() {
    let o = phylotorus(&["verify", "--group", "Z3", "--tree", "((1,2),(3,4));"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let v = json(&o);
    assert_eq!(v["pass"], Value::Bool(true));
    assert_eq!(
        v["actual_count"].as_u64().unwrap() as usize,
        expected_codim("Z3", "((1,2),(3,4));")
    );
}

#[test]
fn trivial_factor_is_an_input_error() {
    let o = phylotorus(&["generate", "--group", "Z1", "--tree", "(1,2,3);"]);
    assert_eq!(o.code, EXIT_INPUT);
    assert!(o.stdout.is_empty());
    assert_eq!(o.stderr.lines().count(), 1, "{}", o.stderr);
}

#[test]
fn bad_newick_is_an_input_error() {
    for tree in ["((1,2),(3,4)", "((1,1),(3,4));", "((1),2,3);", ""] {
        let o = phylotorus(&["generate", "--group", "Z2", "--tree", tree]);
        assert_eq!(o.code, EXIT_INPUT, "{tree}");
        assert_eq!(o.stderr.lines().count(), 1, "{tree}: {}", o.stderr);
    }
}

#[test]
fn bad_arguments_are_input_errors() {
    for args in [
        vec!["generate", "--group", "Z2"],
        vec![
            "generate",
            "--group",
            "Z2",
            "--tree",
            "(1,2,3);",
            "--flow-cap",
            "0",
        ],
        vec![
            "generate", "--group", "Z2", "--tree", "(1,2,3);", "--mode", "fancy",
        ],
        vec!["frobnicate"],
    ] {
        let o = phylotorus(&args);
        assert_eq!(o.code, EXIT_INPUT, "{args:?}");
        assert_eq!(o.stderr.lines().count(), 1, "{args:?}: {}", o.stderr);
    }
}

#[test]
fn flow_cap_maps_to_exit_3() {
    for sub in ["generate", "verify", "lattice-info"] {
        let o = phylotorus(&[
            sub,
            "--group",
            "Z3",
            "--tree",
            "((1,2),(3,4));",
            "--flow-cap",
            "26",
        ]);
        assert_eq!(o.code, EXIT_CAP, "{sub}: {}", o.stderr);
        assert_eq!(o.stderr.lines().count(), 1);
    }
    let o = phylotorus(&[
        "generate",
        "--group",
        "Z3",
        "--tree",
        "((1,2),(3,4));",
        "--flow-cap",
        "27",
    ]);
    assert_eq!(o.code, EXIT_OK);
}

#[test]
fn tree_from_file() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "((1,2),3,(4,5));").unwrap();
    let arg = format!("@{}", file.path().display());
    let from_file = phylotorus(&["generate", "--group", "Z2", "--tree", &arg]);
    let inline = phylotorus(&["generate", "--group", "Z2", "--tree", "((1,2),3,(4,5));"]);
    assert_eq!(from_file.code, EXIT_OK, "{}", from_file.stderr);
    assert_eq!(from_file.stdout, inline.stdout);

    let missing = phylotorus(&[
        "generate",
        "--group",
        "Z2",
        "--tree",
        "@/nonexistent/tree.nwk",
    ]);
    assert_eq!(missing.code, EXIT_INPUT);
}

#[test]
fn output_is_byte_deterministic() {
    let base = [
        "generate",
        "--group",
        "Z2xZ3",
        "--tree",
        "(1,(2,(3,(4,5))));",
    ];
    let a = phylotorus(&base);
    let b = phylotorus(&base);
    let seq = phylotorus(&[&base[..], &["--sequential"]].concat());
    assert_eq!(a.code, EXIT_OK);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, seq.stdout);

    let seeded = [&base[..], &["--seed", "7"]].concat();
    let c = phylotorus(&seeded);
    let d = phylotorus(&seeded);
    let e = phylotorus(&[&seeded[..], &["--sequential"]].concat());
    assert_eq!(c.code, EXIT_OK);
    assert_eq!(c.stdout, d.stdout);
    assert_eq!(c.stdout, e.stdout);
}

#[test]
fn seeded_order_still_verifies() {
    for seed in ["1", "2", "3"] {
        let o = phylotorus(&[
            "verify",
            "--group",
            "Z4",
            "--tree",
            "(1,(2,(3,(4,(5,6)))));",
            "--seed",
            seed,
        ]);
        assert_eq!(o.code, EXIT_OK, "seed {seed}: {}", o.stdout);
    }
}

#[test]
fn factored_mode_verifies() {
    for group in ["Z6", "Z2xZ3", "Z4xZ2"] {
        let o = phylotorus(&[
            "verify",
            "--group",
            group,
            "--tree",
            "((1,2),(3,4));",
            "--mode",
            "factored",
        ]);
        assert_eq!(o.code, EXIT_OK, "{group}: {}", o.stdout);
        assert_eq!(json(&o)["pass"], Value::Bool(true));
    }
}

#[test]
fn algebra_text_output() {
    let o = phylotorus(&[
        "generate",
        "--group",
        "Z3",
        "--tree",
        "(1,2,3);",
        "--output",
        "algebra-text",
    ]);
    assert_eq!(o.code, EXIT_OK);
    assert_eq!(
        o.stdout.lines().filter(|l| l.contains(" - ")).count(),
        expected_codim("Z3", "(1,2,3);")
    );

    let o = phylotorus(&[
        "verify",
        "--group",
        "Z3",
        "--tree",
        "(1,2,3);",
        "--output",
        "algebra-text",
    ]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stdout.starts_with("pass"), "{}", o.stdout);
}

#[test]
fn lattice_info_reports_index() {
    let o = phylotorus(&["lattice-info", "--group", "Z2", "--tree", "((1,2),(3,4));"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let v = json(&o);
    // Quartet: 5 edges, 2 interior nodes.
    assert_eq!(v["dim_M0_tilde"], Value::from(5));
    assert_eq!(v["expected_index"].to_string().trim_matches('"'), "4");
}

#[test]
fn help_goes_to_stdout() {
    let o = phylotorus(&["--help"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stdout.contains("generate"));
    assert!(o.stderr.is_empty());
}

#[test]
fn binary_end_to_end() {
    let bin = env!("CARGO_BIN_EXE_phylotorus");
    let out = Command::new(bin)
        .args(["verify", "--group", "Z2", "--tree", "(1,2,3,4);"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pass"], Value::Bool(true));

    let out = Command::new(bin)
        .args(["generate", "--group", "Z1", "--tree", "(1,2,3);"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_INPUT));
    assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 1);
}
