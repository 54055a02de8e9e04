//! Runs the binary on the bundled examples and compares stdout with the
//! files under `tests/golden`. `UPDATE_GOLDEN=1` rewrites them.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

const PHI0: &str = "P<=0.5[a] & P>=0.6[X b]";
const PSI: &str = "X !b & P<=0.7[a U b] & P<=0.6[X(!a & !b)]";

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str], stdin: &str) -> Run {
    let mut child = Command::new(env!("CARGO_BIN_EXE_pltlf"))
        .args(args)
        .env_remove("PLTLF_LOG")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn golden(name: &str, args: &[&str], stdin: &str, code: i32) {
    let r = run(args, stdin);
    assert_eq!(r.code, code, "{name}: exit code, stderr: {}", r.stderr);
    let path: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.out"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &r.stdout).unwrap();
        return;
    }
    let expected =
        std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
    assert_eq!(
        r.stdout,
        expected,
        "{name}: output differs from {}",
        path.display()
    );
}

#[test]
fn sat_three_model_example() {
    golden("sat_phi0", &["sat", PHI0], "", 0);
}

#[test]
fn sat_contradiction() {
    golden("sat_unsat", &["sat", "P>=0.5[a] & P>=0.6[!a]"], "", 1);
}

#[test]
fn model_three_model_example() {
    golden("model_phi0", &["model", PHI0], "", 0);
}

#[test]
fn mlt_psi() {
    golden(
        "mlt_psi",
        &["mlt", PSI, "--count", "3", "--max-len", "4"],
        "",
        0,
    );
}

#[test]
fn prob_of_trace() {
    golden("prob_phi0", &["prob", PHI0, "--trace", "-;a;b"], "", 0);
}

#[test]
fn prob_of_language() {
    let nfa = data("starts_empty.json");
    golden(
        "prob_nfa",
        &[
            "prob",
            PHI0,
            "--nfa",
            &nfa,
            "--count",
            "2",
            "--max-len",
            "3",
        ],
        "",
        0,
    );
}

#[test]
fn prefix_psi() {
    golden(
        "prefix_psi",
        &["prefix", PSI, "--prefix", "-;a", "--count", "2"],
        "",
        0,
    );
}

#[test]
fn p0_sat() {
    golden("p0_sat_phi0", &["p0-sat", &data("phi0.p0")], "", 0);
}

#[test]
fn p0_scenarios() {
    golden(
        "p0_scenarios_phi1",
        &["p0-scenarios", &data("phi1.p0")],
        "",
        0,
    );
}

#[test]
fn p0_monitor_switches() {
    golden(
        "p0_monitor_psi1",
        &["p0-monitor", &data("psi1.p0")],
        "-\n# comment\n\na\n",
        0,
    );
}

#[test]
fn p0_monitor_violation() {
    golden(
        "p0_monitor_violation",
        &["p0-monitor", &data("psi1.p0"), "--property", "G !a"],
        "-\na\n",
        1,
    );
}

#[test]
fn mine_response() {
    golden(
        "mine_response",
        &[
            "mine",
            "--log",
            &data("response_log.csv"),
            "--min-support",
            "0.8",
            "--templates",
            "response",
        ],
        "",
        0,
    );
}

#[test]
fn mined_file_feeds_back() {
    let r = run(
        &[
            "mine",
            "--log",
            &data("response_log.csv"),
            "--min-support",
            "0.8",
        ],
        "",
    );
    assert_eq!(r.code, 0);
    let dir = std::env::temp_dir().join(format!("pltlf-golden-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("mined.p0");
    std::fs::write(&file, &r.stdout).unwrap();
    let sat = run(&["p0-sat", file.to_str().unwrap()], "");
    assert_eq!(sat.code, 0, "{}", sat.stderr);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn parse_errors_carry_positions() {
    let r = run(&["sat", "a & (b U"], "");
    assert_eq!(r.code, 2);
    assert!(r.stdout.is_empty());
    assert!(r.stderr.starts_with("error: formula 1:"), "{}", r.stderr);
    let r = run(&["p0-monitor", &data("psi1.p0")], "-\na;b\n");
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("stdin line 2"), "{}", r.stderr);
    let r = run(&["p0-sat", "no/such/file.p0"], "");
    assert_eq!(r.code, 2);
}

#[test]
fn flags_are_validated() {
    assert_eq!(run(&["prob", PHI0], "").code, 2);
    assert_eq!(run(&["sat", PHI0, "--jobs", "0"], "").code, 2);
    assert_eq!(
        run(&["mine", "--log", "x.csv", "--min-support", "1.5"], "").code,
        2
    );
    assert_eq!(
        run(
            &[
                "mine",
                "--log",
                &data("response_log.csv"),
                "--min-support",
                "0.8",
                "--templates",
                "nope"
            ],
            ""
        )
        .code,
        2
    );
}

#[test]
fn output_is_stable() {
    let args = ["p0-scenarios", &data("psi1.p0")];
    let first = run(&args, "").stdout;
    assert_eq!(run(&args, "").stdout, first);
    let parallel = run(&["p0-scenarios", &data("psi1.p0"), "--jobs", "4"], "").stdout;
    assert_eq!(parallel, first);
    let model = ["model", PSI];
    assert_eq!(
        run(&model, "").stdout,
        run(&["model", PSI, "--jobs", "3"], "").stdout
    );
}

#[test]
fn envelope_shape() {
    let r = run(&["sat", PHI0, "--timing"], "");
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["command"], "sat");
    assert_eq!(v["status"], "sat");
    assert!(v["timing_ms"].is_u64());
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["command", "status", "result", "timing_ms"]);
    let pretty = run(&["prob", PHI0, "--trace", "-;a;b", "--pretty"], "").stdout;
    assert!(pretty.lines().count() > 1);
    let v: serde_json::Value = serde_json::from_str(&pretty).unwrap();
    assert_eq!(v["result"]["probability"]["value"], "1/2");
    assert_eq!(v["result"]["probability"]["decimal"], 0.5);
}
