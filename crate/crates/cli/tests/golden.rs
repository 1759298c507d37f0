use std::path::PathBuf;
use std::process::Command;

use wall_lab_cli::run;

fn golden_files() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
}

/// The argv echoed on the first line of a table.
fn header_argv(text: &str) -> Vec<String> {
    let first = text.lines().next().unwrap();
    first.trim_start_matches("# ").split_whitespace().map(String::from).collect()
}

fn run_in_process(argv: &[String]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

#[test]
fn one_fixture_per_command() {
    let names: Vec<String> =
        golden_files().iter().map(|p| p.file_stem().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["classical", "delay", "kernel", "packet", "regularize", "wkb"]);
}

#[test]
fn binary_reproduces_golden_tables() {
    for path in golden_files() {
        let expected = std::fs::read_to_string(&path).unwrap();
        let argv = header_argv(&expected);
        let output = Command::new(env!("CARGO_BIN_EXE_wall-lab")).args(&argv[1..]).output().unwrap();
        assert_eq!(output.status.code(), Some(0), "{}", path.display());
        assert_eq!(String::from_utf8(output.stdout).unwrap(), expected, "{}", path.display());
    }
}

#[test]
fn output_does_not_depend_on_thread_count() {
    for path in golden_files() {
        let expected = std::fs::read_to_string(&path).unwrap();
        let argv = header_argv(&expected);
        for threads in [1, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let (code, text) = pool.install(|| run_in_process(&argv));
            assert_eq!(code, 0);
            assert_eq!(text, expected, "{} with {threads} threads", path.display());
        }
    }
}

#[test]
fn headers_round_trip_through_json() {
    let expected = std::fs::read_to_string(golden_files()[1].clone()).unwrap();
    let mut argv = header_argv(&expected);
    argv.extend(["--format".into(), "json".into()]);
    let (code, text) = run_in_process(&argv);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["config"]["argv"].as_str().unwrap(), expected.lines().next().unwrap().trim_start_matches("# "));
    let csv_rows = expected.lines().count() - 2;
    assert_eq!(doc["records"].as_array().unwrap().len(), csv_rows);
}
