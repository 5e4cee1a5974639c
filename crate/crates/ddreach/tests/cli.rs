//! End-to-end checks of the command-line binary: generated files, run
//! output, CSV append behavior, cross-algorithm comparison, scaling curves,
//! and the exit-code contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ddreach::{mdd, parse_tsys, tsys_dims, NodeRef, Store, StoreConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ddreach"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn gen_counter_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["gen", "counter", "--n", "3", "-o", "c3.tsys"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("c3.tsys")).unwrap();
    assert_eq!(tsys_dims(&text).unwrap(), (3, 2));
    let store = Store::new(StoreConfig::new(3, 2)).unwrap();
    let sys = parse_tsys(&store, &text).unwrap();
    assert_eq!(sys.partials.len(), 3);
    assert_eq!(sys.init.count(&store).unwrap().to_string(), "1");
}

#[test]
fn gen_philosophers_has_three_blocks_per_seat() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["gen", "philosophers", "--k", "4"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("vars 12 domain 2"));
    assert_eq!(text.matches("rel ").count(), 12);
}

#[test]
fn gen_badcase_zeroes_the_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["gen", "badcase-counter", "--n", "4", "-o", "b4.tsys"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("b4.tsys")).unwrap();
    let (n, m) = tsys_dims(&text).unwrap();
    assert_eq!((n, m), (5, 2));
    let store = Store::new(StoreConfig::new(n, m)).unwrap();
    let sys = parse_tsys(&store, &text).unwrap();
    let merged = mdd::merge_partials(&store, &sys.partials, n).unwrap();
    // Both stay-quadrants of the top variable are empty: every transition
    // flips the guard bit.
    for side in [0, 1] {
        let half = store.child(merged.root, side).unwrap();
        assert_eq!(store.child(half, side).unwrap(), NodeRef::ZERO);
    }
}

#[test]
fn gen_rejects_mismatched_size_flags() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(dir.path(), &["gen", "counter", "--k", "3"])), 4);
    assert_eq!(code(&run_in(dir.path(), &["gen", "counter"])), 4);
    assert_eq!(code(&run_in(dir.path(), &["gen", "philosophers", "--n", "3"])), 4);
}

#[test]
fn run_reports_and_appends_stats() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["gen", "counter", "--n", "6", "-o", "c6.tsys"]);
    let args = [
        "run", "c6.tsys", "--alg", "reach-bdd", "--stats", "runs.csv", "--dump-dd", "c6.dd",
    ];
    let first = run_in(dir.path(), &args);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let lines: Vec<String> = stdout(&first).lines().map(String::from).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("model,alg,workers"));
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "c6");
    assert_eq!(fields[1], "reach-bdd");
    assert_eq!(*fields.last().unwrap(), "64");
    // Determinism: a second run reports the same final count.
    let second = run_in(dir.path(), &args);
    let again: Vec<String> = stdout(&second).lines().map(String::from).collect();
    assert_eq!(
        again[1].split(',').next_back().unwrap(),
        fields.last().cloned().unwrap()
    );
    // The stats file accumulated a header and one row per invocation.
    let csv = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert_eq!(csv.lines().filter(|l| l.starts_with("model,")).count(), 1);
    let dd = fs::read_to_string(dir.path().join("c6.dd")).unwrap();
    assert!(dd.starts_with("dd "));
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.tsys"),
        "tsys 1\nvars 2 domain 2\ninit\n0 0\nend\nbogus\n",
    )
    .unwrap();
    run_in(dir.path(), &["gen", "counter", "--n", "20", "-o", "c20.tsys"]);
    run_in(dir.path(), &["gen", "counter", "--n", "3", "-o", "c3.tsys"]);

    let parse = run_in(dir.path(), &["run", "bad.tsys", "--alg", "bfs"]);
    assert_eq!(code(&parse), 3);
    let timeout = run_in(
        dir.path(),
        &["run", "c20.tsys", "--alg", "bfs", "--timeout", "0.0001"],
    );
    assert_eq!(code(&timeout), 2);
    let unknown_alg = run_in(dir.path(), &["run", "c3.tsys", "--alg", "dfs"]);
    assert_eq!(code(&unknown_alg), 4);
    let zero_timeout = run_in(
        dir.path(),
        &["run", "c3.tsys", "--alg", "bfs", "--timeout", "0"],
    );
    assert_eq!(code(&zero_timeout), 4);
    // inf parses as f64 but must be rejected, not fed to Duration::from_secs_f64.
    let inf_timeout = run_in(
        dir.path(),
        &["run", "c3.tsys", "--alg", "bfs", "--timeout", "inf"],
    );
    assert_eq!(code(&inf_timeout), 4);
    let no_files = run_in(dir.path(), &["compare"]);
    assert_eq!(code(&no_files), 4);
    let zero_reps = run_in(
        dir.path(),
        &[
            "scaling", "--model", "counter", "--sizes", "4", "--alg", "bfs", "--reps", "0",
        ],
    );
    assert_eq!(code(&zero_reps), 4);
    let missing = run_in(dir.path(), &["run", "nosuch.tsys", "--alg", "bfs"]);
    assert_eq!(code(&missing), 1);
    let help = bin().arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn compare_agrees_across_algorithms_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["gen", "counter", "--n", "8", "-o", "c8.tsys"]);
    run_in(dir.path(), &["gen", "philosophers", "--k", "3", "-o", "p3.tsys"]);
    let out = run_in(
        dir.path()
        ,
        &[
            "compare", "c8.tsys", "p3.tsys", "--oracle", "--csv", "cmp.csv",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("all methods agree"));
    // 5 algorithms x 2 files plus 2 oracle lines plus header and verdict.
    assert_eq!(text.matches("oracle").count(), 2);
    let csv = fs::read_to_string(dir.path().join("cmp.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn scaling_matches_the_analytic_counts() {
    let dir = tempfile::tempdir().unwrap();
    let bfs = run_in(
        dir.path(),
        &[
            "scaling", "--model", "counter", "--sizes", "4,6", "--alg", "bfs",
        ],
    );
    assert_eq!(code(&bfs), 0);
    let lines: Vec<String> = stdout(&bfs).lines().map(String::from).collect();
    assert_eq!(lines[0], "size,reach_calls,iterations,wall_time_ms");
    let row4: Vec<&str> = lines[1].split(',').collect();
    let row6: Vec<&str> = lines[2].split(',').collect();
    assert_eq!((row4[0], row4[2]), ("4", "16"));
    assert_eq!((row6[0], row6[2]), ("6", "64"));

    let reach = run_in(
        dir.path(),
        &[
            "scaling", "--model", "counter", "--sizes", "4,8,16", "--alg", "reach-bdd",
            "--reps", "2", "--csv", "curve.csv",
        ],
    );
    assert_eq!(code(&reach), 0);
    let csv = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let calls: Vec<u64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    // Linear growth: 2n - 1 recursive entries on the counters.
    assert_eq!(calls, vec![7, 15, 31]);
}
