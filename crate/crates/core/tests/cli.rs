use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparse-ksum"))
        .args(args)
        .current_dir(dir)
        .env_remove("SPARSE_KSUM_BUDGET")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

#[test]
fn gen_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--seed", "42", "gen", "--family", "modular", "--r", "16", "--k", "3", "--delta", "3/4"];
    let a = run(dir.path(), &args);
    let b = run(dir.path(), &args);
    assert_eq!(code(&a), 0);
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    let c = run(dir.path(), &["--seed", "43", "gen", "--family", "modular", "--r", "16", "--k", "3", "--delta", "3/4"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // missing seed and bad parameters are configuration errors
    assert_eq!(code(&run(d, &["gen", "--r", "8", "--k", "3"])), 2);
    assert_eq!(code(&run(d, &["--seed", "1", "gen", "--r", "8", "--k", "3", "--family", "ring"])), 2);
    assert_eq!(code(&run(d, &["--seed", "1", "gen", "--r", "8", "--k", "3", "--dist", "d7"])), 2);
    assert_eq!(code(&run(d, &["frobnicate"])), 2);
    // missing input file
    assert_eq!(code(&run(d, &["solve", "--in", "nope.json"])), 4);
    // 3^13 carry vectors
    assert_eq!(code(&run(d, &["--seed", "1", "reduce", "--kind", "k2v", "--q", "2", "--m", "13", "--r", "8", "--k", "3"])), 3);
    // moments with a trial budget below the request
    assert_eq!(code(&run(d, &["--seed", "1", "--budget", "100", "stats", "moments", "--grid", "r=6,k=3,m=4"])), 3);
}

#[test]
fn refuses_to_overwrite_input() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(d, &["--seed", "1", "gen", "--r", "10", "--k", "3", "--m", "8", "-o", "x.json"])), 0);
    let before = std::fs::read(d.join("x.json")).unwrap();
    assert_eq!(code(&run(d, &["solve", "--in", "x.json", "-o", "x.json"])), 2);
    assert_eq!(std::fs::read(d.join("x.json")).unwrap(), before);
}

#[test]
fn solve_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(d, &["--seed", "9", "gen", "--r", "14", "--k", "3", "--m", "14", "-o", "x.json"])), 0);
    let o = run(d, &["solve", "--in", "x.json", "--solver", "brute", "-o", "sol.json", "--row-out", "row.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let row: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("row.json")).unwrap()).unwrap();
    assert_eq!(row[0]["metrics"]["found"], "true");
    assert_eq!(row[0]["metrics"]["verified"], "true");
    assert_eq!(code(&run(d, &["replay", "--row", "row.json"])), 0);

    // a grid written as CSV replays too
    let o = run(d, &["--seed", "5", "stats", "moments", "--grid", "r=8|9,k=3,m=5", "--trials", "1000", "-o", "m.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(d.join("m.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert_eq!(code(&run(d, &["replay", "--row", "m.csv"])), 0);

    // a tampered metric is reported
    let tampered = text.replacen(",true,", ",false,", 1);
    std::fs::write(d.join("bad.csv"), tampered).unwrap();
    assert_eq!(code(&run(d, &["replay", "--row", "bad.csv"])), 1);

    // rows from another schema version are refused
    let old = std::fs::read_to_string(d.join("row.json")).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 99");
    std::fs::write(d.join("old.json"), old).unwrap();
    assert_eq!(code(&run(d, &["replay", "--row", "old.json"])), 2);
}

#[test]
fn dry_run_prints_plan() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--seed", "1", "--dry-run", "stats", "divergence", "--grid", "r=4,k=3,m=3", "--family", "modular"]);
    assert_eq!(code(&o), 0);
    let plan: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(plan["command"], "stats");
    assert_eq!(plan["cells"].as_array().unwrap().len(), 5);
    assert_eq!(plan["format"], "csv");
}

#[test]
fn pke_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let params = "r=64,eta=0.125,k=4,m=32,ell=430";
    assert_eq!(code(&run(d, &["--seed", "1", "pke", "keygen", "--params", params, "-o", "key.json"])), 0);
    for bit in ["0", "1"] {
        assert_eq!(code(&run(d, &["--seed", "2", "pke", "enc", "--key", "key.json", "--bit", bit, "-o", "ct.json"])), 0);
        let o = run(d, &["pke", "dec", "--key", "key.json", "--ct", "ct.json"]);
        assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), bit);
    }
}
