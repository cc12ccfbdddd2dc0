use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softmax-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv::Reader::from_reader(csv.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

fn probs(field: &str) -> Vec<f64> {
    field.split(';').map(|v| v.parse().unwrap()).collect()
}

#[test]
fn eval_examples() {
    let r = rows(&stdout(&["eval", "--mech", "plsoftmax:delta=1", "--x", "0.5,0"]));
    assert_eq!(probs(&r[0][2]), vec![0.75, 0.25]);
    assert_eq!(r[0][3], "0.125");
    assert_eq!(r[0][5], "2");

    let r = rows(&stdout(&["eval", "--mech", "exp:lambda=1", "--x", "0,0,0"]));
    assert!(probs(&r[0][2]).iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));

    let r = rows(&stdout(&["eval", "--mech", "pow", "--lambda", "1", "--x", "2,1"]));
    let p = probs(&r[0][2]);
    assert!((p[0] - 2.0 / 3.0).abs() < 1e-9 && (p[1] - 1.0 / 3.0).abs() < 1e-9);
}

#[test]
fn malformed_vector_file_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.txt");
    std::fs::write(&path, "# values\n1 2 3\n4 five 6\n").unwrap();
    let out = run(&["eval", "--mech", "sparsemax", "--x-file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["status"], "error");
    assert!(err["error"].as_str().unwrap().contains("line 3"));
}

#[test]
fn lipschitz_rows() {
    let csv = stdout(&[
        "lipschitz", "--mech", "plsoftmax", "--delta", "0.5,2", "--d", "6", "--metrics", "l1:l1,l2:l1,linf:l1",
        "--trials", "300", "--seeds", "1,2",
    ]);
    let r = rows(&csv);
    assert_eq!(r.len(), 12);
    for row in &r {
        let (est, bound): (f64, f64) = (row[7].parse().unwrap(), row[8].parse().unwrap());
        assert!(est <= bound && row[9] == "true", "{row:?}");
    }

    let r = rows(&stdout(&["lipschitz", "--mech", "exp:lambda=2", "--d", "100", "--metrics", "l2:l1", "--trials", "20"]));
    let est: f64 = r[0][7].parse().unwrap();
    assert!(est >= 0.49 * 2.0, "{est}");
    assert_eq!(r[0][8], "inf");
}

#[test]
fn submodular_examples() {
    let r = rows(&stdout(&[
        "submodular", "--synthetic", "3", "--mech", "pow:lambda=1,argmax", "--drop-prob", "0", "--seeds", "0..10",
    ]));
    assert!(r.iter().all(|row| row[5] == "0" && row[6] == "0"));
    let argmax = r.iter().find(|row| row[0] == "argmax").unwrap();
    assert_eq!(argmax[3], "1");

    let per_seed = stdout(&["submodular", "--synthetic", "3", "--mech", "exp:lambda=1", "--seeds", "0..4", "--per-seed"]);
    assert!(per_seed.starts_with("mechanism,param,seed,obj_ratio,l1_dist,linf_dist\n"));
    assert_eq!(per_seed.lines().count(), 5);
}

#[test]
fn dominance_check_passes_on_sweeps_and_fails_without_exp() {
    let lambdas_pow = "0.25,0.5,1,2,4,8,16";
    let only_pow = run(&[
        "submodular", "--synthetic", "1", "--mech", "pow", "--lambda", lambdas_pow, "--seeds", "0..100",
        "--check-dominance", "--out", "/dev/null",
    ]);
    // Only Pow rows: there is nothing to match against, which is a failure.
    assert_eq!(only_pow.status.code(), Some(1));
    let summary: serde_json::Value = serde_json::from_slice(&only_pow.stderr).unwrap();
    assert_eq!(summary["failures"][0]["check"], "pow_dominance");

    let mech = "pow:lambda=0.25,pow:lambda=0.5,pow:lambda=1,pow:lambda=2,pow:lambda=4,\
                exp:lambda=0.02,exp:lambda=0.04,exp:lambda=0.08,exp:lambda=0.16,exp:lambda=0.32";
    let out = run(&["submodular", "--synthetic", "1", "--mech", mech, "--seeds", "0..100", "--check-dominance"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn write_auction(dir: &Path, json: &str) -> String {
    let p = dir.join("auction.json");
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn single_bidder_single_price_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_auction(dir.path(), r#"{"H": 1.0, "k": 1, "bids": [0.8]}"#);
    let r = rows(&stdout(&[
        "auction", "--input", &path, "--mech", "exp:lambda=1", "--price-step", "0.5", "--floor", "0.6", "--seeds",
        "0..5",
    ]));
    assert_eq!(r.len(), 5);
    assert!(r.iter().all(|row| row[2] == "0.5" && row[3] == "0.5" && row[5] == "1"));
}

#[test]
fn auction_audit_and_worst_case_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_auction(dir.path(), r#"{"H": 1.0, "k": 2, "bids": [0.9, 0.4, 0.7]}"#);
    let audit = dir.path().join("audit.csv");
    let r = rows(&stdout(&[
        "auction", "--input", &path, "--mech", "plsoftmax:delta=8,exp:lambda=0.1", "--audit", "--worst-case",
        "--points", "51", "--audit-out", audit.to_str().unwrap(),
    ]));
    for row in &r {
        let (eps, gain): (f64, f64) = (row[6].parse().unwrap(), row[7].parse().unwrap());
        assert!(gain <= eps && row[8] == "true");
    }
    assert_eq!(r[0][9], "true");
    assert_eq!(r[1][9], "");
    let table = rows(&std::fs::read_to_string(audit).unwrap());
    assert_eq!(table.len(), 2 * 3 * 51);

    let big = write_auction(dir.path(), r#"{"H": 1.0, "k": 7, "bids": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]}"#);
    let out = run(&["auction", "--input", &big, "--mech", "exp:lambda=1", "--audit"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity"));
}

#[test]
fn lossfn_probes() {
    let r = rows(&stdout(&["lossfn"]));
    assert_eq!(r[0].last().unwrap(), "true");

    let start = Instant::now();
    let a = stdout(&["lossfn", "--d", "2", "--seeds", "4"]);
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert_eq!(a, stdout(&["lossfn", "--d", "2", "--seeds", "4"]));
}

#[test]
fn selftest_passes() {
    let r = rows(&stdout(&["selftest"]));
    assert!(r.len() >= 8);
    assert!(r.iter().all(|row| row[1] == "PASS"), "{r:?}");
}

#[test]
fn json_output_parses() {
    let out = stdout(&["eval", "--mech", "plsoftmax:delta=1", "--x", "0.5,0", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v[0]["probs"], serde_json::json!([0.75, 0.25]));
    let out = stdout(&["lipschitz", "--mech", "sparsemax", "--d", "4", "--trials", "10", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v[0]["bound"], "inf");
}
