use std::fs;
use std::process::{Command, Output};

use bispec::montecarlo::{CltReport, MomentReport, RateSweep};
use bispec::wigner::SignedSqrtRational;
use bispec_cli::{sha256_hex, MomentsReport, OracleReport, RunManifest};

fn bispec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bispec")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn manifest_from_stderr(o: &Output) -> RunManifest {
    serde_json::from_str(stderr(o).lines().last().unwrap()).unwrap()
}

#[test]
fn wigner3j_exact_and_decimal() {
    let o = bispec(&["wigner3j", "--l", "1", "1", "2", "--m", "0", "0", "0", "--format", "exact"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "+sqrt(2/15)\n");
    let parsed: SignedSqrtRational = stdout(&o).trim().parse().unwrap();
    assert_eq!(parsed, SignedSqrtRational::new(1, 2u32.into(), 15u32.into()));

    let o = bispec(&["wigner3j", "--l", "1", "1", "3", "--m", "0", "0", "0"]);
    assert_eq!(stdout(&o), "0\n");

    let o = bispec(&["wigner3j", "--l", "1", "1", "2", "--m", "1", "-1", "0", "--format", "decimal", "--digits", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - (1.0f64 / 30.0).sqrt()).abs() < 1e-4);
}

#[test]
fn other_symbols() {
    let o = bispec(&["wigner6j", "--j", "1", "1", "1", "1", "1", "1"]);
    assert_eq!(stdout(&o), "+sqrt(1/36)\n");
    let o = bispec(&["clebsch", "--l", "1", "1", "0", "--m", "0", "0", "0"]);
    assert_eq!(stdout(&o), "-sqrt(1/3)\n");
    let o = bispec(&["gaunt", "--l", "1", "1", "2", "--m", "0", "0", "0"]);
    assert_eq!(stdout(&o), "+sqrt(4/5)/sqrt(4*pi)\n");
}

#[test]
fn manifest_digest_matches_output() {
    let o = bispec(&["wigner3j", "--l", "2", "2", "2", "--m", "0", "0", "0"]);
    let m = manifest_from_stderr(&o);
    assert_eq!(m.subcommand, "wigner3j");
    assert_eq!(m.output_sha256, sha256_hex(&o.stdout));
    assert_eq!(m.seed, None);
    assert!(m.started <= m.finished);
    let back: RunManifest = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
    assert_eq!(back, m);
}

#[test]
fn moments_report() {
    let o = bispec(&["moments", "--triple", "4", "4", "4", "--power", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let r: MomentsReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.leading, "108");
    assert_eq!(r.exact.as_deref(), Some(r.prediction.as_str()));
    let back: MomentsReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);

    let o = bispec(&["moments", "--triple", "1", "2", "3", "--power", "2", "--oracle", "--digits", "12"]);
    let r: MomentsReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.oracle.as_deref(), Some("7.11428571429e0"));
}

#[test]
fn oracle_moment_report() {
    let o = bispec(&["oracle-moment", "--triple", "1", "2", "3", "--power", "2", "--workers", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let r: OracleReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(r.total.starts_with("7.114285714285714285714285714285714285"));
    assert_eq!(r.diagrams, 27);
    let back: OracleReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn mc_writes_report_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let triples = dir.path().join("triples.json");
    fs::write(&triples, "[[1,2,3],[2,3,5]]").unwrap();
    let out = dir.path().join("report.json");
    let csv = dir.path().join("values.csv");
    let args = [
        "mc",
        "--triples",
        triples.to_str().unwrap(),
        "--n",
        "200",
        "--seed",
        "42",
        "--mode",
        "estimated-cl",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ];
    let o = bispec(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let bytes = fs::read(&out).unwrap();
    let report: MomentReport = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(report.moments.len(), 4);
    let back: MomentReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(back, report);
    let manifest: RunManifest =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.seed, Some(42));
    assert_eq!(manifest.output_sha256, sha256_hex(&bytes));
    let rows = fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 201);
    assert!(rows.starts_with("replication,I_1_2_3,I_2_3_5\n"));

    // Same seed, different worker count: identical bytes.
    let out2 = dir.path().join("report2.json");
    let mut args2 = args.to_vec();
    args2[10] = out2.to_str().unwrap();
    args2.extend(["--workers", "1"]);
    assert_eq!(bispec(&args2).status.code(), Some(0));
    assert_eq!(fs::read(&out2).unwrap(), bytes);
}

#[test]
fn rate_sweep_and_clt_outputs_round_trip() {
    let o = bispec(&["rate-sweep", "--lmin", "2", "--lmax", "10"]);
    let s: RateSweep = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(s.rows.len(), 9);
    assert_eq!(serde_json::from_str::<RateSweep>(&serde_json::to_string(&s).unwrap()).unwrap(), s);

    let o = bispec(&["clt", "--triple", "10", "11", "13", "--triple", "12", "13", "15", "--n", "1000", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let c: CltReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(c.triples.len(), 2);
    assert_eq!(c.correlations.len(), 1);
    assert_eq!(serde_json::from_str::<CltReport>(&serde_json::to_string(&c).unwrap()).unwrap(), c);
}

#[test]
fn simulate_emits_coefficients() {
    let o = bispec(&["simulate", "--lmax", "3", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["lmax"], 3);
    assert_eq!(manifest_from_stderr(&o).seed, Some(5));
}

#[test]
fn exit_codes() {
    let o = bispec(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(64));

    let o = bispec(&["wigner3j", "--l", "1", "x", "2", "--m", "0", "0", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).lines().count(), 1);

    let o = bispec(&["wigner3j", "--l", "1", "1", "2", "--m", "3", "0", "-3"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).lines().count(), 1);

    let o = bispec(&["moments", "--triple", "0", "1", "1"]);
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let triples = dir.path().join("t.json");
    fs::write(&triples, "[[2,3,5]]").unwrap();
    let o = bispec(&["mc", "--triples", triples.to_str().unwrap(), "--n", "10"]);
    assert_eq!(o.status.code(), Some(64), "missing --seed must not run");

    let o = bispec(&["mc", "--triples", triples.to_str().unwrap(), "--n", "1", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).lines().count(), 1);
}
