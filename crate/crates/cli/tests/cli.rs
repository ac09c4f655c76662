use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn scs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scs")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_table1_matches_exactly() {
    let out = scs(&["verify-table1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 11);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")), "{text}");
    assert!(text.contains("010,1/5,1/5,true"));
    assert!(text.contains("f(1),1/2,1/2,true"));
}

#[test]
fn capacity_of_redundant_caps_is_one() {
    let out = scs(&["capacity", "--k", "1", "--p", "1/4"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["capacity"].as_f64(), Some(1.0));
    assert_eq!(json["redundant"].as_bool(), Some(true));
}

#[test]
fn capacity_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"alphabet_size": 2, "forbidden": [{"word": "11", "cap": "0"}]}"#).unwrap();
    let out = scs(&["capacity", "--spec", path(&spec)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let c = json["capacity"].as_f64().unwrap();
    assert!((c - 0.6942419136306174).abs() < 1e-9);
}

#[test]
fn bounds_row_is_sandwiched() {
    let out = scs(&["bounds", "--k", "2", "--p", "0.05"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,p,lower,solved,upper,refined_upper_gap"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[..2], ["2", "1/20"]);
    let v: Vec<f64> = row[2..].iter().map(|x| x.parse().unwrap()).collect();
    assert!(v[0] <= v[1] && v[1] <= v[2], "{v:?}");
}

#[test]
fn bounds_grid_includes_endpoints() {
    let out = scs(&["bounds", "--k", "1", "--p-grid", "1/100:1/20:1/100"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 6);
    let bad = scs(&["bounds", "--k", "1", "--p-grid", "1/100:1/20"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn enumerate_counts_fibonacci() {
    let out = scs(&["enumerate", "--k", "1", "--p", "0", "--n", "6"]);
    assert!(out.status.success());
    let counts: Vec<String> = stdout(&out).lines().skip(1).map(|l| l.split(',').nth(1).unwrap().to_string()).collect();
    assert_eq!(counts, ["2", "3", "5", "8", "13", "21"]);
}

#[test]
fn synth_chain_csv() {
    let out = scs(&["synth-chain", "--k", "1", "--p", "1/10"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("edge,from,to,symbol,probability,edge_measure\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn encode_decode_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.bin");
    let encoded = dir.path().join("enc.scs");
    let decoded = dir.path().join("out.bin");
    let data: Vec<u8> = (0..2000u32).map(|i| (i.wrapping_mul(2654435761) >> 13) as u8).collect();
    fs::write(&input, &data).unwrap();
    let rll = ["--k", "1", "--p", "1/5"];
    let enc = scs(&[&["encode", path(&input)], &rll[..], &["--epsilon", "6/25", "--seed", "9", "--out", path(&encoded)]].concat());
    assert!(enc.status.success(), "{}", stderr(&enc));
    let bytes = fs::read(&encoded).unwrap();
    assert_eq!(&bytes[..4], b"SCSC");
    let dec = scs(&[&["decode", path(&encoded)], &rll[..], &["--out", path(&decoded)]].concat());
    assert!(dec.status.success(), "{}", stderr(&dec));
    assert_eq!(fs::read(&decoded).unwrap(), data);

    // same arguments, same bytes
    let again = dir.path().join("enc2.scs");
    scs(&[&["encode", path(&input)], &rll[..], &["--epsilon", "6/25", "--seed", "9", "--out", path(&again)]].concat());
    assert_eq!(fs::read(&again).unwrap(), bytes);

    // the decoder refuses a different spec
    let wrong = scs(&["decode", path(&encoded), "--k", "1", "--p", "1/6", "--out", path(&decoded)]);
    assert_eq!(wrong.status.code(), Some(6));
    assert_eq!(stderr(&wrong).lines().count(), 1);
}

#[test]
fn simulate_is_independent_of_jobs() {
    let args = ["simulate", "--k", "1", "--p", "1/5", "--n", "2048", "--epsilon", "6/25", "--trials", "12", "--seed", "4"];
    let one = scs(&[&args[..], &["--jobs", "1"]].concat());
    let four = scs(&[&args[..], &["--jobs", "4"]].concat());
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stderr, four.stderr);
    let text = stdout(&one);
    assert!(text.starts_with("trial,success,e1,e2,e3,max_violation\n"));
    assert_eq!(text.lines().count(), 13);
    let summary: serde_json::Value = serde_json::from_str(stderr(&one).trim()).unwrap();
    assert_eq!(summary["trials"], 12);
}

#[test]
fn failure_classes_have_distinct_exit_codes() {
    let parse = scs(&["capacity", "--k", "1", "--p", "one half"]);
    assert_eq!(parse.status.code(), Some(3));
    assert!(stderr(&parse).starts_with("scs: parse:"));
    assert_eq!(stderr(&parse).lines().count(), 1);

    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("infeasible.json");
    fs::write(
        &spec,
        r#"{"alphabet_size": 2, "forbidden": [{"word": "0", "cap": "3/10"}, {"word": "1", "cap": "3/10"}]}"#,
    )
    .unwrap();
    let infeasible = scs(&["capacity", "--spec", path(&spec)]);
    assert_eq!(infeasible.status.code(), Some(4));
    assert!(stderr(&infeasible).starts_with("scs: infeasible:"));

    let budget = scs(&["enumerate", "--k", "1", "--p", "1/10", "--n", "40"]);
    assert_eq!(budget.status.code(), Some(5));

    let dir_path = dir.path().join("in.bin");
    fs::write(&dir_path, vec![0xA5u8; 256]).unwrap();
    let codec = scs(&["encode", path(&dir_path), "--k", "2", "--p", "1/20", "--out", path(&dir.path().join("x"))]);
    assert_eq!(codec.status.code(), Some(6));
    assert!(stderr(&codec).starts_with("scs: codec:"));
}
