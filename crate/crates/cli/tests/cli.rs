use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chansim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let o = run(&full);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

const QUICK: [&str; 2] = ["--restarts", "1"];

#[test]
fn bounds_on_constant_channel() {
    let o = run(&["bounds", "--builtin", "constant", "--eps", "0.2", "--delta", "0.1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("sup (best found)"));
    let row = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(fields[3], "0.000000");
    assert_eq!(fields[4], "6.643856");
}

#[test]
fn bounds_ordering_on_depolarizing() {
    let mut args = vec!["bounds", "--builtin", "depolarizing", "--p", "0.3", "--eps", "0.2", "--delta", "0.1"];
    args.extend(QUICK);
    let v = json(&args);
    let r = &v["results"][0];
    let c = r["converse_bits"].as_f64().unwrap();
    let a = r["achievability_bits"].as_f64().unwrap();
    assert!(c <= a, "{c} vs {a}");
    assert!(c > 0.0);
}

#[test]
fn malformed_channel_file_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"d_in": 2, "d_out": 2}"#).unwrap();
    let o = run(&["bounds", "--channel", path.to_str().unwrap(), "--eps", "0.2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kraus"));

    std::fs::write(&path, r#"{"d_in": 2, "d_out": 2, "kraus": [[[[1,0],[0,0]],[[0,0],[2,0]]]]}"#).unwrap();
    let o = run(&["capacity", "--channel", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kraus"));
}

#[test]
fn channel_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("id.json");
    std::fs::write(&path, r#"{"d_in": 2, "d_out": 2, "kraus": [[[[1,0],[0,0]],[[0,0],[1,0]]]]}"#).unwrap();
    let v = json(&["capacity", "--channel", path.to_str().unwrap()]);
    assert!((v["results"][0]["value_bits"].as_f64().unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn exit_codes() {
    // δ ≥ ε everywhere
    let o = run(&["bounds", "--builtin", "identity", "--eps", "0.2", "--delta", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["bounds", "--builtin", "identity", "--eps", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["bounds", "--builtin", "identity", "--d", "3", "--eps", "0.2", "--n", "2"]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(&["capacity", "--builtin", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["capacity"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["verify", "--trials", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn capacity_values() {
    let v = json(&["capacity", "--builtin", "identity"]);
    assert!((v["results"][0]["value_bits"].as_f64().unwrap() - 2.0).abs() < 1e-3);
    let o = run(&["capacity", "--builtin", "depolarizing", "--p", "1"]);
    assert!(stdout(&o).lines().nth(1).unwrap().contains("0.000000"));
    let v = json(&["capacity", "--builtin", "depolarizing", "--p", "0.3", "--alpha", "1.5", "2", "--restarts", "2"]);
    let vals: Vec<f64> = v["results"].as_array().unwrap().iter().map(|r| r["value_bits"].as_f64().unwrap()).collect();
    assert_eq!(vals.len(), 3);
    assert!(vals[2] >= vals[1] - 1e-4 && vals[1] >= vals[0] - 1e-4, "{vals:?}");
}

#[test]
fn csv_round_trips_printed_values() {
    let base = ["sweep", "--builtin", "identity", "--eps", "0.2", "--delta", "0.1", "--alpha", "2", "--restarts", "1"];
    let mut csv_args = base.to_vec();
    csv_args.extend(["--format", "csv"]);
    let o = run(&csv_args);
    assert!(o.status.success());
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["kind", "epsilon", "delta", "n", "alpha", "value_bits", "converged", "wall_ms"]);
    let v = json(&base);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let results = v["results"].as_array().unwrap();
    assert_eq!(rows.len(), results.len());
    for (row, res) in rows.iter().zip(results) {
        assert_eq!(&row[0], res["kind"].as_str().unwrap());
        let printed: f64 = row[5].parse().unwrap();
        let full = res["value_bits"].as_f64().unwrap();
        assert_eq!(format!("{printed:.6}"), &row[5]);
        assert_eq!(format!("{full:.6}"), &row[5]);
        if let Some(e) = res["epsilon"].as_f64() {
            assert_eq!(row[1].parse::<f64>().unwrap(), e);
        }
    }
}

#[test]
fn sweep_on_constant_channel() {
    let v = json(&["sweep", "--builtin", "constant", "--eps", "0.2", "0.4", "--delta", "0.1", "--restarts", "1"]);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results[0]["kind"], "capacity");
    for r in results.iter().filter(|r| r["kind"] == "converse") {
        assert!(r["value_bits"].as_f64().unwrap().abs() < 1e-6);
    }
    for r in results.iter().filter(|r| r["kind"] == "renyi_upper") {
        assert_eq!(r["check"], true);
    }
}

#[test]
fn verify_smoke_run() {
    let t = Instant::now();
    let o = run(&["verify", "--trials", "10"]);
    assert!(t.elapsed().as_secs() < 10);
    assert!(o.status.success());
    let v = json(&["verify", "--trials", "10"]);
    let names: Vec<&str> = v["results"].as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["input_convexity", "channel_concavity", "restricted_minimax", "aep_trend"]);
    assert!(v["results"].as_array().unwrap().iter().all(|r| r["pass"] == true));
}

#[test]
fn json_is_byte_identical_across_runs() {
    let cases: [&[&str]; 4] = [
        &["bounds", "--builtin", "random", "--channel-seed", "3", "--eps", "0.3", "--delta", "0.1", "--restarts", "2", "--seed", "5"],
        &["capacity", "--builtin", "random", "--channel-seed", "4", "--alpha", "2", "--restarts", "2", "--seed", "5"],
        &["verify", "--trials", "20", "--seed", "9"],
        &["sweep", "--builtin", "dephasing", "--p", "0.5", "--eps", "0.3", "--delta", "0.1", "--restarts", "1", "--seed", "2"],
    ];
    for args in cases {
        let mut full = args.to_vec();
        full.extend(["--format", "json"]);
        let a = run(&full);
        let b = run(&full);
        assert!(a.status.success(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let o = run(&["capacity", "--builtin", "identity", "--format", "csv", "--output", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("quantity,alpha,value_bits"));
}
