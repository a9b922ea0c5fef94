use std::process::{Command, Output};

fn brjuno(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brjuno"))
        .args(args)
        .env_remove("BRJUNO_PRECISION_BITS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_lines(o: &Output) -> Vec<serde_json::Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn num(v: &serde_json::Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} missing in {v}"))
}

#[test]
fn eval_golden_section() {
    let o = brjuno(&["eval", "[0;(1)]", "--u", "log"]);
    assert_eq!(o.status.code(), Some(0));
    let rec = &json_lines(&o)[0];
    assert_eq!(rec["record"], "exact");
    assert_eq!(rec["period_len"], 1);
    assert!((num(rec, "value") - 1.259_828_913_794_410_3).abs() < 1e-15);
}

#[test]
fn eval_theta_prime() {
    let o = brjuno(&["eval", "[0;2,(1)]", "--u", "log"]);
    let rec = &json_lines(&o)[0];
    assert!((num(rec, "value") - 1.443_635_475_178_810_3).abs() < 1e-15);
}

#[test]
fn eval_surd_text_and_enclosure_only() {
    let o = brjuno(&["eval", "(-1+sqrt(2))/1"]);
    assert!((num(&json_lines(&o)[0], "value") - 1.504_598_827_159_773_4).abs() < 1e-15);
    let o = brjuno(&["eval", "(-1+sqrt(2))/1", "--enclosure-only", "--depth", "20"]);
    let rec = &json_lines(&o)[0];
    assert_eq!(rec["record"], "enclosure");
    assert!(num(rec, "lo") <= 1.504_598_827_159_773_4 && 1.504_598_827_159_773_4 <= num(rec, "hi"));
}

#[test]
fn eval_rational_is_rejected() {
    let o = brjuno(&["eval", "[0;1,2]"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rational input is not a Brjuno number"));
}

#[test]
fn parse_errors_exit_2() {
    assert_eq!(brjuno(&["eval", "[0;1,x]"]).status.code(), Some(2));
    assert_eq!(brjuno(&["eval", "(1+sqrt(4))/3"]).status.code(), Some(2));
    assert_eq!(brjuno(&["eval", "[0;(1)]", "--u", "cosh"]).status.code(), Some(2));
    assert_eq!(brjuno(&["eval", "[0;(1)]", "--precision-bits", "8"]).status.code(), Some(2));
    assert_eq!(brjuno(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn insufficient_depth_exits_3() {
    let o = brjuno(&["eval", "[0;1,2,3,...]", "--depth", "5"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn unbounded_stream_has_infinite_upper_end() {
    let o = brjuno(&["eval", "[0;1,2,3,...]", "--depth", "1"]);
    let rec = &json_lines(&o)[0];
    assert_eq!(rec["hi"], "inf");
    let o = brjuno(&["eval", "[0;1,2,3,...]", "--depth", "1", "--digit-bound", "3"]);
    assert!(json_lines(&o)[0]["hi"].is_number());
}

#[test]
fn precision_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_brjuno"))
        .args(["eval", "[0;(1)]"])
        .env("BRJUNO_PRECISION_BITS", "200")
        .output()
        .unwrap();
    let rec = &json_lines(&o)[0];
    assert_eq!(rec["precision_bits"], 200);
    assert!(num(rec, "error") < 1e-60);
}

#[test]
fn counterexample_gap() {
    let o = brjuno(&["counterexample", "--a", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let rec = &json_lines(&o)[0];
    assert!((num(rec, "gap") - 0.4401).abs() < 1e-3);
    assert_eq!(rec["gap_certified"], true);
}

#[test]
fn check_square_root_fails() {
    let o = brjuno(&["check", "--u", "pow:0.5"]);
    assert_eq!(o.status.code(), Some(1));
    let recs = json_lines(&o);
    let c = recs.iter().find(|r| r["condition"] == "ratio_decreasing").unwrap();
    assert_eq!(c["verdict"], "fails_with_witness");
    assert_eq!(c["witness_points"].as_array().unwrap().len(), 2);
    assert_eq!(brjuno(&["check", "--u", "log"]).status.code(), Some(0));
}

#[test]
fn verify_passes() {
    let o = brjuno(&["verify"]);
    assert_eq!(o.status.code(), Some(0));
    let recs = json_lines(&o);
    assert!(recs.iter().all(|r| r["verdict"] == "passes_on_grid"));
    let g = recs.iter().find(|r| r["condition"] == "g_positive_at_0.61").unwrap();
    assert!((num(g, "value") - 0.0272).abs() < 1e-4);
}

#[test]
fn scan_is_deterministic_across_threads() {
    let args = ["scan", "--samples", "300", "--depth", "25", "--seed", "11"];
    let one = Command::new(env!("CARGO_BIN_EXE_brjuno"))
        .args(args)
        .env("RAYON_NUM_THREADS", "1")
        .output()
        .unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_brjuno"))
        .args(args)
        .env("RAYON_NUM_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
    assert_eq!(json_lines(&one).len(), 300 + 9);
    let other = brjuno(&["scan", "--samples", "300", "--depth", "25", "--seed", "12"]);
    assert_ne!(one.stdout, other.stdout);
}

#[test]
fn scan_flags_violations_for_square_root_cost() {
    let o = brjuno(&["scan", "--samples", "0", "--depth", "30", "--u", "pow:0.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn scan_csv_quotes_digit_lists() {
    let o = brjuno(&["scan", "--samples", "5", "--depth", "4", "--format", "csv"]);
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[1], "x");
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5 + 9);
    assert!(rows.iter().all(|r| r.len() == headers.len()));
    assert!(rows.iter().any(|r| r[1].starts_with("[0;") && r[1].ends_with("...]")));
}

#[test]
fn divergence_near_zero_grows() {
    let o = brjuno(&["divergence", "--r", "0", "--depth", "10", "--threshold", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let lbs: Vec<f64> = json_lines(&o).iter().map(|r| num(r, "lower_bound")).collect();
    assert_eq!(lbs.len(), 7);
    assert!(lbs.windows(2).all(|w| w[1] > w[0]));
    assert!(brjuno(&["divergence", "--r", "3/2"]).status.code() == Some(2));
}
