//! End-to-end runs of the `rad` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rad")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 output")
}

/// Runs with `--format csv` and returns (summary, header, rows).
struct Csv {
    summary: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn parse(text: &str) -> Self {
        let mut summary = Vec::new();
        let mut body = String::new();
        for line in text.lines() {
            if let Some(kv) = line.strip_prefix("# summary.") {
                let (k, v) = kv.split_once('=').expect("key=value");
                summary.push((k.to_string(), v.to_string()));
            } else if !line.starts_with('#') {
                body.push_str(line);
                body.push('\n');
            }
        }
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        let header = rdr.headers().unwrap().iter().map(String::from).collect();
        let rows = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
        Self { summary, header, rows }
    }

    fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
    }

    fn num(&self, row: usize, name: &str) -> f64 {
        self.rows[row][self.col(name)].parse().unwrap()
    }

    fn summary(&self, key: &str) -> &str {
        &self.summary.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("no summary {key}")).1
    }

    fn summary_num(&self, key: &str) -> f64 {
        self.summary(key).parse().unwrap()
    }
}

fn csv_run(args: &[&str]) -> Csv {
    let mut all = args.to_vec();
    all.extend(["--format", "csv"]);
    let out = rad(&all);
    assert_eq!(code(&out), 0, "{args:?} failed: {}", stderr(&out));
    Csv::parse(&stdout(&out))
}

fn json_run(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = rad(&all);
    assert_eq!(code(&out), 0, "{args:?} failed: {}", stderr(&out));
    serde_json::from_str(&stdout(&out)).unwrap()
}

#[test]
fn calibrates_binary_grr_to_log_one_and_a_half() {
    let c = csv_run(&["calibrate", "--mech", "grr", "--m", "2", "--risk", "0.1"]);
    assert!((c.num(0, "parameter") - 1.5f64.ln()).abs() < 1e-11);
    assert_eq!(c.rows[0][c.col("solve_for")], "epsilon");
}

#[test]
fn calibrates_dp_sgd_noise() {
    let c = csv_run(&["calibrate", "--mech", "gdp-sgd", "--m", "10", "--risk", "0.1", "--steps", "100"]);
    let sigma = c.num(0, "parameter");
    assert!((21.5..=22.5).contains(&sigma), "σ = {sigma}");
    assert_eq!(c.rows[0][c.col("solve_for")], "sigma");
}

#[test]
fn unreachable_risk_exits_two_and_names_the_supremum() {
    let out = rad(&["calibrate", "--mech", "oue", "--m", "10", "--risk", "0.6"]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("unreachable risk level"), "{err}");
    assert!(err.contains("0.45"), "{err}");
}

#[test]
fn grr_bound_with_full_side_information() {
    let c = csv_run(&["bound", "--mech", "grr", "--m", "100", "--eps", "2.503", "--prior", "uniform", "--aux", "full", "--source", "closed-form"]);
    assert!((c.num(0, "value") - 0.1).abs() < 1e-3);
}

#[test]
fn oue_black_box_ordering_over_a_grid() {
    let c = csv_run(&[
        "bound", "--mech", "oue", "--m", "10", "--eps-grid", "0.1:14:0.1", "--source", "optimal,perfect-reco,epsdelta",
        "--delta", "1e-5",
    ]);
    let mut cols: [Vec<f64>; 3] = Default::default();
    for (i, row) in c.rows.iter().enumerate() {
        let k = ["optimal", "perfect-reco", "epsdelta"].iter().position(|s| *s == row[c.col("source")]).unwrap();
        cols[k].push(c.num(i, "value"));
    }
    assert!(cols.iter().all(|v| v.len() == 140));
    for col in &cols {
        assert!(col.windows(2).all(|w| w[1] >= w[0] - 1e-12), "column not monotone");
    }
    for i in 0..140 {
        assert!(cols[0][i] <= cols[1][i] + 1e-9 && cols[1][i] <= cols[2][i] + 1e-9, "ordering broken at row {i}");
    }
}

#[test]
fn zero_budget_bounds_all_vanish() {
    let c = csv_run(&["bound", "--eps", "0", "--m", "5"]);
    assert!(c.rows.len() >= 5);
    for i in 0..c.rows.len() {
        assert_eq!(c.num(i, "value"), 0.0, "{:?}", c.rows[i]);
    }
}

#[test]
fn incompatible_source_names_the_assumption() {
    let out = rad(&["bound", "--mech", "grr", "--m", "5", "--eps", "1", "--aux", "full", "--source", "fdp"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("side information"), "{}", stderr(&out));
}

#[test]
fn attack_matches_the_exact_advantage() {
    let eps = 2f64.ln().to_string();
    let c = csv_run(&["attack", "--mech", "grr", "--m", "3", "--eps", &eps, "--trials", "100000", "--seed", "4"]);
    let (g, se) = (c.summary_num("rad"), c.summary_num("rad_standard_error"));
    assert!((g - 1.0 / 6.0).abs() <= 3.0 * se, "{g} ± {se}");
    assert_eq!(c.rows.len(), 3);
}

#[test]
fn oblivious_attack_has_rero_but_no_advantage() {
    let c = csv_run(&[
        "attack", "--mech", "grr", "--m", "10", "--eps", "1", "--prior", "skewed:0.6", "--attack", "oblivious",
        "--estimand", "rero", "--trials", "20000", "--seed", "8",
    ]);
    let (rad, se) = (c.summary_num("rad"), c.summary_num("rad_standard_error"));
    assert!(rad.abs() <= 3.0 * se, "{rad} ± {se}");
    let (rero, rero_se) = (c.summary_num("rero"), c.summary_num("rero_standard_error"));
    assert!((rero - 0.6).abs() <= 3.0 * rero_se, "ReRo {rero} ± {rero_se}");
    assert_eq!(c.summary("estimand"), "rero");
}

#[test]
fn audit_reports_one_row_per_repetition() {
    let c = csv_run(&["audit", "--mech", "grr", "--eps", "2", "--m", "20", "--repetitions", "4", "--budget", "40000"]);
    assert_eq!(c.rows.len(), 4);
    assert_eq!(c.header, ["repetition", "gamma_hat", "standard_error", "status", "eps_hat"]);
    assert!((c.summary_num("mean_eps_hat") - 2.0).abs() < 0.15);
}

#[test]
fn audit_exit_codes() {
    let base = ["audit", "--mech", "grr", "--m", "10", "--repetitions", "3", "--budget", "20000"];
    let run = |extra: &[&str]| {
        let mut a = base.to_vec();
        a.extend_from_slice(extra);
        rad(&a)
    };
    let zero = run(&["--eps", "0"]);
    assert_eq!(code(&zero), 2);
    let c = Csv::parse(&stdout(&run(&["--eps", "0", "--format", "csv"])));
    assert_eq!(c.rows.len(), 3);
    assert!(c.rows.iter().all(|r| r[c.col("status")] == "undefined"));

    assert_eq!(code(&run(&["--eps", "2", "--claimed-eps", "2"])), 0);
    let fail = run(&["--eps", "2", "--claimed-eps", "1", "--format", "csv"]);
    assert_eq!(code(&fail), 3);
    assert_eq!(Csv::parse(&stdout(&fail)).summary("verdict"), "FAIL");
}

#[test]
fn mc_schema_and_shrinking_intervals() {
    let c = csv_run(&["mc", "--eps", "2", "--prior", "beta:0.1,0.1", "--eta", "0.25", "--n", "100,1000", "--repetitions", "60", "--sampling", "shared-batch"]);
    assert_eq!(&c.header[..6], ["epsilon", "eta", "N", "estimate", "ci_low", "ci_high"]);
    assert_eq!(c.rows.len(), 2);
    assert!(c.num(1, "ci_width") < c.num(0, "ci_width"));
    for i in 0..2 {
        assert!(c.num(i, "ci_low") <= c.num(i, "estimate") && c.num(i, "estimate") <= c.num(i, "ci_high"));
    }
}

#[test]
fn mc_flat_mechanism_is_near_zero() {
    let c = csv_run(&["mc", "--eps", "0.0001", "--n", "100", "--repetitions", "20"]);
    assert!(c.num(0, "estimate").abs() < 1e-4);
}

#[test]
fn mc_rejects_oversized_threshold() {
    let out = rad(&["mc", "--eps", "2", "--eta", "1.5", "--n", "10", "--repetitions", "2"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn compare_prefers_rad_calibration() {
    let c = csv_run(&["compare", "--mech", "laplace", "--m", "10", "--risk", "0.3"]);
    let rad_row = c.rows.iter().position(|r| r[c.col("calibrated_to")] == "rad").unwrap();
    let rero_row = c.rows.iter().position(|r| r[c.col("calibrated_to")] == "rero").unwrap();
    assert!(c.num(rad_row, "epsilon") > c.num(rero_row, "epsilon"));
}

fn numbers(v: &Value, out: &mut Vec<f64>) {
    match v {
        Value::Number(n) => out.push(n.as_f64().unwrap()),
        Value::Array(a) => a.iter().for_each(|x| numbers(x, out)),
        Value::Object(o) => o.values().for_each(|x| numbers(x, out)),
        _ => {}
    }
}

/// Every row's numeric cells in json and csv agree exactly.
fn same_content(args: &[&str]) {
    let c = csv_run(args);
    let j = json_run(args);
    let rows = j["rows"].as_array().unwrap();
    assert_eq!(rows.len(), c.rows.len());
    for (i, row) in rows.iter().enumerate() {
        for (k, name) in c.header.iter().enumerate() {
            let text = &c.rows[i][k];
            match &row[name] {
                Value::Number(n) => assert_eq!(n.as_f64().unwrap(), text.parse::<f64>().unwrap(), "{name}"),
                Value::String(s) => assert_eq!(s, text),
                Value::Null => assert!(text.is_empty()),
                other => panic!("unexpected {other}"),
            }
        }
    }
    for (k, v) in &c.summary {
        match &j["summary"][k] {
            Value::Number(n) => assert_eq!(n.as_f64().unwrap(), v.parse::<f64>().unwrap(), "{k}"),
            Value::String(s) => assert_eq!(s, v),
            Value::Bool(b) => assert_eq!(b.to_string(), *v),
            Value::Null => assert!(v.is_empty()),
            other => panic!("unexpected summary {k}: {other}"),
        }
    }
    let mut all = Vec::new();
    numbers(&j["rows"], &mut all);
    assert!(all.iter().all(|x| x.is_finite()));
}

#[test]
fn json_and_csv_carry_the_same_numbers() {
    same_content(&["calibrate", "--mech", "oue", "--m", "10", "--risk", "0.2"]);
    same_content(&["bound", "--mech", "ss", "--m", "8", "--eps-grid", "0.5:3:0.5"]);
    same_content(&["attack", "--mech", "oue", "--m", "6", "--eps", "1.5", "--trials", "3000", "--seed", "2"]);
    same_content(&["audit", "--mech", "ss", "--m", "10", "--eps", "3", "--repetitions", "2", "--budget", "10000"]);
    same_content(&["mc", "--eps", "3", "--n", "50", "--repetitions", "10"]);
}

#[test]
fn reruns_are_byte_identical() {
    let runs: [&[&str]; 4] = [
        &["attack", "--mech", "ss", "--m", "7", "--eps", "2", "--trials", "4000", "--seed", "11"],
        &["audit", "--mech", "oue", "--m", "12", "--eps", "2", "--repetitions", "2", "--budget", "20000", "--seed", "5"],
        &["mc", "--eps", "2,4", "--eta", "0.1,0.5", "--n", "40", "--repetitions", "6", "--seed", "9"],
        &["bound", "--mech", "grr", "--m", "6", "--eps-grid", "0:4:0.25", "--all-applicable"],
    ];
    for args in runs {
        for fmt in ["csv", "json"] {
            let mut a = args.to_vec();
            a.extend(["--format", fmt]);
            let (x, y) = (rad(&a), rad(&a));
            assert_eq!(code(&x), 0, "{}", stderr(&x));
            assert_eq!(x.stdout, y.stdout, "{args:?} {fmt}");
        }
    }
    let a = rad(&["attack", "--mech", "grr", "--m", "5", "--eps", "1", "--trials", "2000", "--seed", "1"]);
    let b = rad(&["attack", "--mech", "grr", "--m", "5", "--eps", "1", "--trials", "2000", "--seed", "2"]);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn reports_carry_provenance_and_twelve_digits() {
    let out = stdout(&rad(&["calibrate", "--mech", "grr", "--m", "2", "--risk", "0.1", "--format", "csv"]));
    assert!(out.starts_with("# tool=rad\n# version="));
    assert!(out.contains("# command=calibrate"));
    assert!(out.contains(",0.405465108108,"), "{out}");
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn csv_priors_drive_fits_and_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "ages.csv", "id,age\n1,30\n2,40\n3,40\n4,50\n5,40\n");
    let fit = csv_run(&["prior-fit", "--csv", &path, "--column", "age"]);
    assert_eq!(fit.rows.len(), 3);
    assert!((fit.summary_num("kappa_pi") - 0.44).abs() < 1e-12);
    assert_eq!(fit.num(1, "weight"), 0.6);

    let spec = format!("csv:{path}");
    let b = csv_run(&["bound", "--mech", "grr", "--eps", "1", "--prior", &spec, "--column", "age", "--source", "worst-case"]);
    let tv = (1f64.exp() - 1.0) / (1f64.exp() + 2.0);
    assert!((b.num(0, "value") - tv * (1.0 - 0.44)).abs() < 1e-11);

    let by_index = csv_run(&["bound", "--mech", "grr", "--eps", "1", "--prior", &spec, "--column", "1", "--source", "worst-case"]);
    assert_eq!(by_index.rows, b.rows);

    let raw = write(dir.path(), "raw.csv", "a\nb\nb\n");
    let fit = csv_run(&["prior-fit", "--csv", &raw, "--no-header"]);
    assert_eq!(fit.rows.len(), 2);
}

#[test]
fn attribute_side_information_from_records() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "people.csv", "zip,disease\n1,flu\n1,cold\n2,flu\n2,flu\n");
    let spec = format!("csv:{path}");
    let c = csv_run(&["bound", "--mech", "grr", "--eps", "1", "--prior", &spec, "--aux", "attr:zip", "--source", "optimal"]);
    assert!(c.num(0, "value") > 0.0);
}

#[test]
fn configuration_errors_exit_one() {
    let missing = rad(&["bound", "--mech", "grr", "--eps", "1", "--prior", "csv:/no/such/file.csv"]);
    assert_eq!(code(&missing), 1);
    assert!(stderr(&missing).contains("does not exist"));
    assert_eq!(code(&rad(&["bound", "--mech", "grr", "--eps", "1"])), 1);
    assert_eq!(code(&rad(&["bound", "--mech", "nope", "--eps", "1", "--m", "3"])), 1);
    assert_eq!(code(&rad(&["calibrate", "--mech", "grr", "--m", "2", "--risk", "-1"])), 1);
    assert_eq!(code(&rad(&["bound", "--mech", "grr", "--m", "3", "--eps-grid", "1:0:1"])), 1);
    assert_eq!(code(&rad(&["--help"])), 0);
    assert_eq!(code(&rad(&["--version"])), 0);
}

#[test]
fn output_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cal.json");
    let out = rad(&["calibrate", "--mech", "grr", "--m", "2", "--risk", "0.1", "--output", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((v["rows"][0]["parameter"].as_f64().unwrap() - 1.5f64.ln()).abs() < 1e-11);
}
