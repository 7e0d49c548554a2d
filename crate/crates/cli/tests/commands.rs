use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pplasso::simulation::{read_report_csv, Method, Scenario, Simulator};
use pplasso_cli::config::ConfigFile;
use pplasso_cli::output::{read_fit_document, read_risk_table};
use proptest::prelude::*;

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn pplasso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pplasso")).args(args).output().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Default simulated trial written as `y,treatment,b1..bp`.
fn trial_csv(name: &str, p: usize, seed: u64) -> PathBuf {
    let sim = Simulator::new(Scenario { p, replications: 1, seed, ..Scenario::default() }).unwrap();
    let data = sim.gen_data(0);
    let mut text = String::from("y,treatment");
    for j in 1..=p {
        write!(text, ",b{j}").unwrap();
    }
    text.push('\n');
    for i in 0..data.n() {
        let arm = if i < data.n1() { 1 } else { 2 };
        write!(text, "{},{arm}", data.response()[i]).unwrap();
        for j in 0..p {
            write!(text, ",{}", data.biomarkers()[(i, j)]).unwrap();
        }
        text.push('\n');
    }
    let path = scratch(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn fit(input: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["fit", input.to_str().unwrap(), "--response", "y", "--treatment", "treatment"];
    args.extend_from_slice(extra);
    pplasso(&args)
}

#[test]
fn fit_is_byte_identical_across_runs() {
    let input = trial_csv("det.csv", 20, 1);
    let a = fit(&input, &["--seed", "3"]);
    let b = fit(&input, &["--seed", "3"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let doc = read_fit_document(a.stdout.as_slice()).unwrap();
    assert_eq!(doc.data.biomarkers_used, 20);
    let pp = doc.pplasso.unwrap();
    assert!(!pp.bic_table.is_empty());
    assert!(!pp.covariance_risk.is_empty());
}

#[test]
fn fit_recovers_most_prognostic_actives() {
    let truth: Vec<String> = (1..=10).map(|j| format!("b{j}")).collect();
    let mut hits = Vec::new();
    for seed in 0..5 {
        let input = trial_csv(&format!("e2e-{seed}.csv"), 20, 100 + seed);
        let out = fit(&input, &["--seed", "1"]);
        assert!(out.status.success(), "{}", stderr(&out));
        let doc = read_fit_document(out.stdout.as_slice()).unwrap();
        hits.push(doc.pplasso.unwrap().prognostic.iter().filter(|b| truth.contains(b)).count());
    }
    assert!(hits.iter().filter(|&&h| h >= 8).count() >= 3, "true actives found per seed: {hits:?}");
}

#[test]
fn bad_treatment_value_names_the_row() {
    let path = scratch("bad-treatment.csv");
    std::fs::write(&path, "y,treatment,g1\n1.0,1,0.2\n2.0,1,0.1\n0.5,3,0.3\n1.5,2,0.4\n1.1,2,0.2\n").unwrap();
    let out = fit(&path, &[]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("line 4") && msg.contains("'3'"), "{msg}");
}

#[test]
fn malformed_rows_are_line_numbered() {
    let path = scratch("ragged.csv");
    std::fs::write(&path, "y,treatment,g1\n1.0,1,0.2\n2.0,1\n").unwrap();
    let out = fit(&path, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    std::fs::write(&path, "y,treatment,g1\n1.0,1,0.2\n2.0,1,abc\n0.1,2,0.3\n0.4,2,0.5\n").unwrap();
    let out = fit(&path, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn single_patient_arm_is_rejected() {
    let path = scratch("one-arm.csv");
    std::fs::write(&path, "y,treatment,g1\n1.0,1,0.2\n2.0,1,0.1\n0.5,2,0.3\n").unwrap();
    let out = fit(&path, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("arm 2"), "{}", stderr(&out));
}

#[test]
fn unknown_config_key_is_rejected() {
    let input = trial_csv("cfg.csv", 12, 2);
    let cfg = scratch("run.cfg");
    std::fs::write(&cfg, "response = y\ntreatment = treatment\nlamda_grid = 10\n").unwrap();
    let out = pplasso(&["fit", input.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("lamda_grid"), "{}", stderr(&out));
}

#[test]
fn cov_select_tables() {
    let input = trial_csv("cov.csv", 15, 4);
    let path = input.to_str().unwrap();
    let out = pplasso(&["cov-select", path, "--response", "y", "--treatment", "treatment"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_risk_table(out.stdout.as_slice()).unwrap();
    assert!(rows.len() > 1);
    assert!(rows.windows(2).all(|w| w[0].risk <= w[1].risk));

    let out = pplasso(&["cov-select", path, "--response", "y", "--treatment", "treatment", "--candidates", "lw"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_risk_table(out.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 1);
}

#[test]
fn simulate_writes_one_row_per_method_and_tuning() {
    let raw = scratch("raw.csv");
    let out = pplasso(&["simulate", "--p", "200", "--replications", "5", "--raw-out", raw.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_report_csv(out.stdout.as_slice()).unwrap();
    // PPLasso rows come in BIC and optimal flavours; baselines are optimal only.
    let pplasso_methods = Method::ALL.iter().filter(|m| m.name().starts_with("pplasso")).count();
    assert_eq!(rows.len(), Method::ALL.len() + pplasso_methods);
    assert!(rows.iter().all(|r| r.replications == 5));
    let raw_lines = std::fs::read_to_string(&raw).unwrap().lines().count();
    assert_eq!(raw_lines, 1 + 5 * rows.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_files_round_trip(
        entries in prop::collection::btree_map("[a-z][a-z_]{0,8}", "[A-Za-z0-9.,:;_ -]{0,12}", 0..8),
        quote in any::<bool>(),
    ) {
        let mut text = String::from("# generated\n");
        for (k, v) in &entries {
            if quote {
                writeln!(text, "{k} = \"{v}\"").unwrap();
            } else {
                writeln!(text, "{k}={v}").unwrap();
            }
        }
        let mut parsed = ConfigFile::parse(&text).unwrap();
        for (k, v) in &entries {
            let expected = if quote { v.clone() } else { v.trim().to_string() };
            prop_assert_eq!(parsed.take::<String>(k).unwrap(), Some(expected));
        }
        prop_assert!(parsed.finish().is_ok());
    }
}
