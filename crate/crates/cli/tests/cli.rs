use std::path::Path;
use std::process::{Command, Output};

use genrank::linalg::{to_text, Matrix};
use genrank::network::{forward, standard_normal_matrix};
use genrank::seed::derive_seed;
use genrank::{Activation, NetworkParams};
use serde_json::Value;

fn genrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genrank")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", stdout(o)))
}

/// Data rows of a rank-grid CSV, split into fields.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# genrank rank-grid csv v1"));
    assert!(lines.next().unwrap().starts_with("law,m,n,d,k,coeffs,predicted"));
    lines
        .map(|l| {
            // coeffs is the only field that may be quoted
            let mut fields = Vec::new();
            let mut cur = String::new();
            let mut quoted = false;
            for ch in l.chars() {
                match ch {
                    '"' => quoted = !quoted,
                    ',' if !quoted => fields.push(std::mem::take(&mut cur)),
                    c => cur.push(c),
                }
            }
            fields.push(cur);
            fields
        })
        .collect()
}

#[test]
fn capacity_examples() {
    let o = genrank(&["capacity-check", "--m", "6", "--n", "10", "--d", "4", "--act", "tanh"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["verdict"]["surjective_predicted"], true);

    let o = genrank(&["capacity-check", "--m", "2", "--n", "9", "--d", "2"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["verdict"]["surjective_predicted"], false);
    assert_eq!(v["verdict"]["reason"], "sard_param_count");

    let o = genrank(&["capacity-check", "--m", "1000", "--n", "100000", "--d", "100", "--act", "cubic"]);
    let v = json(&o);
    assert_eq!(v["verdict"]["degree_condition_holds"], true);
    assert_eq!(v["verdict"]["bound_values"]["poly_support_count"], 171700);

    let o = genrank(&["capacity-check", "--m", "2", "--n", "9", "--d", "2", "--strict"]);
    assert_eq!(code(&o), 3);
    assert_eq!(code(&genrank(&["capacity-check", "--m", "2"])), 2);
}

#[test]
fn interpolate_random_desk_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("params.json");
    let trace = dir.path().join("trace.jsonl");
    let o = genrank(&[
        "interpolate",
        "--random",
        "4,10,6",
        "--act",
        "tanh",
        "--seed",
        "11",
        "--out",
        out.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("residual "));

    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let residual = report["residual"].as_f64().unwrap();
    assert!(residual < 1e-6);

    // Rebuild the data from the seed and check the written parameters.
    let params: NetworkParams = serde_json::from_value(report["params"].clone()).unwrap();
    assert_eq!(params.width(), 6);
    let x = standard_normal_matrix(4, 10, derive_seed(11, &[0]));
    let y = standard_normal_matrix(10, 1, derive_seed(11, &[1])).column(0);
    let h = forward(&params, &x, &Activation::Tanh).unwrap();
    let again = h.iter().zip(&y).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
    assert!(again < 1e-6 && (again - residual).abs() <= 1e-12, "{again} vs {residual}");

    let lines = std::fs::read_to_string(&trace).unwrap();
    let first: Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    for key in ["restart", "epsilon", "iter", "lambda", "residual"] {
        assert!(first.get(key).is_some(), "trace misses {key}");
    }
}

#[test]
fn interpolate_refusals() {
    let o = genrank(&["interpolate", "--random", "4,10,5"]);
    assert_eq!(code(&o), 3);
    assert_eq!(json(&o)["reason"], "m_odd");

    let o = genrank(&["interpolate", "--random", "2,9,2"]);
    assert_eq!(code(&o), 3);
    assert_eq!(json(&o)["reason"], "sard_param_count");

    // Odd width stays refused under --force.
    assert_eq!(code(&genrank(&["interpolate", "--random", "4,10,5", "--force"])), 3);

    // Forced past a measure-zero verdict, the solver cannot succeed.
    let o = genrank(&["interpolate", "--random", "2,9,2", "--force"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn interpolate_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let x = standard_normal_matrix(3, 5, 4);
    let y = standard_normal_matrix(1, 5, 5);
    let write = |name: &str, m: &Matrix<f64>| {
        let p = dir.path().join(name);
        std::fs::write(&p, to_text(m, |v| format!("{v:e}"))).unwrap();
        p
    };
    let (xp, yp) = (write("x.txt", &x), write("y.txt", &y));
    let (xs, ys) = (xp.to_str().unwrap(), yp.to_str().unwrap());

    let o = genrank(&["interpolate", "--x", xs, "--y", ys, "--width", "4", "--act", "logistic"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(json(&o)["residual"].as_f64().unwrap() < 1e-6);
    assert!(stderr(&o).contains("residual"));

    // Two outputs split over the neurons.
    let y2 = standard_normal_matrix(5, 2, 6);
    let y2p = write("y2.txt", &y2);
    let o = genrank(&["interpolate", "--x", xs, "--y", y2p.to_str().unwrap(), "--width", "8"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&o)["mode"], "split-neurons");

    let bad = write("bad.txt", &standard_normal_matrix(4, 1, 7));
    assert_eq!(code(&genrank(&["interpolate", "--x", xs, "--y", bad.to_str().unwrap(), "--width", "4"])), 2);
    assert_eq!(code(&genrank(&["interpolate", "--x", xs, "--y", ys])), 2);
    assert_eq!(code(&genrank(&["interpolate", "--random", "4,10,6", "--format", "csv"])), 2);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&genrank(&["rank-grid", "--m", ""])), 2);
    assert_eq!(code(&genrank(&["rank-grid", "--law", "nope"])), 2);
    assert_eq!(code(&genrank(&["rank-grid", "--no-such-flag"])), 2);
    assert_eq!(code(&genrank(&["rank-grid", "--law", "poly"])), 2);
    assert_eq!(code(&genrank(&["rank-grid", "--trials", "0"])), 2);
    assert_eq!(code(&genrank(&["decompose-verify", "--kinds", "bogus"])), 2);
    assert_eq!(code(&genrank(&["frobnicate"])), 2);
}

#[test]
fn default_rank_grid_runs() {
    let o = genrank(&["rank-grid"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 441);
    assert!(rows.iter().all(|r| r[0] == "hadamard-power" && r[10] == "100"));
}

#[test]
fn zhang_grid_rank_is_constant() {
    let o = genrank(&[
        "rank-grid", "--law", "zhang-blockdiag", "--coeffs", "0,0,0,1", "--d", "2", "--m", "2..4", "--n", "2..10", "--trials", "20",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 3 * 5);
    for r in rows {
        // predicted, min_empirical, max_empirical all equal min{md, n, d} = 2
        assert_eq!((&r[6][..], &r[7][..], &r[8][..]), ("2", "2", "2"), "{r:?}");
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let base = ["rank-grid", "--law", "khatri-poly", "--coeffs", "1,1", "--d", "1..2", "--m", "2..3", "--n", "2..5", "--trials", "30"];
    for format in ["csv", "json"] {
        let mut args = base.to_vec();
        args.extend(["--format", format, "--seed", "42"]);
        let a = genrank(&args);
        let b = genrank(&args);
        assert_eq!(code(&a), 0);
        assert_eq!(a.stdout, b.stdout, "{format}");
    }
    let a = genrank(&[&base[..], &["--seed", "1"]].concat());
    let b = genrank(&[&base[..], &["--seed", "2"]].concat());
    assert_ne!(a.stdout, b.stdout);

    let d1 = genrank(&["decompose-verify", "--format", "json", "--seed", "9", "--trials", "5"]);
    let d2 = genrank(&["decompose-verify", "--format", "json", "--seed", "9", "--trials", "5"]);
    assert_eq!(d1.stdout, d2.stdout);
}

#[test]
fn strict_mode_and_trial_replay() {
    // The Khatri-Rao law overstates this cell; see the core crate tests.
    let cell = ["rank-grid", "--law", "khatri-power", "--d", "3", "--k", "1", "--m", "2", "--n", "6", "--trials", "5"];
    let o = genrank(&cell);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&stdout(&o));
    let seeds: Vec<&str> = rows[0][13].split(';').collect();
    assert_eq!(seeds.len(), 5);
    assert_eq!(code(&genrank(&[&cell[..], &["--strict"]].concat())), 1);

    let o = genrank(&[&cell[..], &["--replay", seeds[2], "--format", "json"]].concat());
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["rank"], 5);
    assert_eq!(r["predicted"], 6);
    assert_eq!(r["seed"].as_u64().unwrap().to_string(), seeds[2]);

    // A matching cell: replaying any trial seed from the JSON report agrees.
    let ok = ["rank-grid", "--law", "poly", "--coeffs", "1,0,1", "--d", "2", "--m", "4", "--n", "5", "--trials", "3", "--format", "json"];
    let report = json(&genrank(&ok));
    let cell_seed = report["cells"][0]["cell_seed"].as_u64().unwrap();
    let trial = genrank::generic_rank::trial_seed(cell_seed, 1).to_string();
    let r = json(&genrank(&[&ok[..], &["--replay", &trial, "--strict"]].concat()));
    assert_eq!(r["rank"], r["predicted"]);

    assert_eq!(code(&genrank(&[&ok[..4], &["--replay", "1"]].concat())), 2);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.json");
    std::fs::write(&cfg, r#"{"law": "poly", "coeffs": "1,1", "d": 2, "m": "2..3", "n": [2, 4], "trials": 4, "seed": 5, "format": "json"}"#)
        .unwrap();
    let c = cfg.to_str().unwrap();
    let v = json(&genrank(&["rank-grid", "--config", c]));
    assert_eq!(v["cells"].as_array().unwrap().len(), 4);
    assert_eq!(v["settings"]["trials"], 4);
    assert_eq!(v["settings"]["seed"], 5);

    let v = json(&genrank(&["rank-grid", "--config", c, "--trials", "2", "--n", "3"]));
    assert_eq!(v["cells"].as_array().unwrap().len(), 2);
    assert_eq!(v["settings"]["trials"], 2);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"laws": "poly"}"#).unwrap();
    assert_eq!(code(&genrank(&["rank-grid", "--config", bad.to_str().unwrap()])), 2);
    assert_eq!(code(&genrank(&["rank-grid", "--config", "/nonexistent.json"])), 2);
}

#[test]
fn decompose_verify_outcomes() {
    let o = genrank(&["decompose-verify", "--trials", "10"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("# genrank decompose-verify csv v1\n"));
    assert_eq!(text.lines().count(), 2 + 5);

    let o = genrank(&["decompose-verify", "--kinds", "tensor-directsum", "--trials", "10"]);
    assert_eq!(code(&o), 0);

    let o = genrank(&["decompose-verify", "--trials", "3", "--inject-fault"]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("\"instance\"") && err.contains("\"reconstruction\""), "{err}");
}

#[test]
fn out_flag_writes_the_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    let o = genrank(&["rank-grid", "--d", "1", "--k", "2", "--m", "2", "--n", "2..3", "--trials", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    assert_eq!(csv_rows(&std::fs::read_to_string(Path::new(&out)).unwrap()).len(), 2);
}
