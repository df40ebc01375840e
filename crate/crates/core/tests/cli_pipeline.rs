use std::fs;
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use survnet::cli::{evaluate_curves, main_with_args, EvalOptions};
use survnet::{SurvivalCurve, SurvivalDataset, TimeGrid};

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("survnet").chain(args.iter().copied()))
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn simulate_fit_predict_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run(&["simulate", "--n", "400", "--seed", "1", "--out", &p(d, "train.csv")]), 0);
    assert_eq!(run(&["simulate", "--n", "200", "--seed", "2", "--out", &p(d, "val.csv")]), 0);
    assert_eq!(
        run(&["simulate", "--n", "300", "--seed", "3", "--censor-hazard", "0", "--out", &p(d, "test.csv")]),
        0
    );
    assert!(d.join("test.truth.csv").exists());

    let config = p(d, "run.json");
    fs::write(&config, r#"{"method": "logistic-hazard", "grid_size": 5, "hidden": [16], "max_epochs": 5}"#).unwrap();
    let fit = |out: &str, extra: &[&str]| {
        let (train, val) = (p(d, "train.csv"), p(d, "val.csv"));
        let mut args = vec!["fit", "--config", &config, "--train", &train];
        let out = p(d, out);
        let log = format!("{out}.log");
        args.extend(["--val", &val, "--out", &out, "--log", &log]);
        args.extend(extra);
        run(&args)
    };
    assert_eq!(fit("m.json", &[]), 0);
    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("m.json")).unwrap()).unwrap();
    assert_eq!(model["grid"].as_array().unwrap().len(), 6);
    assert_eq!(model["method"], "logistic-hazard");
    let log = fs::read_to_string(d.join("m.json.log")).unwrap();
    assert_eq!(log.lines().filter(|l| l.contains("\"val_loss\"")).count(), 5);

    // flags override the config file
    assert_eq!(fit("m10.json", &["--grid-size", "10"]), 0);
    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("m10.json")).unwrap()).unwrap();
    assert_eq!(model["grid"].as_array().unwrap().len(), 11);

    let eval = |interp: &str, out: &str| {
        run(&[
            "evaluate", "--model", &p(d, "m.json"), "--test", &p(d, "test.csv"), "--truth", &p(d, "test.truth.csv"),
            "--interpolation", interp, "--out", &p(d, out),
        ])
    };
    assert_eq!(eval("chi", "chi.json"), 0);
    assert_eq!(eval("none", "none.json"), 0);
    for f in ["chi.json", "none.json"] {
        let report: Vec<serde_json::Value> = serde_json::from_str(&fs::read_to_string(d.join(f)).unwrap()).unwrap();
        let names: Vec<&str> = report.iter().map(|r| r["metric"].as_str().unwrap()).collect();
        assert_eq!(names, ["td_concordance", "integrated_brier_score", "mse"]);
    }
    assert_ne!(fs::read(d.join("chi.json")).unwrap(), fs::read(d.join("none.json")).unwrap());

    assert_eq!(
        run(&["predict", "--model", &p(d, "m.json"), "--data", &p(d, "test.csv"), "--times", "0,10,50", "--out", &p(d, "curves.csv")]),
        0
    );
    let curves = fs::read_to_string(d.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 300 * 3);
    assert!(curves.lines().nth(1).unwrap().starts_with("0,0,1"));
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run(&["fit", "--train", &p(d, "missing.csv"), "--val", &p(d, "missing.csv"), "--out", &p(d, "m.json")]), 1);
    assert_eq!(run(&["no-such-command"]), 1);
    assert_eq!(run(&["--help"]), 0);

    // no events at all: grid construction fails with a message
    let csv = "duration,event,x0\n1,0,0.5\n2,0,0.1\n3,0,0.3\n";
    fs::write(d.join("cens.csv"), csv).unwrap();
    let cens = p(d, "cens.csv");
    assert_eq!(run(&["fit", "--train", &cens, "--val", &cens, "--out", &p(d, "m.json")]), 1);

    // a learning rate this large overflows the network
    fs::write(d.join("ok.csv"), "duration,event,x0\n1,1,100\n2,0,-100\n3,1,50\n4,1,-20\n").unwrap();
    let ok = p(d, "ok.csv");
    let code = run(&[
        "fit", "--train", &ok, "--val", &ok, "--out", &p(d, "m.json"), "--learning-rate", "1e300", "--grid-size", "2",
        "--grid-scheme", "equidistant", "--dropout", "0",
    ]);
    assert_eq!(code, 2);

    assert_eq!(run(&["simulate", "--n", "10", "--out", &p(d, "s.csv")]), 0);
    let unknown = p(d, "bad.json");
    fs::write(&unknown, r#"{"not_a_field": 1}"#).unwrap();
    assert_eq!(run(&["simulate", "--config", &unknown, "--out", &p(d, "s.csv")]), 1);
}

#[test]
fn oracle_curves_score_perfectly() {
    // separable toy set: everyone has an event, predictions are the true step curves
    let n = 6;
    let durations: Vec<f64> = (1..=n).map(|k| k as f64).collect();
    let test = SurvivalDataset::new(durations.clone(), vec![true; n], Array2::zeros((n, 1))).unwrap();
    let grid = Arc::new(TimeGrid::equidistant(n as f64, n).unwrap());
    let curves: Vec<SurvivalCurve> = (0..n)
        .map(|i| {
            let h: Vec<f64> = (0..n).map(|j| if j == i { 1.0 } else { 0.0 }).collect();
            SurvivalCurve::from_hazards(grid.clone(), &h).unwrap()
        })
        .collect();
    let report = evaluate_curves(&curves, &test, None, &EvalOptions::default()).unwrap();
    assert_eq!(report[0].metric, "td_concordance");
    assert_eq!(report[0].value, 1.0);
    assert_eq!(report[1].metric, "integrated_brier_score");
    assert!(report[1].value.abs() < 1e-12, "{}", report[1].value);
}
