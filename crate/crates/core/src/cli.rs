//! Command-line pipeline: `simulate`, `fit`, `predict`, `evaluate`.
//!
//! Every option can also come from a JSON file passed with `--config`; flags
//! on the command line win over the file, the file wins over defaults.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use crate::curves::{write_curves_csv, Interpolation, SurvivalCurve};
use crate::dataset::{CsvSchema, SurvivalDataset};
use crate::error::{Error, Result};
use crate::km::KaplanMeierCurve;
use crate::metrics::{integrated_brier_score, mse_vs_truth, td_concordance, EvalGrid, MetricRecord};
use crate::model::{fit_model, FitSpec, GridScheme, Method, SurvivalModel};
use crate::net::TrainConfig;
use crate::sim::{generate_dataset, SimConfig, TruthTable};

#[derive(Debug, Parser)]
#[command(name = "survnet", version, about = "Neural-network survival models on a time grid")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a simulated dataset and its true survival curves.
    Simulate(SimulateArgs),
    /// Train a model and write it as JSON.
    Fit(FitArgs),
    /// Write predicted survival curves as CSV.
    Predict(PredictArgs),
    /// Write a JSON metric report for a test set.
    Evaluate(EvaluateArgs),
}

/// Options shared through the config file. Every field is optional; unknown
/// keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub method: Option<Method>,
    pub grid_scheme: Option<GridScheme>,
    pub grid_size: Option<usize>,
    pub interpolation: Option<Interpolation>,
    pub hidden: Option<Vec<usize>>,
    pub dropout: Option<f64>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub cycle_len: Option<usize>,
    pub cycle_mult: Option<usize>,
    pub lr_decay: Option<f64>,
    pub weight_decay: Option<f64>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub design_seed: Option<u64>,
    pub censor_hazard: Option<f64>,
    pub eval_points: Option<usize>,
    pub duration_col: Option<String>,
    pub event_col: Option<String>,
    pub train: Option<PathBuf>,
    pub val: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub censor_reference: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub log: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seed of the covariate coefficients; share it across splits of one study.
    #[arg(long)]
    pub design_seed: Option<u64>,
    /// Censoring probability per fine-grid step (default: calibrated to 37 % censoring).
    #[arg(long)]
    pub censor_hazard: Option<f64>,
    /// Dataset CSV to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Truth CSV to write (default: `<out>` with a `.truth.csv` suffix).
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long, value_enum)]
    pub grid_scheme: Option<GridScheme>,
    /// Number of grid intervals `m`.
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub cycle_len: Option<usize>,
    #[arg(long)]
    pub cycle_mult: Option<usize>,
    #[arg(long)]
    pub lr_decay: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub duration_col: Option<String>,
    #[arg(long)]
    pub event_col: Option<String>,
    /// Model JSON to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON-lines training log.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Covariate CSV (duration and event columns are required by the schema).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub interpolation: Option<Interpolation>,
    /// Evaluation times, comma separated (default: 100 points on `[0, τ_m]`).
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long)]
    pub duration_col: Option<String>,
    #[arg(long)]
    pub event_col: Option<String>,
    /// Curves CSV (`id,t,surv`); stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// True survival table; adds the MSE to the report.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Fail unless a truth table is given.
    #[arg(long)]
    pub mse: bool,
    #[arg(long, value_enum)]
    pub interpolation: Option<Interpolation>,
    /// Points of the Brier score grid.
    #[arg(long)]
    pub eval_points: Option<usize>,
    /// Dataset whose censoring distribution weights the Brier score
    /// (default: the test set).
    #[arg(long)]
    pub censor_reference: Option<PathBuf>,
    #[arg(long)]
    pub duration_col: Option<String>,
    #[arg(long)]
    pub event_col: Option<String>,
    /// Report JSON; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON-lines diagnostics.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

fn required<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidArgument(format!("missing --{name}")))
}

fn schema(duration: Option<String>, event: Option<String>) -> CsvSchema {
    let d = CsvSchema::default();
    CsvSchema {
        duration: duration.unwrap_or(d.duration),
        event: event.unwrap_or(d.event),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Writes to `path`, or stdout when absent.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush().map_err(|e| Error::io(p, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush().map_err(|e| Error::io("<stdout>", e))
        }
    }
}

struct JsonLog(Option<(PathBuf, BufWriter<File>)>);

impl JsonLog {
    fn open(path: Option<PathBuf>) -> Result<Self> {
        Ok(JsonLog(match path {
            Some(p) => {
                let w = create(&p)?;
                Some((p, w))
            }
            None => None,
        }))
    }

    fn line(&mut self, value: serde_json::Value) -> Result<()> {
        if let Some((p, w)) = &mut self.0 {
            writeln!(w, "{value}").map_err(|e| Error::io(p.as_path(), e))?;
        }
        Ok(())
    }

    fn finish(self) -> Result<()> {
        if let Some((p, mut w)) = self.0 {
            w.flush().map_err(|e| Error::io(p, e))?;
        }
        Ok(())
    }
}

pub fn run_simulate(args: SimulateArgs) -> Result<()> {
    let cfg = RunConfig::load(args.config.as_deref())?;
    let d = SimConfig::default();
    let sim = SimConfig {
        n: args.n.or(cfg.n).unwrap_or(d.n),
        seed: args.seed.or(cfg.seed).unwrap_or(d.seed),
        design_seed: args.design_seed.or(cfg.design_seed).unwrap_or(d.design_seed),
        censor_hazard: args.censor_hazard.or(cfg.censor_hazard).unwrap_or(d.censor_hazard),
        ..d
    };
    let out = required(args.out.or(cfg.out), "out")?;
    let truth_path = args.truth.or(cfg.truth).unwrap_or_else(|| truth_path_for(&out));
    let sim_out = generate_dataset(&sim)?;
    sim_out.dataset.write_csv(&out)?;
    sim_out.truth.write_csv(&truth_path)?;
    let data = &sim_out.dataset;
    println!(
        "{}",
        json!({
            "n": data.len(),
            "events": data.n_events(),
            "censoring_fraction": data.censoring_fraction(),
            "dataset": out,
            "truth": truth_path,
        })
    );
    Ok(())
}

fn truth_path_for(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.truth.csv"))
}

pub fn run_fit(args: FitArgs) -> Result<()> {
    let cfg = RunConfig::load(args.config.as_deref())?;
    let dt = TrainConfig::default();
    let ds = FitSpec::default();
    let spec = FitSpec {
        method: args.method.or(cfg.method).unwrap_or(ds.method),
        grid_scheme: args.grid_scheme.or(cfg.grid_scheme).unwrap_or(ds.grid_scheme),
        grid_size: args.grid_size.or(cfg.grid_size).unwrap_or(ds.grid_size),
        hidden: args.hidden.or(cfg.hidden).unwrap_or(ds.hidden),
        dropout: args.dropout.or(cfg.dropout).unwrap_or(ds.dropout),
        train: TrainConfig {
            batch_size: args.batch_size.or(cfg.batch_size).unwrap_or(dt.batch_size),
            learning_rate: args.learning_rate.or(cfg.learning_rate).unwrap_or(dt.learning_rate),
            cycle_len: args.cycle_len.or(cfg.cycle_len).unwrap_or(dt.cycle_len),
            cycle_mult: args.cycle_mult.or(cfg.cycle_mult).unwrap_or(dt.cycle_mult),
            lr_decay: args.lr_decay.or(cfg.lr_decay).unwrap_or(dt.lr_decay),
            weight_decay: args.weight_decay.or(cfg.weight_decay).unwrap_or(dt.weight_decay),
            max_epochs: args.max_epochs.or(cfg.max_epochs).unwrap_or(dt.max_epochs),
            patience: args.patience.or(cfg.patience).unwrap_or(dt.patience),
            seed: args.seed.or(cfg.seed).unwrap_or(dt.seed),
        },
    };
    let schema = schema(args.duration_col.or(cfg.duration_col), args.event_col.or(cfg.event_col));
    let train = SurvivalDataset::load_csv(required(args.train.or(cfg.train), "train")?, &schema)?;
    let val = SurvivalDataset::load_csv(required(args.val.or(cfg.val), "val")?, &schema)?;
    let out = required(args.out.or(cfg.out), "out")?;
    let mut log = JsonLog::open(args.log.or(cfg.log))?;

    let fitted = fit_model(&spec, &train, &val)?;
    if fitted.grid_deduplicated {
        eprintln!("warning: duplicate quantile cut points were merged; grid has {} intervals", fitted.model.grid.m());
        log.line(json!({"event": "grid_deduplicated", "intervals": fitted.model.grid.m()}))?;
    }
    for e in &fitted.log.epochs {
        log.line(serde_json::to_value(e)?)?;
    }
    log.line(json!({
        "event": "done",
        "best_epoch": fitted.log.best_epoch,
        "best_val_loss": fitted.log.best_val_loss,
    }))?;
    log.finish()?;
    fitted.model.save(&out)
}

pub fn run_predict(args: PredictArgs) -> Result<()> {
    let cfg = RunConfig::load(args.config.as_deref())?;
    let model = SurvivalModel::load(required(args.model.or(cfg.model), "model")?)?;
    let schema = schema(args.duration_col.or(cfg.duration_col), args.event_col.or(cfg.event_col));
    let data = SurvivalDataset::load_csv(required(args.data.or(cfg.data), "data")?, &schema)?;
    let interp = args.interpolation.or(cfg.interpolation).unwrap_or(Interpolation::None);
    let times = match args.times {
        Some(t) => EvalGrid::new(t)?.times().to_vec(),
        None => {
            let t_max = model.grid.t_max();
            (0..100).map(|k| t_max * k as f64 / 99.0).collect()
        }
    };
    let curves = model.predict_curves(data.covariates(), interp)?;
    with_output(args.out.or(cfg.out).as_deref(), |w| write_curves_csv(&curves, &times, w))
}

/// Options for [`evaluate_curves`].
#[derive(Clone, Debug)]
pub struct EvalOptions<'a> {
    /// Points of the equidistant Brier-score grid between the smallest and
    /// largest test durations.
    pub eval_points: usize,
    /// Sample for the censoring Kaplan-Meier estimate; `None` uses the test set.
    pub censor_reference: Option<&'a SurvivalDataset>,
}

impl Default for EvalOptions<'_> {
    fn default() -> Self {
        EvalOptions {
            eval_points: 100,
            censor_reference: None,
        }
    }
}

/// Concordance, integrated Brier score and, when `truth` is given, MSE for
/// one curve per test individual. Curves need not come from a model, which
/// lets tests inject known curves.
pub fn evaluate_curves(
    curves: &[SurvivalCurve],
    test: &SurvivalDataset,
    truth: Option<&TruthTable>,
    opts: &EvalOptions,
) -> Result<Vec<MetricRecord>> {
    let n = test.len();
    let c = td_concordance(curves, test.durations(), test.events())?;
    let reference = opts.censor_reference.unwrap_or(test);
    let flipped: Vec<bool> = reference.events().iter().map(|e| !e).collect();
    let censor_km = KaplanMeierCurve::fit(reference.durations(), &flipped)?;
    let eval = EvalGrid::from_observed(test.durations(), opts.eval_points)?;
    let bs = integrated_brier_score(curves, test.durations(), test.events(), &eval, &censor_km)?;
    let mut report = vec![
        MetricRecord {
            metric: "td_concordance".into(),
            value: c,
            n,
            dropped_terms: 0,
        },
        MetricRecord {
            metric: "integrated_brier_score".into(),
            value: bs.integrated,
            n,
            dropped_terms: bs.dropped_terms,
        },
    ];
    if let Some(truth) = truth {
        let times = EvalGrid::new(truth.times.clone())?;
        report.push(MetricRecord {
            metric: "mse".into(),
            value: mse_vs_truth(curves, &truth.values, &times)?,
            n,
            dropped_terms: 0,
        });
    }
    Ok(report)
}

pub fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let cfg = RunConfig::load(args.config.as_deref())?;
    let model = SurvivalModel::load(required(args.model.or(cfg.model), "model")?)?;
    let schema = schema(args.duration_col.or(cfg.duration_col), args.event_col.or(cfg.event_col));
    let test = SurvivalDataset::load_csv(required(args.test.or(cfg.test), "test")?, &schema)?;
    let truth = match args.truth.or(cfg.truth) {
        Some(p) => Some(TruthTable::load_csv(p)?),
        None if args.mse => return Err(Error::InvalidArgument("--mse needs --truth".into())),
        None => None,
    };
    let reference = match args.censor_reference.or(cfg.censor_reference) {
        Some(p) => Some(SurvivalDataset::load_csv(p, &schema)?),
        None => None,
    };
    let interp = args.interpolation.or(cfg.interpolation).unwrap_or(Interpolation::None);
    let opts = EvalOptions {
        eval_points: args.eval_points.or(cfg.eval_points).unwrap_or(100),
        censor_reference: reference.as_ref(),
    };
    let mut log = JsonLog::open(args.log.or(cfg.log))?;

    let curves = model.predict_curves(test.covariates(), interp)?;
    let report = evaluate_curves(&curves, &test, truth.as_ref(), &opts)?;
    for r in report.iter().filter(|r| r.dropped_terms > 0) {
        eprintln!("warning: {} dropped {} zero-weight terms", r.metric, r.dropped_terms);
        log.line(json!({"event": "dropped_terms", "metric": r.metric, "count": r.dropped_terms}))?;
    }
    log.line(json!({"event": "evaluated", "method": model.method.name(), "interpolation": interp}))?;
    log.finish()?;
    let text = serde_json::to_string_pretty(&report)?;
    with_output(args.out.or(cfg.out).as_deref(), |w| {
        writeln!(w, "{text}").map_err(|e| Error::io("<report>", e))
    })
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Fit(a) => run_fit(a),
        Command::Predict(a) => run_predict(a),
        Command::Evaluate(a) => run_evaluate(a),
    }
}

/// Process exit code for a pipeline result: 0 success, 1 invalid input,
/// 2 numerical failure.
pub fn exit_code(result: &Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) if e.is_numerical() => 2,
        Err(_) => 1,
    }
}

/// Parses `args` (program name first) and runs the pipeline, printing errors
/// to stderr. Returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = run(cli);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    exit_code(&result)
}
