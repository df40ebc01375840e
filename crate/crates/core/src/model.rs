//! The three survival methods behind one interface, plus model persistence.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::curves::{Interpolation, SurvivalCurve};
use crate::dataset::{Standardizer, SurvivalDataset};
use crate::error::{Error, Result};
use crate::grid::{DiscreteLabel, TimeGrid};
use crate::losses::{self, LossOutput};
use crate::net::{self, Mlp, MlpParams, TrainConfig, TrainLog, TrainingSet};
use crate::par::Exec;

pub const MODEL_FORMAT_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pmf,
    LogisticHazard,
    PcHazard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GridScheme {
    Equidistant,
    KmQuantile,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Pmf => "pmf",
            Method::LogisticHazard => "logistic-hazard",
            Method::PcHazard => "pc-hazard",
        }
    }

    /// Rounded labels for the discrete methods, interval labels for PC-Hazard.
    pub fn labels(self, grid: &TimeGrid, durations: &[f64], events: &[bool]) -> Result<Vec<DiscreteLabel>> {
        match self {
            Method::PcHazard => grid.interval_labels_raw(durations, events),
            _ => grid.discretize_raw(durations, events),
        }
    }

    pub fn loss(self, phi: ArrayView2<f64>, labels: &[DiscreteLabel]) -> Result<LossOutput> {
        match self {
            Method::Pmf => losses::nll_pmf(phi, labels),
            Method::LogisticHazard => losses::nll_logistic_hazard(phi, labels),
            Method::PcHazard => losses::nll_pc_hazard(phi, labels),
        }
    }

    /// Survival curve of one output row. `interp` applies to the discrete
    /// methods only.
    pub fn curve(self, grid: Arc<TimeGrid>, phi: &[f64], interp: Interpolation) -> Result<SurvivalCurve> {
        Ok(match self {
            Method::Pmf => SurvivalCurve::from_pmf(grid, phi)?.interpolated(interp),
            Method::LogisticHazard => SurvivalCurve::from_logits(grid, phi)?.interpolated(interp),
            Method::PcHazard => SurvivalCurve::from_pc_logits(grid, phi)?,
        })
    }
}

/// Builds the grid from training outcomes. Returns whether quantile cut
/// points had to be merged.
pub fn build_grid(scheme: GridScheme, data: &SurvivalDataset, m: usize) -> Result<(TimeGrid, bool)> {
    match scheme {
        GridScheme::Equidistant => {
            let t_max = data.durations().iter().copied().fold(0.0, f64::max);
            Ok((TimeGrid::equidistant(t_max, m)?, false))
        }
        GridScheme::KmQuantile => {
            let q = TimeGrid::km_quantile(data, m)?;
            Ok((q.grid, q.deduplicated))
        }
    }
}

/// Everything needed to train one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub method: Method,
    pub grid_scheme: GridScheme,
    pub grid_size: usize,
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub train: TrainConfig,
}

impl Default for FitSpec {
    fn default() -> Self {
        FitSpec {
            method: Method::LogisticHazard,
            grid_scheme: GridScheme::KmQuantile,
            grid_size: 25,
            hidden: vec![64, 64],
            dropout: 0.1,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurvivalModel {
    pub method: Method,
    pub grid: Arc<TimeGrid>,
    pub net: Mlp,
    pub standardizer: Standardizer,
}

#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub model: SurvivalModel,
    pub log: TrainLog,
    pub grid_deduplicated: bool,
}

/// Standardizes on the training covariates, builds the grid from training
/// outcomes, labels both sets and trains the network.
pub fn fit_model(spec: &FitSpec, train: &SurvivalDataset, val: &SurvivalDataset) -> Result<FitOutcome> {
    if train.n_covariates() != val.n_covariates() {
        return Err(Error::shape(
            format!("{} validation covariates", train.n_covariates()),
            val.n_covariates(),
        ));
    }
    let (grid, grid_deduplicated) = build_grid(spec.grid_scheme, train, spec.grid_size)?;
    let standardizer = Standardizer::fit(train);
    let to_set = |d: &SurvivalDataset| -> Result<TrainingSet> {
        TrainingSet::new(
            standardizer.transform(d.covariates())?,
            spec.method.labels(&grid, d.durations(), d.events())?,
        )
    };
    let (tr, va) = (to_set(train)?, to_set(val)?);

    let mut widths = vec![train.n_covariates()];
    widths.extend(&spec.hidden);
    widths.push(grid.m());
    let init = Mlp::new(&widths, spec.dropout, spec.train.seed ^ 0x9E37_79B9_7F4A_7C15)?;
    let method = spec.method;
    let (net, log) = net::fit(&init, |phi, l| method.loss(phi, l), &tr, &va, &spec.train)?;
    Ok(FitOutcome {
        model: SurvivalModel {
            method,
            grid: Arc::new(grid),
            net,
            standardizer,
        },
        log,
        grid_deduplicated,
    })
}

impl SurvivalModel {
    /// Network outputs for raw (unstandardized) covariates.
    pub fn outputs(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.net.predict(self.standardizer.transform(x)?.view())
    }

    pub fn predict_curves(&self, x: &Array2<f64>, interp: Interpolation) -> Result<Vec<SurvivalCurve>> {
        self.predict_curves_with(Exec::default(), x, interp)
    }

    pub fn predict_curves_with(&self, exec: Exec, x: &Array2<f64>, interp: Interpolation) -> Result<Vec<SurvivalCurve>> {
        let phi = self.outputs(x)?;
        exec.map_range(phi.nrows(), |i| {
            let row = phi.row(i).to_vec();
            self.method.curve(self.grid.clone(), &row, interp)
        })
        .into_iter()
        .collect()
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            format_version: MODEL_FORMAT_VERSION.to_string(),
            method: self.method,
            grid: (*self.grid).clone(),
            net: self.net.to_params(),
            standardizer: self.standardizer.clone(),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!("unsupported format version `{}`", file.format_version)));
        }
        let net = Mlp::from_params(&file.net)?;
        if net.output_dim() != file.grid.m() {
            return Err(Error::Model(format!(
                "network has {} outputs but the grid has {} intervals",
                net.output_dim(),
                file.grid.m()
            )));
        }
        if net.input_dim() != file.standardizer.dim() {
            return Err(Error::Model("standardizer and network input sizes differ".into()));
        }
        Ok(SurvivalModel {
            method: file.method,
            grid: Arc::new(file.grid),
            net,
            standardizer: file.standardizer,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(&self.to_file())?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_file(serde_json::from_str(&text)?)
    }
}

/// On-disk model: version tag, method, grid cut points, network parameters
/// and the covariate standardizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: String,
    pub method: Method,
    pub grid: TimeGrid,
    pub net: MlpParams,
    pub standardizer: Standardizer,
}
