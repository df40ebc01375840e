//! Right-censored survival data: loading, validation, standardization, splitting.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One individual: observed duration, event flag and covariates.
#[derive(Clone, Debug, PartialEq)]
pub struct SurvivalRecord {
    pub duration: f64,
    pub event: bool,
    pub covariates: Vec<f64>,
}

/// Column names identifying the duration and event columns of a CSV file.
#[derive(Clone, Debug)]
pub struct CsvSchema {
    pub duration: String,
    pub event: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            duration: "duration".into(),
            event: "event".into(),
        }
    }
}

/// Covariate matrix (n × p) with observed `(duration, event)` pairs.
///
/// Immutable after construction; every constructor validates.
#[derive(Clone, Debug, PartialEq)]
pub struct SurvivalDataset {
    durations: Vec<f64>,
    events: Vec<bool>,
    covariates: Array2<f64>,
    names: Vec<String>,
}

impl SurvivalDataset {
    pub fn new(durations: Vec<f64>, events: Vec<bool>, covariates: Array2<f64>) -> Result<Self> {
        let names = (0..covariates.ncols()).map(|j| format!("x{j}")).collect();
        Self::with_names(durations, events, covariates, names)
    }

    pub fn with_names(
        durations: Vec<f64>,
        events: Vec<bool>,
        covariates: Array2<f64>,
        names: Vec<String>,
    ) -> Result<Self> {
        let n = durations.len();
        if n == 0 {
            return Err(Error::InvalidArgument("dataset must contain at least one record".into()));
        }
        if events.len() != n {
            return Err(Error::shape(format!("{n} event flags"), events.len()));
        }
        if covariates.nrows() != n {
            return Err(Error::shape(format!("{n} covariate rows"), covariates.nrows()));
        }
        if names.len() != covariates.ncols() {
            return Err(Error::shape(
                format!("{} covariate names", covariates.ncols()),
                names.len(),
            ));
        }
        for (i, &t) in durations.iter().enumerate() {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::Validation {
                    row: i + 1,
                    msg: format!("duration must be finite and nonnegative, got {t}"),
                });
            }
        }
        for (i, row) in covariates.outer_iter().enumerate() {
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::Validation {
                    row: i + 1,
                    msg: format!("non-finite covariate {v}"),
                });
            }
        }
        Ok(SurvivalDataset {
            durations,
            events,
            covariates,
            names,
        })
    }

    pub fn from_records(records: &[SurvivalRecord]) -> Result<Self> {
        let p = records.first().map_or(0, |r| r.covariates.len());
        let mut flat = Vec::with_capacity(records.len() * p);
        for (i, r) in records.iter().enumerate() {
            if r.covariates.len() != p {
                return Err(Error::Validation {
                    row: i + 1,
                    msg: format!("expected {p} covariates, got {}", r.covariates.len()),
                });
            }
            flat.extend_from_slice(&r.covariates);
        }
        let x = Array2::from_shape_vec((records.len(), p), flat)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Self::new(
            records.iter().map(|r| r.duration).collect(),
            records.iter().map(|r| r.event).collect(),
            x,
        )
    }

    pub fn len(&self) -> usize {
        self.durations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.durations.is_empty()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn covariates(&self) -> &Array2<f64> {
        &self.covariates
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.names
    }

    pub fn record(&self, i: usize) -> SurvivalRecord {
        SurvivalRecord {
            duration: self.durations[i],
            event: self.events[i],
            covariates: self.covariates.row(i).to_vec(),
        }
    }

    pub fn n_events(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }

    pub fn censoring_fraction(&self) -> f64 {
        1.0 - self.n_events() as f64 / self.len() as f64
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Self::with_names(
            indices.iter().map(|&i| self.durations[i]).collect(),
            indices.iter().map(|&i| self.events[i]).collect(),
            self.covariates.select(Axis(0), indices),
            self.names.clone(),
        )
    }

    /// Same outcomes, replaced covariates.
    pub fn with_covariates(&self, covariates: Array2<f64>) -> Result<Self> {
        Self::with_names(
            self.durations.clone(),
            self.events.clone(),
            covariates,
            self.names.clone(),
        )
    }

    pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, schema)
    }

    /// Parses CSV with a header row. All columns other than the duration and
    /// event columns become covariates, in header order.
    pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
        };
        let dcol = find(&schema.duration)?;
        let ecol = find(&schema.event)?;
        let cov_cols: Vec<usize> = (0..headers.len()).filter(|&j| j != dcol && j != ecol).collect();
        let names = cov_cols.iter().map(|&j| headers[j].trim().to_string()).collect();

        let mut durations = Vec::new();
        let mut events = Vec::new();
        let mut flat = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec?;
            let cell = |j: usize| -> Result<f64> {
                let s = rec.get(j).unwrap_or("").trim();
                s.parse::<f64>().map_err(|_| Error::Validation {
                    row,
                    msg: format!("non-numeric value `{s}` in column `{}`", &headers[j]),
                })
            };
            let t = cell(dcol)?;
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::Validation {
                    row,
                    msg: format!("duration must be finite and nonnegative, got {t}"),
                });
            }
            let e = cell(ecol)?;
            let event = if e == 1.0 {
                true
            } else if e == 0.0 {
                false
            } else {
                return Err(Error::Validation {
                    row,
                    msg: format!("event must be 0 or 1, got {e}"),
                });
            };
            durations.push(t);
            events.push(event);
            for &j in &cov_cols {
                flat.push(cell(j)?);
            }
        }
        let n = durations.len();
        let x = Array2::from_shape_vec((n, cov_cols.len()), flat)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Self::with_names(durations, events, x, names)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_writer(std::io::BufWriter::new(file))
    }

    /// Writes `duration,event,<covariates…>`. Floats use the shortest
    /// representation that round-trips exactly.
    pub fn to_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["duration".to_string(), "event".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        let mut buf = Vec::with_capacity(header.len());
        for i in 0..self.len() {
            buf.clear();
            buf.push(self.durations[i].to_string());
            buf.push(if self.events[i] { "1" } else { "0" }.to_string());
            buf.extend(self.covariates.row(i).iter().map(|v| v.to_string()));
            w.write_record(&buf)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Random disjoint partition into train/validation/test.
    ///
    /// Train and validation sizes are `floor(n · fraction)`; test takes the rest.
    pub fn split(&self, fractions: (f64, f64, f64), seed: u64) -> Result<(Self, Self, Self)> {
        let (a, b, c) = fractions;
        if !(a > 0.0 && b > 0.0 && c > 0.0) || ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "split fractions must be positive and sum to 1, got ({a}, {b}, {c})"
            )));
        }
        let n = self.len();
        // The epsilon keeps products like 10 × 0.7 from flooring to 6.
        let n_train = (n as f64 * a + 1e-9).floor() as usize;
        let n_val = (n as f64 * b + 1e-9).floor() as usize;
        if n_train == 0 || n_val == 0 || n_train + n_val >= n {
            return Err(Error::InvalidArgument(format!(
                "n = {n} is too small for a nonempty three-way split"
            )));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Ok((
            self.select(&idx[..n_train])?,
            self.select(&idx[n_train..n_train + n_val])?,
            self.select(&idx[n_train + n_val..])?,
        ))
    }
}

/// Per-column affine scaling to zero mean and unit (population) variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Strictly positive; constant columns get 1.
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &SurvivalDataset) -> Self {
        Self::fit_matrix(data.covariates())
    }

    pub fn fit_matrix(x: &Array2<f64>) -> Self {
        let n = x.nrows() as f64;
        let mut means = Vec::with_capacity(x.ncols());
        let mut stds = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            means.push(mean);
            stds.push(if sd > 0.0 && sd.is_finite() { sd } else { 1.0 });
        }
        Standardizer { means, stds }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check(x.ncols())?;
        let means = Array1::from(self.means.clone());
        let stds = Array1::from(self.stds.clone());
        Ok((x - &means) / &stds)
    }

    pub fn inverse_transform(&self, z: &Array2<f64>) -> Result<Array2<f64>> {
        self.check(z.ncols())?;
        let means = Array1::from(self.means.clone());
        let stds = Array1::from(self.stds.clone());
        Ok(z * &stds + &means)
    }

    pub fn apply(&self, data: &SurvivalDataset) -> Result<SurvivalDataset> {
        data.with_covariates(self.transform(data.covariates())?)
    }

    fn check(&self, p: usize) -> Result<()> {
        if p != self.dim() {
            return Err(Error::shape(format!("{} covariates", self.dim()), p));
        }
        Ok(())
    }
}
