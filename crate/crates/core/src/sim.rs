//! Simulated survival data from covariate-dependent logit hazards on a fine
//! discrete grid, with constant-hazard censoring and known true survival.
//!
//! Nine latent uniforms `x̃_1..x̃_9 ∈ [−1, 1]` define the hazard through
//! `γ_1..γ_9`. Each latent is spread over a block of observed covariates
//! with `x_jᵀβ_j = x̃_j`, where the coefficient vectors `β_j` are fixed by a
//! design seed shared by every dataset drawn from the same study.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::SurvivalDataset;
use crate::error::{Error, Result};

/// Number of latent variables (and `γ` parameters).
pub const N_LATENT: usize = 9;

/// Per-step censoring hazard giving 37 % censored observations (administrative
/// censoring at `t_max` included), found by
/// bisection on 100 000 draws (see `examples/calibrate_censoring.rs`).
pub const DEFAULT_CENSOR_HAZARD: f64 = 1.502e-4;

const COVARIATE_STREAM: u64 = 0;
const EVENT_STREAM: u64 = 1;
const CENSOR_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub seed: u64,
    /// Seed for the coefficient vectors `β_j`; keep it equal across the
    /// train/validation/test sets of one study.
    pub design_seed: u64,
    /// Fine grid `t_max/points, 2·t_max/points, …, t_max`.
    pub fine_points: usize,
    pub t_max: f64,
    pub covs_per_latent: usize,
    /// Censoring probability per fine-grid step.
    pub censor_hazard: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 3000,
            seed: 0,
            design_seed: 0,
            fine_points: 1000,
            t_max: 100.0,
            covs_per_latent: 5,
            censor_hazard: DEFAULT_CENSOR_HAZARD,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.fine_points == 0 || self.covs_per_latent == 0 {
            return Err(Error::InvalidArgument("n, fine_points and covs_per_latent must be positive".into()));
        }
        if !(self.t_max > 0.0) {
            return Err(Error::InvalidArgument(format!("t_max must be positive, got {}", self.t_max)));
        }
        if !(0.0..1.0).contains(&self.censor_hazard) {
            return Err(Error::InvalidArgument(format!(
                "censoring hazard must be in [0, 1), got {}",
                self.censor_hazard
            )));
        }
        Ok(())
    }

    /// Fine-grid times `τ_1, …, τ_points`.
    pub fn fine_grid(&self) -> Vec<f64> {
        let p = self.fine_points as f64;
        (1..=self.fine_points).map(|j| self.t_max * j as f64 / p).collect()
    }
}

/// Hazard parameters `γ_1..γ_9` of one individual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaSet {
    pub gammas: [f64; N_LATENT],
}

impl GammaSet {
    pub fn from_latent(x: &[f64; N_LATENT]) -> Self {
        let g1 = 5.0 * x[0];
        let exponent = (2.5 * (x[1] + 1.0) - 1.0).floor();
        let g2 = 2.0 * PI / 100.0 * 2f64.powf(exponent);
        let g3 = 15.0 * x[2];
        let g4 = 2.0 * x[3] - 6.0 - g1.abs();
        let g5 = 2.5 * (x[4] + 1.0) - 8.0;
        let g6 = 1.0 / (1.0 + (-3.0 * (x[5] + 1.0) + 5.0).exp());
        let g7 = 5.0 * (x[6] + 0.6);
        let g8 = 5.0 * x[7];
        let g9 = 5.0 * x[8];
        GammaSet {
            gammas: [g1, g2, g3, g4, g5, g6, g7, g8, g9],
        }
    }

    /// Mixture weights: softmax of `(γ_7, γ_8, γ_9)`.
    pub fn alphas(&self) -> [f64; 3] {
        let g = &self.gammas[6..9];
        let top = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e = [(g[0] - top).exp(), (g[1] - top).exp(), (g[2] - top).exp()];
        let s = e[0] + e[1] + e[2];
        [e[0] / s, e[1] / s, e[2] / s]
    }

    /// `g(t) = α_1·[γ_1 sin(γ_2 (t + γ_3)) + γ_4] + α_2·γ_5 + α_3·(γ_6·t − 10)`.
    pub fn logit_hazard(&self, t: f64) -> f64 {
        let g = &self.gammas;
        let a = self.alphas();
        let sin_part = g[0] * (g[1] * (t + g[2])).sin() + g[3];
        a[0] * sin_part + a[1] * g[4] + a[2] * (g[5] * t - 10.0)
    }

    pub fn hazard(&self, t: f64) -> f64 {
        crate::losses::sigmoid(self.logit_hazard(t))
    }

    /// `S(τ_j) = Π_{k≤j} (1 − h(τ_k))` over `times`.
    pub fn true_survival(&self, times: &[f64]) -> Vec<f64> {
        let mut s = 1.0;
        times
            .iter()
            .map(|&t| {
                s *= crate::losses::sigmoid(-self.logit_hazard(t));
                s
            })
            .collect()
    }
}

/// Fixed coefficient vectors `β_1..β_9`, standard normal entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SimDesign {
    pub betas: Vec<Vec<f64>>,
}

impl SimDesign {
    pub fn new(design_seed: u64, covs_per_latent: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(design_seed);
        let betas = (0..N_LATENT)
            .map(|_| (0..covs_per_latent).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        SimDesign { betas }
    }

    /// Draws covariates for latent value `latent` with `xᵀβ_j = latent`:
    /// successive residuals `u_k = x̃ − Σ_{i≤k} x_i β_i` are uniform on
    /// `[−1, 1]` and the last coordinate closes the identity.
    pub fn covariates_for<R: Rng>(&self, j: usize, latent: f64, rng: &mut R) -> Vec<f64> {
        let beta = &self.betas[j];
        let m = beta.len();
        let mut x = Vec::with_capacity(m);
        let mut prev = latent;
        let mut acc = 0.0;
        for b in &beta[..m - 1] {
            let u: f64 = rng.random_range(-1.0..=1.0);
            let xi = (prev - u) / b;
            acc += xi * b;
            x.push(xi);
            prev = u;
        }
        x.push((latent - acc) / beta[m - 1]);
        x
    }
}

/// True survival on the fine grid, one row per individual.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthTable {
    pub times: Vec<f64>,
    pub values: Array2<f64>,
}

impl TruthTable {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_writer(std::io::BufWriter::new(file))
    }

    /// Header holds the evaluation times; each row one individual's survival values.
    pub fn to_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.times.iter().map(|t| t.to_string()))?;
        for row in self.values.outer_iter() {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let times = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().parse::<f64>().map_err(|_| Error::Schema(format!("truth header `{h}` is not a time"))))
            .collect::<Result<Vec<f64>>>()?;
        let mut flat = Vec::new();
        let mut rows = 0;
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != times.len() {
                return Err(Error::Validation {
                    row: i + 1,
                    msg: format!("expected {} values, got {}", times.len(), rec.len()),
                });
            }
            for v in rec.iter() {
                flat.push(v.trim().parse::<f64>().map_err(|_| Error::Validation {
                    row: i + 1,
                    msg: format!("non-numeric survival value `{v}`"),
                })?);
            }
            rows += 1;
        }
        let values = Array2::from_shape_vec((rows, times.len()), flat).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(TruthTable { times, values })
    }
}

#[derive(Clone, Debug)]
pub struct SimOutput {
    pub dataset: SurvivalDataset,
    pub truth: TruthTable,
    /// Latent uniforms `x̃` per individual.
    pub latents: Vec<[f64; N_LATENT]>,
    pub design: SimDesign,
}

/// Draws `cfg.n` individuals.
///
/// Covariates, event times and censoring times use three independent
/// sub-streams of `cfg.seed`. Event times come from sequential Bernoulli
/// draws along the fine grid; individuals with neither event nor censoring by
/// `t_max` are censored there.
pub fn generate_dataset(cfg: &SimConfig) -> Result<SimOutput> {
    generate(cfg, true)
}

/// Same draws as [`generate_dataset`] without the truth table, which is
/// `n × fine_points` values.
pub fn generate_observed(cfg: &SimConfig) -> Result<SurvivalDataset> {
    generate(cfg, false).map(|o| o.dataset)
}

fn generate(cfg: &SimConfig, keep_truth: bool) -> Result<SimOutput> {
    cfg.validate()?;
    let design = SimDesign::new(cfg.design_seed, cfg.covs_per_latent);
    let times = cfg.fine_grid();
    let stream = |s: u64| {
        let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
        r.set_stream(s);
        r
    };
    let (mut cov_rng, mut event_rng, mut censor_rng) =
        (stream(COVARIATE_STREAM), stream(EVENT_STREAM), stream(CENSOR_STREAM));

    let p = N_LATENT * cfg.covs_per_latent;
    let mut x = Array2::zeros((cfg.n, p));
    let mut truth = Array2::zeros(if keep_truth { (cfg.n, times.len()) } else { (0, times.len()) });
    let mut durations = Vec::with_capacity(cfg.n);
    let mut events = Vec::with_capacity(cfg.n);
    let mut latents = Vec::with_capacity(cfg.n);
    let log_keep = (1.0 - cfg.censor_hazard).ln();

    for i in 0..cfg.n {
        let mut latent = [0.0; N_LATENT];
        for v in latent.iter_mut() {
            *v = cov_rng.random_range(-1.0..=1.0);
        }
        for j in 0..N_LATENT {
            let block = design.covariates_for(j, latent[j], &mut cov_rng);
            for (k, v) in block.into_iter().enumerate() {
                x[[i, j * cfg.covs_per_latent + k]] = v;
            }
        }
        let gammas = GammaSet::from_latent(&latent);

        if keep_truth {
            for (k, s) in gammas.true_survival(&times).into_iter().enumerate() {
                truth[[i, k]] = s;
            }
        }
        let mut event_step = None;
        for (k, &t) in times.iter().enumerate() {
            if event_rng.random::<f64>() < gammas.hazard(t) {
                event_step = Some(k + 1);
                break;
            }
        }
        // geometric censoring step: P(C > k) = (1 − c)^k
        let censor_step = if cfg.censor_hazard > 0.0 {
            let u = 1.0 - censor_rng.random::<f64>();
            let k = (u.ln() / log_keep).ceil().max(1.0);
            (k <= cfg.fine_points as f64).then_some(k as usize)
        } else {
            None
        };
        let step_time = |k: usize| cfg.t_max * k as f64 / cfg.fine_points as f64;
        let (t, d) = match (event_step, censor_step) {
            (Some(e), Some(c)) if c < e => (step_time(c), false),
            (Some(e), _) => (step_time(e), true),
            (None, Some(c)) => (step_time(c), false),
            (None, None) => (cfg.t_max, false),
        };
        durations.push(t);
        events.push(d);
        latents.push(latent);
    }
    let names = (0..p).map(|j| format!("x{j}")).collect();
    Ok(SimOutput {
        dataset: SurvivalDataset::with_names(durations, events, x, names)?,
        truth: TruthTable { times, values: truth },
        latents,
        design,
    })
}
