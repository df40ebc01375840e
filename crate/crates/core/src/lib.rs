//! Neural-network survival prediction for right-censored data.
//!
//! Three parametrizations share one network `φ(x) ∈ ℝ^m` over a time grid
//! `0 = τ₀ < … < τ_m`:
//!
//! - **PMF**: softmax over the `m` intervals plus a "survives past `τ_m`" class;
//! - **Logistic-Hazard**: discrete hazards `sigmoid(φ_j)` with a Bernoulli likelihood;
//! - **PC-Hazard**: continuous time, piecewise-constant hazard `softplus(φ_j)/Δτ_j`.
//!
//! The discrete methods produce step curves that can be interpolated with
//! constant density or constant hazard between grid points. Grids are
//! equidistant or placed at Kaplan-Meier quantiles. Metrics include the
//! time-dependent concordance, the IPCW integrated Brier score and the MSE
//! against a known survival function, which the bundled simulator provides.
//!
//! Batch loops (curve prediction, metrics) run on rayon with the default
//! `parallel` feature; without it everything runs sequentially with
//! identical results.

pub mod cli;
pub mod curves;
pub mod dataset;
pub mod error;
pub mod grid;
pub mod km;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod net;
pub mod par;
pub mod sim;

pub use curves::{Interpolation, SurvivalCurve};
pub use dataset::{CsvSchema, Standardizer, SurvivalDataset, SurvivalRecord};
pub use error::{Error, Result};
pub use grid::{DiscreteLabel, TimeGrid};
pub use km::KaplanMeierCurve;
pub use model::{fit_model, FitSpec, GridScheme, Method, SurvivalModel};
pub use net::{Mlp, TrainConfig};
pub use par::Exec;
