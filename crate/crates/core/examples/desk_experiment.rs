//! Fits every method on simulated data at m ∈ {5, 25} with both grid schemes
//! and prints test concordance and MSE against the true survival curves.
//!
//! cargo run --release --example desk_experiment

use std::time::Instant;

use survnet::curves::Interpolation;
use survnet::km::KaplanMeierCurve;
use survnet::metrics::{mse_vs_truth, td_concordance, EvalGrid};
use survnet::model::{fit_model, FitSpec, GridScheme, Method};
use survnet::sim::{generate_dataset, SimConfig};

fn main() -> survnet::Result<()> {
    let sim = |n, seed, censor_hazard| SimConfig {
        n,
        seed,
        design_seed: 7,
        censor_hazard,
        ..SimConfig::default()
    };
    let train = generate_dataset(&sim(3000, 1, survnet::sim::DEFAULT_CENSOR_HAZARD))?.dataset;
    let val = generate_dataset(&sim(2000, 2, survnet::sim::DEFAULT_CENSOR_HAZARD))?.dataset;
    let test = generate_dataset(&sim(10000, 3, 0.0))?;
    let times = EvalGrid::new(test.truth.times.clone())?;

    let km = KaplanMeierCurve::fit(train.durations(), train.events())?;
    let base: Vec<f64> = times.times().iter().map(|&t| km.survival_at(t)).collect();
    let mut acc = 0.0;
    for row in test.truth.values.outer_iter() {
        for (s, b) in row.iter().zip(&base) {
            acc += (s - b).powi(2);
        }
    }
    println!("constant KM baseline MSE {:.5}", acc / test.truth.values.len() as f64);

    let start = Instant::now();
    for method in [Method::LogisticHazard, Method::Pmf, Method::PcHazard] {
        for m in [5, 25] {
            for scheme in [GridScheme::Equidistant, GridScheme::KmQuantile] {
                let spec = FitSpec {
                    method,
                    grid_scheme: scheme,
                    grid_size: m,
                    ..FitSpec::default()
                };
                let out = fit_model(&spec, &train, &val)?;
                let interps: &[Interpolation] = if method == Method::PcHazard {
                    &[Interpolation::None]
                } else {
                    &[Interpolation::None, Interpolation::Cdi, Interpolation::Chi]
                };
                for &ip in interps {
                    let curves = out.model.predict_curves(test.dataset.covariates(), ip)?;
                    let c = td_concordance(&curves, test.dataset.durations(), test.dataset.events())?;
                    let mse = mse_vs_truth(&curves, &test.truth.values, &times)?;
                    println!(
                        "{:16} m={m:3} {scheme:?} {ip:?}: best epoch {:2} C={c:.4} MSE={mse:.5}",
                        method.name(),
                        out.log.best_epoch
                    );
                }
            }
        }
    }
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
