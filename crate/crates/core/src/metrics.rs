//! Evaluation metrics: time-dependent concordance, IPCW integrated Brier
//! score, and mean squared error against a known survival function.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::curves::SurvivalCurve;
use crate::error::{Error, Result};
use crate::km::KaplanMeierCurve;
use crate::par::Exec;

/// Increasing evaluation times for the Brier score and MSE.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalGrid {
    times: Vec<f64>,
}

impl EvalGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidArgument("evaluation grid is empty".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("evaluation times must be finite and increasing".into()));
        }
        Ok(EvalGrid { times })
    }

    /// `points` equidistant times from the smallest to the largest duration.
    pub fn from_observed(durations: &[f64], points: usize) -> Result<Self> {
        let lo = durations.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = durations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if durations.is_empty() || points == 0 {
            return Err(Error::InvalidArgument("need durations and at least one point".into()));
        }
        if points == 1 || hi <= lo {
            return Self::new(vec![lo]);
        }
        let step = (hi - lo) / (points - 1) as f64;
        let mut times: Vec<f64> = (0..points).map(|k| lo + step * k as f64).collect();
        times[points - 1] = hi;
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

/// One line of a metric report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub metric: String,
    pub value: f64,
    pub n: usize,
    pub dropped_terms: usize,
}

fn check_lengths(curves: &[SurvivalCurve], durations: &[f64], events: &[bool]) -> Result<()> {
    if curves.len() != durations.len() || durations.len() != events.len() {
        return Err(Error::shape(
            format!("{} curves, durations and events", curves.len()),
            format!("{} durations, {} events", durations.len(), events.len()),
        ));
    }
    if curves.is_empty() {
        return Err(Error::InvalidArgument("no individuals".into()));
    }
    Ok(())
}

pub fn td_concordance(curves: &[SurvivalCurve], durations: &[f64], events: &[bool]) -> Result<f64> {
    td_concordance_with(Exec::default(), curves, durations, events)
}

/// Antolini's time-dependent concordance.
///
/// A pair `(i, j)` is comparable when `d_i = 1` and either `t_i < t_j`, or
/// `t_i = t_j` with `d_j = 0`. It is concordant when `S_i(t_i) < S_j(t_i)`;
/// ties in predicted survival count one half.
pub fn td_concordance_with(
    exec: Exec,
    curves: &[SurvivalCurve],
    durations: &[f64],
    events: &[bool],
) -> Result<f64> {
    check_lengths(curves, durations, events)?;
    let mut order: Vec<usize> = (0..durations.len()).collect();
    order.sort_by(|&a, &b| durations[a].total_cmp(&durations[b]));
    let sorted_t: Vec<f64> = order.iter().map(|&i| durations[i]).collect();

    // (2·concordant + ties, comparable) per individual; integer counts keep
    // the reduction exact and order independent.
    let counts = exec.map_range(durations.len(), |i| {
        if !events[i] {
            return (0u64, 0u64);
        }
        let ti = durations[i];
        let ci = &curves[i];
        let loc = ci.grid().locate(ti);
        let si = ci.at_located(loc);
        let start = sorted_t.partition_point(|&t| t < ti);
        let (mut score, mut comparable) = (0u64, 0u64);
        for &j in &order[start..] {
            if j == i || (durations[j] == ti && events[j]) {
                continue;
            }
            let cj = &curves[j];
            let sj = if cj.same_grid(ci) { cj.at_located(loc) } else { cj.at(ti) };
            comparable += 1;
            if si < sj {
                score += 2;
            } else if si == sj {
                score += 1;
            }
        }
        (score, comparable)
    });
    let (score, comparable) = counts
        .into_iter()
        .fold((0u64, 0u64), |(a, b), (x, y)| (a + x, b + y));
    if comparable == 0 {
        return Err(Error::UndefinedMetric("concordance has no comparable pairs".into()));
    }
    Ok(score as f64 / (2.0 * comparable as f64))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BrierScore {
    /// `BS(t)` at each evaluation time.
    pub scores: Vec<f64>,
    /// Trapezoidal integral of `BS` divided by the grid span.
    pub integrated: f64,
    /// Terms skipped because the censoring survival was 0.
    pub dropped_terms: usize,
}

pub fn integrated_brier_score(
    curves: &[SurvivalCurve],
    durations: &[f64],
    events: &[bool],
    eval: &EvalGrid,
    censor_km: &KaplanMeierCurve,
) -> Result<BrierScore> {
    integrated_brier_score_with(Exec::default(), curves, durations, events, eval, censor_km)
}

/// Brier score with inverse-probability-of-censoring weights:
///
/// `BS(t) = 1/n Σ_i [ S_i(t)²·1{t_i ≤ t, d_i = 1}/G(t_i⁻) + (1 − S_i(t))²·1{t_i > t}/G(t) ]`
///
/// where `G` is the Kaplan-Meier estimate of the censoring distribution.
pub fn integrated_brier_score_with(
    exec: Exec,
    curves: &[SurvivalCurve],
    durations: &[f64],
    events: &[bool],
    eval: &EvalGrid,
    censor_km: &KaplanMeierCurve,
) -> Result<BrierScore> {
    check_lengths(curves, durations, events)?;
    let n = durations.len();
    let g_before: Vec<f64> = durations.iter().map(|&t| censor_km.survival_before(t)).collect();
    let per_time = exec.map_slice(eval.times(), |&t| {
        let g_t = censor_km.survival_at(t);
        let mut sum = 0.0;
        let mut dropped = 0usize;
        for i in 0..n {
            let ti = durations[i];
            if ti <= t && events[i] {
                if g_before[i] > 0.0 {
                    sum += curves[i].at(t).powi(2) / g_before[i];
                } else {
                    dropped += 1;
                }
            } else if ti > t {
                if g_t > 0.0 {
                    sum += (1.0 - curves[i].at(t)).powi(2) / g_t;
                } else {
                    dropped += 1;
                }
            }
        }
        (sum / n as f64, dropped)
    });
    let scores: Vec<f64> = per_time.iter().map(|p| p.0).collect();
    let dropped_terms = per_time.iter().map(|p| p.1).sum();
    let times = eval.times();
    let integrated = if times.len() == 1 {
        scores[0]
    } else {
        let area: f64 = (1..times.len())
            .map(|k| 0.5 * (scores[k] + scores[k - 1]) * (times[k] - times[k - 1]))
            .sum();
        area / (times[times.len() - 1] - times[0])
    };
    Ok(BrierScore {
        scores,
        integrated,
        dropped_terms,
    })
}

pub fn mse_vs_truth(curves: &[SurvivalCurve], truth: &Array2<f64>, times: &EvalGrid) -> Result<f64> {
    mse_vs_truth_with(Exec::default(), curves, truth, times)
}

/// Mean over individuals and times of `(Ŝ_i(t) − S_i(t))²`; `truth` is
/// individuals × times.
pub fn mse_vs_truth_with(
    exec: Exec,
    curves: &[SurvivalCurve],
    truth: &Array2<f64>,
    times: &EvalGrid,
) -> Result<f64> {
    let t = times.times();
    if truth.nrows() != curves.len() || truth.ncols() != t.len() {
        return Err(Error::shape(
            format!("truth {} × {}", curves.len(), t.len()),
            format!("{} × {}", truth.nrows(), truth.ncols()),
        ));
    }
    if curves.is_empty() {
        return Err(Error::InvalidArgument("no individuals".into()));
    }
    let rows = exec.map_range(curves.len(), |i| {
        let c = &curves[i];
        let mut s = 0.0;
        for (k, &tk) in t.iter().enumerate() {
            s += (c.at(tk) - truth[[i, k]]).powi(2);
        }
        s
    });
    Ok(rows.iter().sum::<f64>() / (curves.len() * t.len()) as f64)
}
