//! Independent reference implementations used by the integration tests.
//! They follow the textbook formulas directly, without the numerical
//! safeguards of the library.

#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use survnet::grid::DiscreteLabel;
use survnet::SurvivalCurve;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(lo..hi))
}

/// Labels valid for every loss: events have `idx ≥ 1` and positive fraction.
pub fn random_labels(rng: &mut impl Rng, n: usize, m: usize) -> Vec<DiscreteLabel> {
    (0..n)
        .map(|_| {
            let event = rng.random_bool(0.6);
            let idx = if event { rng.random_range(1..=m) } else { rng.random_range(0..=m) };
            let frac = if idx == 0 { 0.0 } else { rng.random_range(0.05..=1.0) };
            DiscreteLabel { idx, event, frac }
        })
        .collect()
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Bernoulli likelihood over the hazards `h_j = 1/(1 + e^{−φ_j})`.
pub fn naive_logistic_hazard(phi: &Array2<f64>, labels: &[DiscreteLabel]) -> f64 {
    let mut total = 0.0;
    for (i, l) in labels.iter().enumerate() {
        for j in 1..=l.idx {
            let h = sig(phi[[i, j - 1]]);
            let y = if l.event && j == l.idx { 1.0 } else { 0.0 };
            total -= y * h.ln() + (1.0 - y) * (1.0 - h).ln();
        }
    }
    total / labels.len() as f64
}

/// Softmax over `(φ_1, …, φ_m, 0)`; event → `−log f(τ_κ)`, censored → `−log S(τ_κ)`.
pub fn naive_pmf(phi: &Array2<f64>, labels: &[DiscreteLabel]) -> f64 {
    let m = phi.ncols();
    let mut total = 0.0;
    for (i, l) in labels.iter().enumerate() {
        let e: Vec<f64> = (0..=m).map(|j| if j < m { phi[[i, j]].exp() } else { 1.0 }).collect();
        let z: f64 = e.iter().sum();
        if l.event {
            total -= (e[l.idx - 1] / z).ln();
        } else {
            total -= (e[l.idx..].iter().sum::<f64>() / z).ln();
        }
    }
    total / labels.len() as f64
}

/// `−(d·log η̃_κ − η̃_κ·ρ − Σ_{j<κ} η̃_j)` with `η̃ = log(1 + e^φ)`.
pub fn naive_pc_hazard(phi: &Array2<f64>, labels: &[DiscreteLabel]) -> f64 {
    let mut total = 0.0;
    for (i, l) in labels.iter().enumerate() {
        if l.idx == 0 {
            continue;
        }
        let eta = |j: usize| (1.0 + phi[[i, j - 1]].exp()).ln();
        let mut ll = -eta(l.idx) * l.frac;
        for j in 1..l.idx {
            ll -= eta(j);
        }
        if l.event {
            ll += eta(l.idx).ln();
        }
        total -= ll;
    }
    total / labels.len() as f64
}

/// Kaplan-Meier by definition: for each candidate time, multiply
/// `1 − d(t)/n(t)` over all distinct event times `≤ t`, counting directly.
pub fn brute_force_km(durations: &[f64], events: &[bool], t: f64) -> f64 {
    let mut times: Vec<f64> = durations
        .iter()
        .zip(events)
        .filter(|(_, &e)| e)
        .map(|(&d, _)| d)
        .filter(|&d| d <= t)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut s = 1.0;
    for &u in &times {
        let at_risk = durations.iter().filter(|&&d| d >= u).count() as f64;
        let deaths = durations.iter().zip(events).filter(|(&d, &e)| e && d == u).count() as f64;
        s *= 1.0 - deaths / at_risk;
    }
    s
}

/// Antolini concordance by enumerating every ordered pair.
pub fn pair_concordance(curves: &[SurvivalCurve], durations: &[f64], events: &[bool]) -> f64 {
    let n = durations.len();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        if !events[i] {
            continue;
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            let comparable = durations[i] < durations[j] || (durations[i] == durations[j] && !events[j]);
            if !comparable {
                continue;
            }
            den += 1.0;
            let (si, sj) = (curves[i].at(durations[i]), curves[j].at(durations[i]));
            if si < sj {
                num += 1.0;
            } else if si == sj {
                num += 0.5;
            }
        }
    }
    num / den
}

/// Censoring survival `G` from a brute-force Kaplan-Meier with flipped indicators.
pub fn censor_survival(durations: &[f64], events: &[bool], t: f64, left_limit: bool) -> f64 {
    let flipped: Vec<bool> = events.iter().map(|e| !e).collect();
    if left_limit {
        // largest value strictly before t
        let prev = durations.iter().copied().filter(|&d| d < t).fold(f64::NEG_INFINITY, f64::max);
        if prev.is_finite() {
            brute_force_km(durations, &flipped, prev)
        } else {
            1.0
        }
    } else {
        brute_force_km(durations, &flipped, t)
    }
}

/// IPCW Brier score by direct summation, integrated with the trapezoid rule.
pub fn direct_ibs(curves: &[SurvivalCurve], durations: &[f64], events: &[bool], times: &[f64]) -> f64 {
    let n = durations.len() as f64;
    let bs: Vec<f64> = times
        .iter()
        .map(|&t| {
            let mut s = 0.0;
            for i in 0..durations.len() {
                let p = curves[i].at(t);
                if durations[i] <= t && events[i] {
                    s += p * p / censor_survival(durations, events, durations[i], true);
                } else if durations[i] > t {
                    s += (1.0 - p) * (1.0 - p) / censor_survival(durations, events, t, false);
                }
            }
            s / n
        })
        .collect();
    if times.len() == 1 {
        return bs[0];
    }
    let mut area = 0.0;
    for k in 1..times.len() {
        area += 0.5 * (bs[k] + bs[k - 1]) * (times[k] - times[k - 1]);
    }
    area / (times[times.len() - 1] - times[0])
}
