mod common;

use std::sync::Arc;

use common::{direct_ibs, pair_concordance, rng};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use survnet::metrics::{integrated_brier_score, integrated_brier_score_with, td_concordance, td_concordance_with, EvalGrid};
use survnet::{Exec, KaplanMeierCurve, SurvivalCurve, TimeGrid};

fn censor_km(durations: &[f64], events: &[bool]) -> KaplanMeierCurve {
    let flipped: Vec<bool> = events.iter().map(|e| !e).collect();
    KaplanMeierCurve::fit(durations, &flipped).unwrap()
}

/// Durations on a coarse lattice so ties occur; curves on a shared grid.
fn random_problem(r: &mut impl Rng, n: usize, m: usize) -> (Vec<SurvivalCurve>, Vec<f64>, Vec<bool>) {
    let grid = Arc::new(TimeGrid::equidistant(10.0, m).unwrap());
    let curves = (0..n)
        .map(|_| {
            let h: Vec<f64> = (0..m).map(|_| r.random_range(0.0..0.5)).collect();
            SurvivalCurve::from_hazards(grid.clone(), &h).unwrap()
        })
        .collect();
    let durations = (0..n).map(|_| r.random_range(1..=20) as f64 * 0.5).collect();
    let mut events: Vec<bool> = (0..n).map(|_| r.random_bool(0.7)).collect();
    events[0] = true;
    (curves, durations, events)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn concordance_matches_pair_enumeration(n in 2usize..40, m in 1usize..8, seed in any::<u64>()) {
        let mut r = rng(seed);
        let (curves, d, e) = random_problem(&mut r, n, m);
        let oracle = pair_concordance(&curves, &d, &e);
        match td_concordance(&curves, &d, &e) {
            Ok(c) => prop_assert!((c - oracle).abs() < 1e-12, "{c} vs {oracle}"),
            Err(_) => prop_assert!(oracle.is_nan()),
        }
    }

    #[test]
    fn ibs_matches_direct_summation(n in 2usize..30, m in 1usize..8, seed in any::<u64>()) {
        let mut r = rng(seed);
        let (curves, d, e) = random_problem(&mut r, n, m);
        let eval = EvalGrid::from_observed(&d, 17).unwrap();
        let bs = integrated_brier_score(&curves, &d, &e, &eval, &censor_km(&d, &e)).unwrap();
        if bs.dropped_terms == 0 {
            let oracle = direct_ibs(&curves, &d, &e, eval.times());
            prop_assert!((bs.integrated - oracle).abs() < 1e-12, "{} vs {oracle}", bs.integrated);
        }
    }

    #[test]
    fn metrics_ignore_individual_order(n in 3usize..30, seed in any::<u64>()) {
        let mut r = rng(seed);
        let (curves, d, e) = random_problem(&mut r, n, 5);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let pc: Vec<SurvivalCurve> = perm.iter().map(|&i| curves[i].clone()).collect();
        let pd: Vec<f64> = perm.iter().map(|&i| d[i]).collect();
        let pe: Vec<bool> = perm.iter().map(|&i| e[i]).collect();
        if let Ok(c) = td_concordance(&curves, &d, &e) {
            prop_assert_eq!(c, td_concordance(&pc, &pd, &pe).unwrap());
        }
        let eval = EvalGrid::from_observed(&d, 10).unwrap();
        let a = integrated_brier_score(&curves, &d, &e, &eval, &censor_km(&d, &e)).unwrap();
        let b = integrated_brier_score(&pc, &pd, &pe, &eval, &censor_km(&pd, &pe)).unwrap();
        prop_assert!((a.integrated - b.integrated).abs() < 1e-12);
    }

    #[test]
    fn concordance_ignores_monotone_transforms(n in 3usize..30, seed in any::<u64>()) {
        // squaring every survival value: (1 − h')= (1 − h)² keeps the order at each time
        let mut r = rng(seed);
        let grid = Arc::new(TimeGrid::equidistant(10.0, 4).unwrap());
        let hs: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| r.random_range(0.0..0.6)).collect()).collect();
        let d: Vec<f64> = (0..n).map(|_| r.random_range(1..=20) as f64 * 0.5).collect();
        let mut e: Vec<bool> = (0..n).map(|_| r.random_bool(0.7)).collect();
        e[0] = true;
        let base: Vec<SurvivalCurve> = hs.iter().map(|h| SurvivalCurve::from_hazards(grid.clone(), h).unwrap()).collect();
        let squared: Vec<SurvivalCurve> = hs
            .iter()
            .map(|h| {
                let h2: Vec<f64> = h.iter().map(|v| 1.0 - (1.0 - v) * (1.0 - v)).collect();
                SurvivalCurve::from_hazards(grid.clone(), &h2).unwrap()
            })
            .collect();
        if let Ok(c) = td_concordance(&base, &d, &e) {
            prop_assert_eq!(c, td_concordance(&squared, &d, &e).unwrap());
        }
    }
}

#[test]
fn five_individual_censored_example() {
    let grid = Arc::new(TimeGrid::new(vec![0.0, 2.0, 4.0, 6.0]).unwrap());
    let hazards = [
        [0.3, 0.2, 0.5],
        [0.1, 0.1, 0.1],
        [0.5, 0.4, 0.9],
        [0.05, 0.3, 0.2],
        [0.2, 0.6, 0.3],
    ];
    let curves: Vec<SurvivalCurve> = hazards
        .iter()
        .map(|h| SurvivalCurve::from_hazards(grid.clone(), h).unwrap().interpolated(survnet::Interpolation::Cdi))
        .collect();
    let d = [1.5, 5.0, 2.5, 3.0, 4.5];
    let e = [true, false, true, false, true];
    let eval = EvalGrid::new(vec![1.0, 2.0, 2.75, 3.5, 4.0]).unwrap();
    let bs = integrated_brier_score(&curves, &d, &e, &eval, &censor_km(&d, &e)).unwrap();
    assert_eq!(bs.dropped_terms, 0);
    let oracle = direct_ibs(&curves, &d, &e, eval.times());
    assert!((bs.integrated - oracle).abs() < 1e-12, "{} vs {oracle}", bs.integrated);
    let c = td_concordance(&curves, &d, &e).unwrap();
    assert!((c - pair_concordance(&curves, &d, &e)).abs() < 1e-12);
}

#[test]
fn parallel_and_sequential_agree_exactly() {
    let mut r = rng(5);
    let (curves, d, e) = random_problem(&mut r, 300, 6);
    let eval = EvalGrid::from_observed(&d, 50).unwrap();
    let km = censor_km(&d, &e);
    assert_eq!(
        td_concordance_with(Exec::Sequential, &curves, &d, &e).unwrap(),
        td_concordance_with(Exec::Parallel, &curves, &d, &e).unwrap()
    );
    assert_eq!(
        integrated_brier_score_with(Exec::Sequential, &curves, &d, &e, &eval, &km).unwrap(),
        integrated_brier_score_with(Exec::Parallel, &curves, &d, &e, &eval, &km).unwrap()
    );
}
