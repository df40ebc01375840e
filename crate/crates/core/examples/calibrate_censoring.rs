//! Finds the per-step censoring probability that yields a target censoring
//! fraction (administrative censoring included) by bisection.
//!
//! cargo run --release --example calibrate_censoring -- [target] [n]

use survnet::sim::{generate_observed, SimConfig};

fn fraction(c: f64, n: usize) -> f64 {
    let cfg = SimConfig {
        n,
        seed: 2024,
        censor_hazard: c,
        ..SimConfig::default()
    };
    generate_observed(&cfg).expect("valid config").censoring_fraction()
}

fn main() {
    let mut args = std::env::args().skip(1);
    let target: f64 = args.next().map_or(0.37, |a| a.parse().expect("target"));
    let n: usize = args.next().map_or(100_000, |a| a.parse().expect("n"));

    let floor = fraction(0.0, n);
    println!("administrative censoring only: {floor:.4}");
    if floor >= target {
        println!("target is below the administrative floor");
        return;
    }
    let (mut lo, mut hi) = (0.0, 0.05);
    while fraction(hi, n) < target {
        hi *= 2.0;
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if fraction(mid, n) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    println!("censor_hazard = {c:.6e}  (fraction {:.4})", fraction(c, n));
}
