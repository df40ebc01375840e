mod common;

use common::{naive_logistic_hazard, naive_pc_hazard, naive_pmf, random_labels, rng, uniform_matrix};
use ndarray::{array, Array2, ArrayView2};
use proptest::prelude::*;
use survnet::grid::DiscreteLabel;
use survnet::losses::{cumsum_head, cumsum_head_backward, nll_logistic_hazard, nll_pc_hazard, nll_pmf, LossOutput};
use survnet::Result;

type LossFn = fn(ArrayView2<f64>, &[DiscreteLabel]) -> Result<LossOutput>;

const LOSSES: [(&str, LossFn); 3] = [
    ("logistic-hazard", nll_logistic_hazard),
    ("pmf", nll_pmf),
    ("pc-hazard", nll_pc_hazard),
];

const FD_TOL: f64 = 1e-6;

/// Central differences of the loss of the perturbed row alone. The batch loss
/// is a row mean, so `∂L/∂φ_ij = (1/n)·∂l_i/∂φ_ij`; differencing `l_i` instead
/// of `L` keeps the roundoff of the other rows out of the quotient.
///
/// The quotient still carries about `ε·|l_i|/eps` of roundoff. Entries below
/// ten times the level where that noise alone reaches the tolerance are
/// compared against that level instead of their own size.
fn max_fd_error(loss: LossFn, phi: &Array2<f64>, labels: &[DiscreteLabel], eps: f64) -> f64 {
    let analytic = loss(phi.view(), labels).unwrap().grad_phi;
    let n = phi.nrows() as f64;
    let mut worst: f64 = 0.0;
    for i in 0..phi.nrows() {
        let mut row = phi.slice(ndarray::s![i..=i, ..]).to_owned();
        let label = &labels[i..=i];
        let value = loss(row.view(), label).unwrap().value;
        let floor = 10.0 * f64::EPSILON * value.abs().max(1.0) / (eps * FD_TOL);
        for j in 0..phi.ncols() {
            let orig = row[[0, j]];
            row[[0, j]] = orig + eps;
            let (hi, up) = (row[[0, j]], loss(row.view(), label).unwrap().value);
            row[[0, j]] = orig - eps;
            let (lo, down) = (row[[0, j]], loss(row.view(), label).unwrap().value);
            row[[0, j]] = orig;
            let numeric = (up - down) / (hi - lo);
            let a = analytic[[i, j]] * n;
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(floor));
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn stable_losses_match_naive_formulas(n in 1usize..=64, m in 1usize..=30, seed in any::<u64>()) {
        let mut r = rng(seed);
        let phi = uniform_matrix(&mut r, n, m, -10.0, 10.0);
        let labels = random_labels(&mut r, n, m);
        let lh = nll_logistic_hazard(phi.view(), &labels).unwrap().value;
        let pmf = nll_pmf(phi.view(), &labels).unwrap().value;
        let pc = nll_pc_hazard(phi.view(), &labels).unwrap().value;
        prop_assert!((lh - naive_logistic_hazard(&phi, &labels)).abs() < 1e-6);
        prop_assert!((pmf - naive_pmf(&phi, &labels)).abs() < 1e-6);
        prop_assert!((pc - naive_pc_hazard(&phi, &labels)).abs() < 1e-6);
    }

    #[test]
    fn gradients_match_central_differences(n in 1usize..=8, m in 1usize..=10, seed in any::<u64>()) {
        let mut r = rng(seed);
        let phi = uniform_matrix(&mut r, n, m, -5.0, 5.0);
        let labels = random_labels(&mut r, n, m);
        for (name, loss) in LOSSES {
            let err = max_fd_error(loss, &phi, &labels, 1e-6);
            prop_assert!(err < FD_TOL, "{name}: relative error {err}");
        }
    }

    #[test]
    fn pmf_shift_of_all_outputs_changes_loss(m in 1usize..=10, c in 0.1f64..3.0, seed in any::<u64>()) {
        let mut r = rng(seed);
        let phi = uniform_matrix(&mut r, 4, m, -2.0, 2.0);
        // an event's likelihood e^{φ_κ+c}/(1 + Σ_j e^{φ_j+c}) is strictly increasing in c
        let labels: Vec<DiscreteLabel> = (0..4)
            .map(|_| DiscreteLabel { idx: rand::Rng::random_range(&mut r, 1..=m), event: true, frac: 1.0 })
            .collect();
        let base = nll_pmf(phi.view(), &labels).unwrap().value;
        let shifted = nll_pmf((&phi + c).view(), &labels).unwrap().value;
        prop_assert!((base - shifted).abs() > 1e-9);
    }

    #[test]
    fn cumsum_backward_is_the_adjoint(m in 1usize..=12, seed in any::<u64>()) {
        // <cumsum(ψ), g> = <ψ, cumsumᵀ(g)>
        let mut r = rng(seed);
        let psi = uniform_matrix(&mut r, 3, m, -1.0, 1.0);
        let g = uniform_matrix(&mut r, 3, m, -1.0, 1.0);
        let lhs = (&cumsum_head(psi.view()) * &g).sum();
        let rhs = (&psi * &cumsum_head_backward(g.view())).sum();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }
}

#[test]
fn extreme_logits_stay_finite() {
    let m = 4;
    let labels = vec![
        DiscreteLabel { idx: 2, event: true, frac: 0.5 },
        DiscreteLabel { idx: 4, event: false, frac: 1.0 },
        DiscreteLabel { idx: 1, event: true, frac: 0.3 },
    ];
    for v in [50.0, -50.0, 800.0, -800.0] {
        let phi = Array2::from_elem((3, m), v);
        for (name, loss) in LOSSES {
            let out = loss(phi.view(), &labels).unwrap();
            assert!(out.value.is_finite(), "{name} at {v}");
            assert!(out.grad_phi.iter().all(|g| g.is_finite()), "{name} gradient at {v}");
        }
    }
}

#[test]
fn out_of_range_labels_are_rejected() {
    let phi = array![[0.0, 0.0]];
    let too_far = [DiscreteLabel { idx: 3, event: true, frac: 1.0 }];
    for (name, loss) in LOSSES {
        assert!(loss(phi.view(), &too_far).is_err(), "{name}");
    }
    let event_at_zero = [DiscreteLabel { idx: 0, event: true, frac: 0.0 }];
    assert!(nll_pmf(phi.view(), &event_at_zero).is_err());
}
