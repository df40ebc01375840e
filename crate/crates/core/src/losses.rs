//! Mean negative log-likelihoods of the three parametrizations, with their
//! gradients with respect to the network output `φ` (batch × m).
//!
//! All three losses are written to stay finite for any finite `φ`.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::grid::DiscreteLabel;

/// Below this logit, `log(softplus(φ))` is replaced by `φ`. The relative
/// error of the approximation there is below 1e-7.
pub const LOG_SOFTPLUS_THRESHOLD: f64 = -15.0;

/// Interval fraction substituted for events observed exactly on a cut point
/// at the start of their interval (`ρ = 0`).
pub const MIN_EVENT_FRAC: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct LossOutput {
    /// Mean over the batch.
    pub value: f64,
    /// `∂value/∂φ`, same shape as `φ`.
    pub grad_phi: Array2<f64>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `log(softplus(x))`, linearized for very negative `x`.
pub fn log_softplus(x: f64) -> f64 {
    if x < LOG_SOFTPLUS_THRESHOLD {
        x
    } else {
        softplus(x).ln()
    }
}

fn check_batch(phi: &ArrayView2<f64>, labels: &[DiscreteLabel]) -> Result<()> {
    if phi.nrows() != labels.len() {
        return Err(Error::shape(format!("{} labels", phi.nrows()), labels.len()));
    }
    if phi.nrows() == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let m = phi.ncols();
    if let Some((i, l)) = labels.iter().enumerate().find(|(_, l)| l.idx > m) {
        return Err(Error::LabelOutOfRange(format!(
            "record {i}: index {} exceeds interval count {m}",
            l.idx
        )));
    }
    Ok(())
}

/// Bernoulli likelihood of the discrete hazards `h_j = sigmoid(φ_j)`, summed
/// over `j = 1..=idx` with target 1 only at `idx` for events.
///
/// Each term uses the logit form `max(φ,0) − φ·y + log(1 + e^{−|φ|})`.
pub fn nll_logistic_hazard(phi: ArrayView2<f64>, labels: &[DiscreteLabel]) -> Result<LossOutput> {
    check_batch(&phi, labels)?;
    let n = labels.len() as f64;
    let mut grad = Array2::zeros(phi.raw_dim());
    let mut total = 0.0;
    for (i, l) in labels.iter().enumerate() {
        for j in 0..l.idx {
            let x = phi[[i, j]];
            let y = if l.event && j + 1 == l.idx { 1.0 } else { 0.0 };
            total += x.max(0.0) - x * y + (-x.abs()).exp().ln_1p();
            grad[[i, j]] = (sigmoid(x) - y) / n;
        }
    }
    Ok(LossOutput {
        value: total / n,
        grad_phi: grad,
    })
}

/// Likelihood of the probability mass parametrization: softmax over
/// `(φ_1, …, φ_m, 0)`, the last class meaning survival past `τ_m`.
///
/// Uses the log-sum-exp shift `γ_i = max_j φ_j` (including the fixed zero).
pub fn nll_pmf(phi: ArrayView2<f64>, labels: &[DiscreteLabel]) -> Result<LossOutput> {
    check_batch(&phi, labels)?;
    let m = phi.ncols();
    let n = labels.len() as f64;
    let mut grad = Array2::zeros(phi.raw_dim());
    let mut total = 0.0;
    let mut shifted = vec![0.0; m + 1];
    for (i, l) in labels.iter().enumerate() {
        if l.event && l.idx == 0 {
            return Err(Error::LabelOutOfRange(format!("record {i}: event with index 0")));
        }
        let row = phi.row(i);
        let gamma = row.iter().copied().fold(0.0, f64::max);
        for j in 0..m {
            shifted[j] = (row[j] - gamma).exp();
        }
        shifted[m] = (-gamma).exp();
        let sum_all: f64 = shifted.iter().sum();
        let log_all = sum_all.ln();

        if l.event {
            // −(φ_κ − γ) + log Σ_j e^{φ_j − γ}
            total += -(row[l.idx - 1] - gamma) + log_all;
            for j in 0..m {
                grad[[i, j]] = shifted[j] / sum_all;
            }
            grad[[i, l.idx - 1]] -= 1.0;
        } else {
            // log Σ_j e^{φ_j} − log Σ_{j>κ} e^{φ_j}; the tail gets its own
            // shift so it cannot underflow when γ comes from the head.
            let gamma_tail = row.iter().skip(l.idx).copied().fold(0.0, f64::max);
            let mut tail_w = vec![0.0; m + 1 - l.idx];
            for (w, &p) in tail_w.iter_mut().zip(row.iter().skip(l.idx)) {
                *w = (p - gamma_tail).exp();
            }
            tail_w[m - l.idx] = (-gamma_tail).exp();
            let sum_tail: f64 = tail_w.iter().sum();
            total += (gamma + log_all) - (gamma_tail + sum_tail.ln());
            for j in 0..m {
                let t = if j >= l.idx { tail_w[j - l.idx] / sum_tail } else { 0.0 };
                grad[[i, j]] = shifted[j] / sum_all - t;
            }
        }
        for j in 0..m {
            grad[[i, j]] /= n;
        }
    }
    Ok(LossOutput {
        value: total / n,
        grad_phi: grad,
    })
}

/// Continuous-time likelihood with piecewise-constant hazard.
///
/// `η̃_j = softplus(φ_j)` is the hazard integrated over interval `j`; each
/// record contributes `−(d·log η̃_κ − η̃_κ·ρ − Σ_{j<κ} η̃_j)`. Labels must come
/// from [`TimeGrid::interval_labels`](crate::grid::TimeGrid::interval_labels).
pub fn nll_pc_hazard(phi: ArrayView2<f64>, labels: &[DiscreteLabel]) -> Result<LossOutput> {
    check_batch(&phi, labels)?;
    let n = labels.len() as f64;
    let mut grad = Array2::zeros(phi.raw_dim());
    let mut total = 0.0;
    for (i, l) in labels.iter().enumerate() {
        if !(0.0..=1.0).contains(&l.frac) {
            return Err(Error::LabelOutOfRange(format!("record {i}: fraction {} outside [0, 1]", l.frac)));
        }
        if l.idx == 0 {
            if l.event || l.frac > 0.0 {
                return Err(Error::LabelOutOfRange(format!(
                    "record {i}: interval index 0 with positive time"
                )));
            }
            continue;
        }
        let k = l.idx - 1;
        for j in 0..k {
            total += softplus(phi[[i, j]]);
            grad[[i, j]] = sigmoid(phi[[i, j]]) / n;
        }
        let x = phi[[i, k]];
        let eta = softplus(x);
        let frac = if l.event { l.frac.max(MIN_EVENT_FRAC) } else { l.frac };
        total += eta * frac;
        let mut g = sigmoid(x) * frac;
        if l.event {
            total -= log_softplus(x);
            g -= if x < LOG_SOFTPLUS_THRESHOLD { 1.0 } else { sigmoid(x) / eta };
        }
        grad[[i, k]] = g / n;
    }
    Ok(LossOutput {
        value: total / n,
        grad_phi: grad,
    })
}

/// Reverse cumulative sum `φ_j = Σ_{k ≥ j} ψ_k`, turning a multi-task
/// logistic regression head into the PMF parametrization.
pub fn cumsum_head(psi: ArrayView2<f64>) -> Array2<f64> {
    let mut phi = psi.to_owned();
    let m = phi.ncols();
    for mut row in phi.rows_mut() {
        for j in (0..m.saturating_sub(1)).rev() {
            row[j] += row[j + 1];
        }
    }
    phi
}

/// Pulls a gradient with respect to `φ` back through [`cumsum_head`]:
/// `∂/∂ψ_k = Σ_{j ≤ k} ∂/∂φ_j`.
pub fn cumsum_head_backward(grad_phi: ArrayView2<f64>) -> Array2<f64> {
    let mut g = grad_phi.to_owned();
    for mut row in g.rows_mut() {
        for j in 1..row.len() {
            row[j] += row[j - 1];
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn lab(idx: usize, event: bool, frac: f64) -> DiscreteLabel {
        DiscreteLabel { idx, event, frac }
    }

    fn logit(p: f64) -> f64 {
        (p / (1.0 - p)).ln()
    }

    fn inv_softplus(y: f64) -> f64 {
        y.exp_m1().ln()
    }

    #[test]
    fn logistic_hazard_examples() {
        let phi = array![[logit(0.1), logit(0.2), logit(0.5)]];
        let out = nll_logistic_hazard(phi.view(), &[lab(3, true, 1.0)]).unwrap();
        let want = -(0.9f64.ln() + 0.8f64.ln() + 0.5f64.ln());
        assert_abs_diff_eq!(out.value, want, epsilon = 1e-12);
        assert_abs_diff_eq!(out.value, 1.0217, epsilon = 1e-4);

        let out = nll_logistic_hazard(phi.view(), &[lab(0, false, 0.0)]).unwrap();
        assert_eq!(out.value, 0.0);
        assert!(out.grad_phi.iter().all(|&g| g == 0.0));

        let phi = array![[-50.0, 50.0]];
        let out = nll_logistic_hazard(phi.view(), &[lab(2, true, 1.0)]).unwrap();
        assert!(out.value.is_finite() && out.value < 1e-20);
    }

    #[test]
    fn pmf_examples() {
        let phi = array![[0.0, 0.0]];
        let ev = nll_pmf(phi.view(), &[lab(1, true, 1.0)]).unwrap();
        assert_abs_diff_eq!(ev.value, 3f64.ln(), epsilon = 1e-12);
        let ce = nll_pmf(phi.view(), &[lab(1, false, 1.0)]).unwrap();
        assert_abs_diff_eq!(ce.value, -(2.0f64 / 3.0).ln(), epsilon = 1e-12);
        let big = nll_pmf(array![[50.0, 0.0]].view(), &[lab(1, true, 1.0)]).unwrap();
        assert!(big.value.is_finite() && big.value < 1e-20);
        assert!(nll_pmf(phi.view(), &[lab(0, true, 1.0)]).is_err());
        assert!(nll_pmf(phi.view(), &[lab(3, false, 1.0)]).is_err());
    }

    #[test]
    fn pmf_normalizes_over_m_plus_one_classes() {
        let labels = [lab(1, true, 1.0), lab(2, false, 1.0)];
        let phi = array![[0.3, -0.2], [1.0, 0.5]];
        let base = nll_pmf(phi.view(), &labels).unwrap().value;
        let shifted = nll_pmf((&phi + 0.7).view(), &labels).unwrap().value;
        assert!((base - shifted).abs() > 1e-3);
    }

    #[test]
    fn pc_hazard_examples() {
        let phi = array![[inv_softplus(0.5), inv_softplus(1.0)]];
        let out = nll_pc_hazard(phi.view(), &[lab(2, true, 0.5)]).unwrap();
        assert_abs_diff_eq!(out.value, 1.0, epsilon = 1e-12);

        let out = nll_pc_hazard(array![[inv_softplus(2.0)]].view(), &[lab(1, false, 1.0)]).unwrap();
        assert_abs_diff_eq!(out.value, 2.0, epsilon = 1e-12);

        let out = nll_pc_hazard(array![[-800.0]].view(), &[lab(1, true, 0.5)]).unwrap();
        assert!(out.value.is_finite());
        assert_abs_diff_eq!(out.value, 800.0, epsilon = 1e-9);
        assert_eq!((-800.0f64).exp().ln_1p().ln(), f64::NEG_INFINITY);
    }

    #[test]
    fn pc_hazard_zero_fraction_event_is_shifted() {
        let out = nll_pc_hazard(array![[0.0]].view(), &[lab(1, true, 0.0)]).unwrap();
        let eta = 2f64.ln();
        assert_abs_diff_eq!(out.value, -(eta.ln() - eta * MIN_EVENT_FRAC), epsilon = 1e-12);
        assert!(nll_pc_hazard(array![[0.0]].view(), &[lab(0, true, 0.0)]).is_err());
        assert_eq!(nll_pc_hazard(array![[0.0]].view(), &[lab(0, false, 0.0)]).unwrap().value, 0.0);
    }

    #[test]
    fn cumsum_examples() {
        assert_eq!(cumsum_head(array![[1.0, 2.0, 3.0]].view()), array![[6.0, 5.0, 3.0]]);
        assert_eq!(cumsum_head(Array2::zeros((2, 3)).view()), Array2::<f64>::zeros((2, 3)));
        // backward is the adjoint: <cumsum(ψ), g> = <ψ, backward(g)>
        let psi = array![[0.5, -1.0, 2.0]];
        let g = array![[1.0, 3.0, -2.0]];
        let lhs = (cumsum_head(psi.view()) * &g).sum();
        let rhs = (&psi * &cumsum_head_backward(g.view())).sum();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn batch_shape_checked() {
        assert!(nll_logistic_hazard(Array2::zeros((2, 3)).view(), &[lab(1, true, 1.0)]).is_err());
        assert!(nll_logistic_hazard(Array2::zeros((1, 3)).view(), &[lab(4, true, 1.0)]).is_err());
    }
}
