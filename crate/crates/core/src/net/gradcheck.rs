use ndarray::ArrayView2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Gradients, Mlp};
use crate::error::Result;
use crate::grid::DiscreteLabel;
use crate::losses::LossOutput;

/// Denominator floor for relative errors, so vanishing gradients compare absolutely.
const REL_FLOOR: f64 = 1e-6;

/// Largest coordinate-wise relative error between reverse-mode parameter
/// gradients and central finite differences with step `eps`. The network
/// is evaluated without dropout.
pub fn gradient_check<F>(net: &Mlp, loss: F, x: ArrayView2<f64>, labels: &[DiscreteLabel], eps: f64) -> Result<f64>
where
    F: Fn(ArrayView2<f64>, &[DiscreteLabel]) -> Result<LossOutput>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let eval_net = Mlp::from_layers(net.layers().to_vec(), 0.0)?;
    let (phi, tape) = eval_net.forward_train(x, &mut rng)?;
    let out = loss(phi.view(), labels)?;
    let analytic = eval_net.backward(&tape, &out.grad_phi);
    compare_gradients(&eval_net, &analytic, eps, |n| {
        let phi = n.predict(x)?;
        Ok(loss(phi.view(), labels)?.value)
    })
}

/// Compares `analytic` against central differences of `objective`.
pub fn compare_gradients<F>(net: &Mlp, analytic: &Gradients, eps: f64, objective: F) -> Result<f64>
where
    F: Fn(&Mlp) -> Result<f64>,
{
    let analytic = analytic.flat();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (k, &a) in analytic.iter().enumerate() {
        let orig = probe.param(k);
        probe.set_param(k, orig + eps);
        let up = objective(&probe)?;
        probe.set_param(k, orig - eps);
        let down = objective(&probe)?;
        probe.set_param(k, orig);
        let numeric = (up - down) / (2.0 * eps);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
        worst = worst.max(rel);
    }
    Ok(worst)
}
