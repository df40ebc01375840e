use std::f64::consts::PI;

use ndarray::Zip;

use super::{Gradients, Mlp};

/// Cosine-annealed learning rate with warm restarts.
///
/// Cycle `k` lasts `cycle_len · cycle_mult^k` epochs and starts at
/// `initial_lr · decay^k`, annealing towards zero over the cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct WarmRestarts {
    pub initial_lr: f64,
    pub cycle_len: usize,
    pub cycle_mult: usize,
    pub decay: f64,
}

impl WarmRestarts {
    /// `(cycle index, start epoch, length)` of the cycle containing `epoch`.
    fn cycle(&self, epoch: f64) -> (u32, f64, f64) {
        let mut k = 0;
        let mut start = 0.0;
        let mut len = self.cycle_len as f64;
        while epoch >= start + len {
            start += len;
            len *= self.cycle_mult as f64;
            k += 1;
        }
        (k, start, len)
    }

    /// Learning rate at a fractional epoch position (`epoch + batch/n_batches`).
    pub fn lr_at(&self, epoch: f64) -> f64 {
        let (k, start, len) = self.cycle(epoch);
        let peak = self.initial_lr * self.decay.powi(k as i32);
        peak * 0.5 * (1.0 + (PI * (epoch - start) / len).cos())
    }

    /// Epoch indices at which a restart happens, below `max_epochs`.
    pub fn restart_epochs(&self, max_epochs: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut at = self.cycle_len;
        let mut len = self.cycle_len;
        while at < max_epochs {
            out.push(at);
            len *= self.cycle_mult;
            at += len;
        }
        out
    }
}

/// Adaptive moment estimation with decoupled weight decay.
#[derive(Clone, Debug)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    first: Gradients,
    second: Gradients,
    step: u64,
}

impl Adam {
    pub fn new(net: &Mlp, weight_decay: f64) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            first: net.zero_grads(),
            second: net.zero_grads(),
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients, lr: f64) {
        self.step += 1;
        let (b1, b2, eps, wd) = (self.beta1, self.beta2, self.eps, self.weight_decay);
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * (m_hat / (v_hat.sqrt() + eps) + wd * *p);
        };
        let layers = net.layers_mut();
        for (l, layer) in layers.iter_mut().enumerate() {
            let (m, v, g) = (&mut self.first.layers[l], &mut self.second.layers[l], &grads.layers[l]);
            Zip::from(&mut layer.weight)
                .and(&mut m.weight)
                .and(&mut v.weight)
                .and(&g.weight)
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut layer.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
    }
}
