use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Adam, Mlp, WarmRestarts};
use crate::error::{Error, Result};
use crate::grid::DiscreteLabel;
use crate::losses::LossOutput;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Length of the first learning-rate cycle, in epochs.
    pub cycle_len: usize,
    pub cycle_mult: usize,
    /// Factor applied to the peak learning rate at every restart.
    pub lr_decay: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 256,
            learning_rate: 0.01,
            cycle_len: 1,
            cycle_mult: 2,
            lr_decay: 0.8,
            weight_decay: 0.0,
            max_epochs: 63,
            patience: 15,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = self.batch_size > 0
            && self.learning_rate > 0.0
            && self.cycle_len > 0
            && self.cycle_mult > 0
            && self.max_epochs > 0
            && self.patience > 0;
        if !positive || !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid training configuration {self:?}")));
        }
        Ok(())
    }

    pub fn schedule(&self) -> WarmRestarts {
        WarmRestarts {
            initial_lr: self.learning_rate,
            cycle_len: self.cycle_len,
            cycle_mult: self.cycle_mult,
            decay: self.lr_decay,
        }
    }
}

/// Covariates with their labels.
#[derive(Clone, Debug)]
pub struct TrainingSet {
    pub x: Array2<f64>,
    pub labels: Vec<DiscreteLabel>,
}

impl TrainingSet {
    pub fn new(x: Array2<f64>, labels: Vec<DiscreteLabel>) -> Result<Self> {
        if x.nrows() != labels.len() || labels.is_empty() {
            return Err(Error::shape(format!("{} labels", x.nrows()), labels.len()));
        }
        Ok(TrainingSet { x, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    /// Epoch whose parameters were kept; 0 means the initial network.
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

/// Minibatch training with Adam and warm restarts, keeping the parameters
/// with the lowest validation loss. Deterministic given `cfg.seed`.
pub fn fit<F>(net: &Mlp, loss: F, train: &TrainingSet, val: &TrainingSet, cfg: &TrainConfig) -> Result<(Mlp, TrainLog)>
where
    F: Fn(ArrayView2<f64>, &[DiscreteLabel]) -> Result<LossOutput>,
{
    cfg.validate()?;
    let m = net.output_dim();
    if let Some(l) = train.labels.iter().chain(&val.labels).find(|l| l.idx > m) {
        return Err(Error::LabelOutOfRange(format!("label index {} exceeds network outputs {m}", l.idx)));
    }
    let schedule = cfg.schedule();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = net.clone();
    let mut opt = Adam::new(&net, cfg.weight_decay);

    let val_loss = |n: &Mlp| -> Result<f64> { Ok(loss(n.predict(val.x.view())?.view(), &val.labels)?.value) };
    let mut best = net.clone();
    let mut log = TrainLog {
        epochs: Vec::new(),
        best_epoch: 0,
        best_val_loss: val_loss(&net)?,
    };

    let n = train.len();
    let n_batches = n.div_ceil(cfg.batch_size);
    let mut order: Vec<usize> = (0..n).collect();
    let mut stale = 0;
    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let xb = train.x.select(Axis(0), chunk);
            let lb: Vec<DiscreteLabel> = chunk.iter().map(|&i| train.labels[i]).collect();
            let (phi, tape) = net.forward_train(xb.view(), &mut rng)?;
            let out = loss(phi.view(), &lb)?;
            if !out.value.is_finite() {
                return Err(Error::NonFiniteLoss { epoch: epoch + 1, batch: b + 1 });
            }
            let grads = net.backward(&tape, &out.grad_phi);
            let lr = schedule.lr_at(epoch as f64 + b as f64 / n_batches as f64);
            opt.step(&mut net, &grads, lr);
            total += out.value * chunk.len() as f64;
        }
        let v = val_loss(&net)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteLoss { epoch: epoch + 1, batch: 0 });
        }
        log.epochs.push(EpochLog {
            epoch: epoch + 1,
            train_loss: total / n as f64,
            val_loss: v,
            lr: schedule.lr_at(epoch as f64),
        });
        if v < log.best_val_loss {
            log.best_val_loss = v;
            log.best_epoch = epoch + 1;
            best = net.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    Ok((best, log))
}
