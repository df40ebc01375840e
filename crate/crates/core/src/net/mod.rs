//! Feedforward rectifier network `x ↦ φ(x) ∈ ℝ^m` with reverse-mode gradients.

mod gradcheck;
mod optim;
mod train;

pub use gradcheck::{compare_gradients, gradient_check};
pub use optim::{Adam, WarmRestarts};
pub use train::{fit, EpochLog, TrainConfig, TrainLog, TrainingSet};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version tag written into serialized parameters.
pub const PARAMS_VERSION: u32 = 1;

/// Affine layer `y = x·W + b`, `W` stored fan_in × fan_out.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros_like(&self) -> Dense {
        Dense {
            weight: Array2::zeros(self.weight.raw_dim()),
            bias: Array1::zeros(self.bias.raw_dim()),
        }
    }

    fn slices(&self) -> [&[f64]; 2] {
        [
            self.weight.as_slice().expect("standard layout"),
            self.bias.as_slice().expect("standard layout"),
        ]
    }

    fn slices_mut(&mut self) -> [&mut [f64]; 2] {
        [
            self.weight.as_slice_mut().expect("standard layout"),
            self.bias.as_slice_mut().expect("standard layout"),
        ]
    }
}

/// Per-layer parameter gradients, shaped like [`Mlp::layers`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    /// All entries in parameter order (layer by layer, weights then bias).
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.slices().into_iter().flatten().copied().collect::<Vec<_>>())
            .collect()
    }

    pub fn flat_mut(&mut self) -> Vec<&mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.slices_mut().into_iter().flat_map(|s| s.iter_mut()).collect::<Vec<_>>())
            .collect()
    }
}

/// Rectifier hidden layers, identity output, inverted dropout after each
/// hidden activation.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    widths: Vec<usize>,
    dropout: f64,
    layers: Vec<Dense>,
}

/// Intermediate values of a training forward pass.
#[derive(Clone, Debug)]
pub struct Tape {
    /// Input to each layer (after dropout for hidden layers).
    inputs: Vec<Array2<f64>>,
    /// Per hidden layer: `relu'(z) · mask / keep`, the factor applied on the way back.
    gates: Vec<Array2<f64>>,
}

impl Mlp {
    /// Widths `(p, w_1, …, w_L, m)`. Weights are uniform in
    /// `±sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn new(widths: &[usize], dropout: f64, seed: u64) -> Result<Self> {
        if widths.len() < 2 || widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArgument(format!("invalid layer widths {widths:?}")));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::InvalidArgument(format!("dropout must be in [0, 1), got {dropout}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = widths
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Dense {
                    weight: Array2::from_shape_simple_fn((w[0], w[1]), || rng.random_range(-limit..=limit)),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        Ok(Mlp {
            widths: widths.to_vec(),
            dropout,
            layers,
        })
    }

    /// Builds from explicit layers; shapes are checked against each other.
    pub fn from_layers(layers: Vec<Dense>, dropout: f64) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::InvalidArgument("network needs at least one layer".into()))?;
        let mut widths = vec![first.weight.nrows()];
        for l in &layers {
            if l.weight.nrows() != *widths.last().unwrap() || l.bias.len() != l.weight.ncols() {
                return Err(Error::shape(
                    format!("layer with fan_in {}", widths.last().unwrap()),
                    format!("{:?} weight, {} bias", l.weight.dim(), l.bias.len()),
                ));
            }
            widths.push(l.weight.ncols());
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::InvalidArgument(format!("dropout must be in [0, 1), got {dropout}")));
        }
        let layers = layers
            .into_iter()
            .map(|l| Dense {
                weight: l.weight.as_standard_layout().into_owned(),
                bias: l.bias.as_standard_layout().into_owned(),
            })
            .collect();
        Ok(Mlp { widths, dropout, layers })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn param(&self, k: usize) -> f64 {
        *self.param_ref(k)
    }

    pub fn set_param(&mut self, k: usize, value: f64) {
        let mut k = k;
        for l in &mut self.layers {
            for s in l.slices_mut() {
                if k < s.len() {
                    s[k] = value;
                    return;
                }
                k -= s.len();
            }
        }
        panic!("parameter index out of range");
    }

    fn param_ref(&self, mut k: usize) -> &f64 {
        for l in &self.layers {
            for s in l.slices() {
                if k < s.len() {
                    return &s[k];
                }
                k -= s.len();
            }
        }
        panic!("parameter index out of range");
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape(format!("{} input columns", self.input_dim()), x.ncols()));
        }
        Ok(())
    }

    /// Forward pass. With `training` set, dropout masks are drawn from `rng`;
    /// otherwise the pass is deterministic and `rng` is untouched.
    pub fn forward<R: Rng>(&self, x: ArrayView2<f64>, training: bool, rng: &mut R) -> Result<Array2<f64>> {
        if training {
            Ok(self.forward_train(x, rng)?.0)
        } else {
            self.predict(x)
        }
    }

    /// Deterministic inference pass.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let last = self.layers.len() - 1;
        let mut h = x.to_owned();
        for (l, layer) in self.layers.iter().enumerate() {
            h = h.dot(&layer.weight) + &layer.bias;
            if l < last {
                h.mapv_inplace(|v| v.max(0.0));
            }
        }
        Ok(h)
    }

    /// Training pass recording what [`Mlp::backward`] needs.
    pub fn forward_train<R: Rng>(&self, x: ArrayView2<f64>, rng: &mut R) -> Result<(Array2<f64>, Tape)> {
        self.check_input(&x)?;
        let last = self.layers.len() - 1;
        let keep = 1.0 - self.dropout;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut gates = Vec::with_capacity(last);
        let mut h = x.to_owned();
        for (l, layer) in self.layers.iter().enumerate() {
            let z = h.dot(&layer.weight) + &layer.bias;
            inputs.push(h);
            if l == last {
                h = z;
                break;
            }
            let mut gate = z.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
            if self.dropout > 0.0 {
                gate.mapv_inplace(|g| if rng.random::<f64>() < keep { g / keep } else { 0.0 });
            }
            h = &z * &gate;
            gates.push(gate);
        }
        Ok((h, Tape { inputs, gates }))
    }

    /// Parameter gradients given `∂loss/∂output`.
    pub fn backward(&self, tape: &Tape, grad_out: &Array2<f64>) -> Gradients {
        let mut layers: Vec<Dense> = Vec::with_capacity(self.layers.len());
        let mut g = grad_out.clone();
        for l in (0..self.layers.len()).rev() {
            let input = &tape.inputs[l];
            // the product of two column-major operands comes back column-major
            let weight_grad = input.t().dot(&g).as_standard_layout().into_owned();
            let bias_grad = g.sum_axis(Axis(0));
            if l > 0 {
                let mut below = g.dot(&self.layers[l].weight.t());
                below *= &tape.gates[l - 1];
                g = below;
            }
            layers.push(Dense {
                weight: weight_grad,
                bias: bias_grad,
            });
        }
        layers.reverse();
        Gradients { layers }
    }

    pub(crate) fn zero_grads(&self) -> Gradients {
        Gradients {
            layers: self.layers.iter().map(Dense::zeros_like).collect(),
        }
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn to_params(&self) -> MlpParams {
        MlpParams {
            version: PARAMS_VERSION,
            widths: self.widths.clone(),
            dropout: self.dropout,
            weights: self
                .layers
                .iter()
                .map(|l| l.weight.outer_iter().map(|r| r.to_vec()).collect())
                .collect(),
            biases: self.layers.iter().map(|l| l.bias.to_vec()).collect(),
        }
    }

    pub fn from_params(p: &MlpParams) -> Result<Self> {
        if p.version != PARAMS_VERSION {
            return Err(Error::Model(format!("unsupported parameter version {}", p.version)));
        }
        if p.weights.len() + 1 != p.widths.len() || p.biases.len() != p.weights.len() {
            return Err(Error::Model("layer count does not match widths".into()));
        }
        let mut layers = Vec::with_capacity(p.weights.len());
        for (l, (w, b)) in p.weights.iter().zip(&p.biases).enumerate() {
            let (fan_in, fan_out) = (p.widths[l], p.widths[l + 1]);
            if w.len() != fan_in || w.iter().any(|r| r.len() != fan_out) || b.len() != fan_out {
                return Err(Error::Model(format!("layer {l} does not match widths {fan_in} → {fan_out}")));
            }
            let flat: Vec<f64> = w.iter().flatten().copied().collect();
            layers.push(Dense {
                weight: Array2::from_shape_vec((fan_in, fan_out), flat).expect("checked shape"),
                bias: Array1::from(b.clone()),
            });
        }
        Self::from_layers(layers, p.dropout)
    }
}

/// Serialized network: widths, dropout, row-major weights (fan_in rows of
/// fan_out entries) and biases per layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub version: u32,
    pub widths: Vec<usize>,
    pub dropout: f64,
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
}

impl Serialize for Mlp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_params().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mlp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let p = MlpParams::deserialize(d)?;
        Mlp::from_params(&p).map_err(serde::de::Error::custom)
    }
}
