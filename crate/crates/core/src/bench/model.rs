//! Small fully connected regressor with hand-written backpropagation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::coder::{self, PhaseCode, SymmetryConfig};
use crate::dual::{self, DualPhaseCode};
use crate::error::{Error, Result};
use crate::head::{squash_grad_scalar, squash_scalar};

pub const DEFAULT_HIDDEN: usize = 64;

/// What the network regresses and how its output is turned into an angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// The angle itself, unbounded linear output.
    Naive,
    /// Single-frequency phase-shifting code of `2*theta`.
    Psc,
    /// Dual-frequency code of `2*theta` and `4*theta`.
    Pscd,
}

impl Head {
    pub const ALL: [Head; 3] = [Head::Naive, Head::Psc, Head::Pscd];

    pub fn output_dim(self, n_step: usize) -> usize {
        match self {
            Head::Naive => 1,
            Head::Psc => n_step,
            Head::Pscd => 2 * n_step,
        }
    }

    /// Whether the final layer output is squashed into `(-1, 1)`.
    pub fn squashed(self) -> bool {
        !matches!(self, Head::Naive)
    }

    /// Regression target for a ground-truth orientation.
    pub fn target(self, theta: f64, n_step: usize) -> Result<Vec<f64>> {
        match self {
            Head::Naive => Ok(vec![theta]),
            Head::Psc => {
                let phi = coder::angle_to_phase(theta, &SymmetryConfig::rectangle())?;
                Ok(coder::encode(phi, n_step)?.into_values())
            }
            Head::Pscd => Ok(dual::encode_dual(theta, n_step)?.to_vec()),
        }
    }

    /// Turns a network output back into an orientation in `[-pi/2, pi/2)`.
    pub fn decode(self, output: &[f64]) -> Result<f64> {
        let rect = SymmetryConfig::rectangle();
        match self {
            Head::Naive => {
                let [theta] = output else {
                    return Err(Error::LengthMismatch {
                        expected: 1,
                        actual: output.len(),
                    });
                };
                rect.wrap_angle(*theta)
            }
            Head::Psc => {
                let phi = coder::decode(&PhaseCode::new(output.to_vec())?)?;
                Ok(coder::phase_to_angle(phi, &rect))
            }
            Head::Pscd => dual::decode_dual_to_angle(&DualPhaseCode::from_concatenated(output)?),
        }
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Head::Naive => "naive",
            Head::Psc => "psc",
            Head::Pscd => "pscd",
        })
    }
}

impl FromStr for Head {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "naive" => Ok(Head::Naive),
            "psc" => Ok(Head::Psc),
            "pscd" => Ok(Head::Pscd),
            other => Err(format!(
                "unknown head '{other}' (expected naive, psc or pscd)"
            )),
        }
    }
}

/// Affine layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// He-normal weights, zero bias.
    pub fn random<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, (2.0 / inputs as f64).sqrt()).expect("positive std");
        let weights = (0..inputs * outputs).map(|_| normal.sample(rng)).collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// Input of each layer; `inputs[0]` is the feature vector.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation output of each layer.
    pre: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

/// Parameter gradients, laid out like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            layer.weights.iter_mut().for_each(|w| *w *= factor);
            layer.bias.iter_mut().for_each(|b| *b *= factor);
        }
    }
}

/// `input -> hidden -> hidden -> output` network with ReLU hidden layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regressor {
    pub head: Head,
    pub n_step: usize,
    pub layers: Vec<Dense>,
}

impl Regressor {
    pub fn new<R: Rng + ?Sized>(
        head: Head,
        input_dim: usize,
        hidden: usize,
        n_step: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Self::check_shape(head, input_dim, hidden, n_step)?;
        let out = head.output_dim(n_step);
        let layers = vec![
            Dense::random(input_dim, hidden, rng),
            Dense::random(hidden, hidden, rng),
            Dense::random(hidden, out, rng),
        ];
        Ok(Self {
            head,
            n_step,
            layers,
        })
    }

    pub fn zeros(head: Head, input_dim: usize, hidden: usize, n_step: usize) -> Result<Self> {
        Self::check_shape(head, input_dim, hidden, n_step)?;
        let out = head.output_dim(n_step);
        let layers = vec![
            Dense::zeros(input_dim, hidden),
            Dense::zeros(hidden, hidden),
            Dense::zeros(hidden, out),
        ];
        Ok(Self {
            head,
            n_step,
            layers,
        })
    }

    fn check_shape(head: Head, input_dim: usize, hidden: usize, n_step: usize) -> Result<()> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::InvalidConfig(
                "input and hidden dimensions must be positive".into(),
            ));
        }
        if head != Head::Naive && n_step < coder::MIN_N_STEP {
            return Err(Error::TooFewSteps(n_step));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    pub fn forward(&self, features: &[f64]) -> Result<Forward> {
        if features.len() != self.input_dim() {
            return Err(Error::LengthMismatch {
                expected: self.input_dim(),
                actual: features.len(),
            });
        }
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = features.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.apply(&x);
            let a = if i < last {
                z.iter().map(|v| v.max(0.0)).collect()
            } else if self.head.squashed() {
                z.iter().copied().map(squash_scalar).collect()
            } else {
                z.clone()
            };
            inputs.push(std::mem::replace(&mut x, a));
            pre.push(z);
        }
        Ok(Forward {
            inputs,
            pre,
            output: x,
        })
    }

    pub fn predict(&self, features: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(features)?.output)
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    /// Accumulates into `grads` the parameter gradient of a loss whose
    /// gradient with respect to the model output is `grad_output`.
    pub fn backward(
        &self,
        fwd: &Forward,
        grad_output: &[f64],
        grads: &mut Gradients,
    ) -> Result<()> {
        if grad_output.len() != self.output_dim() {
            return Err(Error::LengthMismatch {
                expected: self.output_dim(),
                actual: grad_output.len(),
            });
        }
        let last = self.layers.len() - 1;
        let mut delta: Vec<f64> = if self.head.squashed() {
            grad_output
                .iter()
                .zip(&fwd.pre[last])
                .map(|(g, &z)| g * squash_grad_scalar(z))
                .collect()
        } else {
            grad_output.to_vec()
        };

        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = &fwd.inputs[i];
            let g = &mut grads.layers[i];
            for (o, &d) in delta.iter().enumerate() {
                g.bias[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (w, &x) in row.iter_mut().zip(input) {
                    *w += d * x;
                }
            }
            if i == 0 {
                break;
            }
            let mut upstream = vec![0.0; layer.inputs];
            for (row, &d) in layer.weights.chunks_exact(layer.inputs).zip(&delta) {
                for (u, &w) in upstream.iter_mut().zip(row) {
                    *u += d * w;
                }
            }
            // ReLU of the layer below; the subgradient at 0 is 0
            for (u, &z) in upstream.iter_mut().zip(&fwd.pre[i - 1]) {
                if z <= 0.0 {
                    *u = 0.0;
                }
            }
            delta = upstream;
        }
        Ok(())
    }

    /// All weights and biases, layer by layer (weights before bias).
    pub fn parameters(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::LengthMismatch {
                expected: self.param_count(),
                actual: params.len(),
            });
        }
        let mut rest = params;
        for layer in &mut self.layers {
            let (w, tail) = rest.split_at(layer.weights.len());
            let (b, tail) = tail.split_at(layer.bias.len());
            layer.weights.copy_from_slice(w);
            layer.bias.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }
}

fn flatten_layers(layers: &[Dense]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
        .collect()
}
