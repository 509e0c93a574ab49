use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Sample;
use super::model::{Head, Regressor, DEFAULT_HIDDEN};
use crate::coder::{DEFAULT_N_STEP, MIN_N_STEP};
use crate::error::{Error, Result};
use crate::head::{angle_loss, total_loss, LossWeights};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub n_step: usize,
    pub hidden: usize,
    pub seed: u64,
    pub weights: LossWeights,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch: 64,
            learning_rate: 1e-3,
            momentum: 0.9,
            n_step: DEFAULT_N_STEP,
            hidden: DEFAULT_HIDDEN,
            seed: 42,
            weights: LossWeights::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if self.batch == 0 {
            return bad("batch must be positive".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            ));
        }
        if self.n_step < MIN_N_STEP {
            return Err(Error::TooFewSteps(self.n_step));
        }
        if self.hidden == 0 {
            return bad("hidden must be positive".into());
        }
        self.weights.validate()
    }

    /// Step schedule: x0.1 after 60% of the epochs and again after 85%.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        let progress = epoch as f64 / self.epochs as f64;
        let mut lr = self.learning_rate;
        if progress >= 0.6 {
            lr *= 0.1;
        }
        if progress >= 0.85 {
            lr *= 0.1;
        }
        lr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Mean per-sample angle loss.
    pub angle_loss: f64,
    /// Mean per-sample weighted total loss.
    pub total_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Regressor,
    pub loss_curve: Vec<EpochLoss>,
}

/// Minibatch SGD with momentum on the weighted L1 code loss.
pub fn train(head: Head, cfg: &TrainConfig, data: &[Sample]) -> Result<TrainOutcome> {
    cfg.validate()?;
    let Some(first) = data.first() else {
        return Err(Error::InvalidDataset("training set is empty".into()));
    };
    let targets = data
        .iter()
        .map(|s| head.target(s.target_theta, cfg.n_step))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Regressor::new(head, first.features.len(), cfg.hidden, cfg.n_step, &mut rng)?;
    let mut velocity = model.zero_gradients();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_curve = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate_at(epoch);
        order.shuffle(&mut rng);
        let mut angle_sum = 0.0;
        let mut total_sum = 0.0;

        for batch in order.chunks(cfg.batch) {
            let mut grads = model.zero_gradients();
            for &i in batch {
                let fwd = model.forward(&data[i].features)?;
                let l = angle_loss(&fwd.output, &targets[i])?;
                if !l.loss.is_finite() {
                    return Err(Error::Diverged {
                        epoch,
                        loss: l.loss,
                    });
                }
                angle_sum += l.loss;
                total_sum += total_loss(0.0, 0.0, l.loss, &cfg.weights)?;
                let grad: Vec<f64> = l.grad.iter().map(|g| cfg.weights.w3 * g).collect();
                model.backward(&fwd, &grad, &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            sgd_step(&mut model, &mut velocity, &grads, lr, cfg.momentum);
        }

        let n = data.len() as f64;
        let entry = EpochLoss {
            epoch,
            learning_rate: lr,
            angle_loss: angle_sum / n,
            total_loss: total_sum / n,
        };
        if !(entry.angle_loss.is_finite() && entry.total_loss.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                loss: entry.total_loss,
            });
        }
        loss_curve.push(entry);
    }

    Ok(TrainOutcome { model, loss_curve })
}

fn sgd_step(
    model: &mut Regressor,
    velocity: &mut super::model::Gradients,
    grads: &super::model::Gradients,
    lr: f64,
    momentum: f64,
) {
    for ((layer, v), g) in model
        .layers
        .iter_mut()
        .zip(&mut velocity.layers)
        .zip(&grads.layers)
    {
        let params = layer.weights.iter_mut().chain(layer.bias.iter_mut());
        let vel = v.weights.iter_mut().chain(v.bias.iter_mut());
        let grad = g.weights.iter().chain(&g.bias);
        for ((p, v), g) in params.zip(vel).zip(grad) {
            *v = momentum * *v + g;
            *p -= lr * *v;
        }
    }
}
