//! Training-side pieces of the angle branch: bounded squashing of raw
//! network features into code range, the L1 code loss, and the weighted
//! total loss.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Default ratio of the angle weight to the classification weight.
pub const DEFAULT_ANGLE_WEIGHT_RATIO: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl LossWeights {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self> {
        let weights = Self { w1, w2, w3 };
        weights.validate()?;
        Ok(weights)
    }

    /// Angle weight follows `w3 = 0.2 * w1`.
    pub fn with_default_ratio(w1: f64, w2: f64) -> Result<Self> {
        Self::new(w1, w2, DEFAULT_ANGLE_WEIGHT_RATIO * w1)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("w1", self.w1), ("w2", self.w2), ("w3", self.w3)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidWeight { name, value });
            }
        }
        Ok(())
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 1.0,
            w3: DEFAULT_ANGLE_WEIGHT_RATIO,
        }
    }
}

/// `2*sigmoid(x) - 1`, evaluated without cancellation near zero and
/// exactly odd in `x`.
pub fn squash_scalar(x: f64) -> f64 {
    let em = (-x.abs()).exp_m1();
    let y = -em / (2.0 + em);
    y.copysign(x)
}

/// Derivative of [`squash_scalar`], `2*sigmoid(x)*(1 - sigmoid(x))`.
pub fn squash_grad_scalar(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / ((1.0 + e) * (1.0 + e))
}

/// Elementwise squash of raw features into `(-1, 1)`.
pub fn squash(feat: &[f64]) -> Vec<f64> {
    feat.iter().copied().map(squash_scalar).collect()
}

pub fn squash_grad(feat: &[f64]) -> Vec<f64> {
    feat.iter().copied().map(squash_grad_scalar).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    /// Gradient with respect to the prediction.
    pub grad: Vec<f64>,
}

/// Mean absolute error between predicted and target codes.
///
/// The subgradient at `pred == gt` is taken as zero.
pub fn angle_loss(pred: &[f64], gt: &[f64]) -> Result<LossGrad> {
    if pred.len() != gt.len() {
        return Err(Error::LengthMismatch {
            expected: gt.len(),
            actual: pred.len(),
        });
    }
    if pred.is_empty() {
        return Ok(LossGrad {
            loss: 0.0,
            grad: Vec::new(),
        });
    }
    let scale = 1.0 / pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(gt)
        .map(|(&p, &g)| {
            let r = g - p;
            loss += r.abs();
            if r > 0.0 {
                -scale
            } else if r < 0.0 {
                scale
            } else {
                0.0
            }
        })
        .collect();
    Ok(LossGrad {
        loss: loss * scale,
        grad,
    })
}

/// `w1*l_cls + w2*l_box + w3*l_ang`.
pub fn total_loss(l_cls: f64, l_box: f64, l_ang: f64, w: &LossWeights) -> Result<f64> {
    w.validate()?;
    for (name, value) in [("l_cls", l_cls), ("l_box", l_box), ("l_ang", l_ang)] {
        ensure_finite(name, value)?;
        if value < 0.0 {
            return Err(Error::InvalidLossTerm { name, value });
        }
    }
    Ok(w.w1 * l_cls + w.w2 * l_box + w.w3 * l_ang)
}
