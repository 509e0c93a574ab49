//! Synthetic oriented boxes and their corner features.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::coder::SymmetryConfig;
use crate::error::{ensure_finite, Error, Result};

/// Four corners, two coordinates each.
pub const FEATURE_DIM: usize = 8;

pub const MIN_ASPECT: f64 = 1.5;
pub const MAX_ASPECT: f64 = 4.0;
pub const MIN_LONG_SIDE: f64 = 1.0;
pub const MAX_LONG_SIDE: f64 = 2.0;
pub const CENTER_EXTENT: f64 = 50.0;

/// Box under the long-edge-90 convention: `w >= h > 0`, `theta` in
/// `[-pi/2, pi/2)` measured against the long side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub theta: f64,
}

impl OrientedBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, theta: f64) -> Result<Self> {
        for (what, v) in [("cx", cx), ("cy", cy), ("w", w), ("h", h), ("theta", theta)] {
            ensure_finite(what, v)?;
        }
        if !(h > 0.0 && w >= h) {
            return Err(Error::InvalidDataset(format!(
                "box sides must satisfy w >= h > 0, got w = {w}, h = {h}"
            )));
        }
        let rect = SymmetryConfig::rectangle();
        if !rect.contains(theta) {
            let (lo, hi) = rect.range();
            return Err(Error::AngleOutOfRange { theta, lo, hi });
        }
        Ok(Self {
            cx,
            cy,
            w,
            h,
            theta,
        })
    }

    /// Corner offsets from the center, in no particular order.
    pub fn corner_offsets(&self) -> [[f64; 2]; 4] {
        corner_offsets(self.w, self.h, self.theta)
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        self.corner_offsets()
            .map(|[dx, dy]| [self.cx + dx, self.cy + dy])
    }

    /// Canonically ordered corner offsets, flattened.
    pub fn features(&self) -> Vec<f64> {
        canonical_features(self.corner_offsets())
    }
}

/// Corner offsets of a `w x h` rectangle rotated by `theta` (any real angle).
pub fn corner_offsets(w: f64, h: f64, theta: f64) -> [[f64; 2]; 4] {
    let (s, c) = theta.sin_cos();
    let (hw, hh) = (w / 2.0, h / 2.0);
    [(hw, hh), (-hw, hh), (-hw, -hh), (hw, -hh)].map(|(u, v)| [u * c - v * s, u * s + v * c])
}

/// Sorts corner offsets by polar angle around the center (ties by distance)
/// and flattens them to `[x0, y0, x1, y1, ...]`.
pub fn canonical_features(mut offsets: [[f64; 2]; 4]) -> Vec<f64> {
    offsets.sort_by(|a, b| {
        let ka = a[1].atan2(a[0]);
        let kb = b[1].atan2(b[0]);
        ka.total_cmp(&kb)
            .then_with(|| a[0].hypot(a[1]).total_cmp(&b[0].hypot(b[1])))
    });
    offsets.iter().flatten().copied().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub bbox: OrientedBox,
    /// Exact `w == h`; selects the quarter-turn error metric.
    pub square: bool,
    pub features: Vec<f64>,
    pub target_theta: f64,
}

impl Sample {
    /// Symmetry that defines "same orientation" for this object.
    pub fn symmetry(&self) -> SymmetryConfig {
        if self.square {
            SymmetryConfig::square()
        } else {
            SymmetryConfig::rectangle()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub count: usize,
    pub square_fraction: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl DatasetConfig {
    pub fn generate(&self) -> Result<Vec<Sample>> {
        generate_dataset(
            self.count,
            self.square_fraction,
            self.noise_sigma,
            self.seed,
        )
    }
}

/// Draws `count` boxes with orientation uniform over `[-pi/2, pi/2)`.
///
/// Each box is a square with probability `square_fraction`; otherwise its
/// aspect ratio is uniform in `[1.5, 4]`. Features get i.i.d. Gaussian
/// noise with standard deviation `noise_sigma`.
pub fn generate_dataset(
    count: usize,
    square_fraction: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<Vec<Sample>> {
    if count == 0 {
        return Err(Error::InvalidDataset("count must be positive".into()));
    }
    if !(0.0..=1.0).contains(&square_fraction) {
        return Err(Error::InvalidDataset(format!(
            "square_fraction must lie in [0, 1], got {square_fraction}"
        )));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::InvalidDataset(format!(
            "noise_sigma must be finite and non-negative, got {noise_sigma}"
        )));
    }
    let noise = Normal::new(0.0, noise_sigma).expect("validated std");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let theta = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
            let square = rng.random::<f64>() < square_fraction;
            let w = rng.random_range(MIN_LONG_SIDE..MAX_LONG_SIDE);
            let h = if square {
                w
            } else {
                w / rng.random_range(MIN_ASPECT..=MAX_ASPECT)
            };
            let cx = rng.random_range(-CENTER_EXTENT..CENTER_EXTENT);
            let cy = rng.random_range(-CENTER_EXTENT..CENTER_EXTENT);
            let bbox = OrientedBox::new(cx, cy, w, h, theta)?;
            let mut features = bbox.features();
            if noise_sigma > 0.0 {
                for f in &mut features {
                    *f += noise.sample(&mut rng);
                }
            }
            Ok(Sample {
                bbox,
                square,
                features,
                target_theta: theta,
            })
        })
        .collect()
}
