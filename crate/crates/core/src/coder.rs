//! Single-frequency phase-shifting coder.
//!
//! An orientation `theta` with rotational symmetry `s` is mapped to a phase
//! `phi = k * theta` (with `k = 2*pi/s`), and the phase is represented by
//! `N` cosine samples taken at uniformly shifted offsets:
//!
//! ```text
//! x_n = cos(phi + 2*n*pi/N),   n = 1..N
//! ```
//!
//! Decoding recovers `phi` from any code of that shape with a least-squares
//! fit of the fundamental, which makes it insensitive to constant offsets
//! and to positive rescaling of the code.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Number of phase-shifting steps used when nothing else is configured.
pub const DEFAULT_N_STEP: usize = 3;

/// Smallest `n_step` for which decoding is well posed.
pub const MIN_N_STEP: usize = 3;

/// Both weighted sums below this magnitude make the phase indeterminate.
pub const INDETERMINATE_EPS: f64 = 1e-12;

/// Principal phase in `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Phase(f64);

impl Phase {
    /// Wraps `raw` into `[-pi, pi)`.
    pub fn new(raw: f64) -> Result<Self> {
        wrap_phase(raw, TAU).map(Phase)
    }

    pub const ZERO: Phase = Phase(0.0);

    pub fn radians(self) -> f64 {
        self.0
    }
}

/// Rotational symmetry of an object class.
///
/// An object that looks the same after a rotation of `period` radians has its
/// orientation defined in `[-period/2, period/2)` and is mapped onto the
/// phase circle with frequency `2*pi/period`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryConfig {
    period: f64,
    frequency: f64,
}

impl SymmetryConfig {
    pub fn new(period: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidSymmetry(period));
        }
        Ok(Self {
            period,
            frequency: TAU / period,
        })
    }

    /// Rectangles under the long-edge-90 convention (`s = pi`, `k = 2`).
    pub fn rectangle() -> Self {
        Self {
            period: PI,
            frequency: 2.0,
        }
    }

    /// Square-like objects (`s = pi/2`, `k = 4`).
    pub fn square() -> Self {
        Self {
            period: PI / 2.0,
            frequency: 4.0,
        }
    }

    /// Objects whose heading matters (`s = 2*pi`, `k = 1`).
    pub fn heading() -> Self {
        Self {
            period: TAU,
            frequency: 1.0,
        }
    }

    /// Symmetry period `s` in radians.
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Frequency multiplier `k = 2*pi/s`.
    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    /// Half-open angle range `[-s/2, s/2)`.
    pub fn range(&self) -> (f64, f64) {
        (-self.period / 2.0, self.period / 2.0)
    }

    pub fn contains(&self, theta: f64) -> bool {
        let (lo, hi) = self.range();
        theta >= lo && theta < hi
    }

    /// Reduces any finite angle into this symmetry's range.
    pub fn wrap_angle(&self, theta: f64) -> Result<f64> {
        wrap_phase(theta, self.period)
    }
}

impl Default for SymmetryConfig {
    fn default() -> Self {
        Self::rectangle()
    }
}

/// Phase-shifting code: `n_step` cosine samples of one phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseCode {
    values: Vec<f64>,
}

impl PhaseCode {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_N_STEP {
            return Err(Error::TooFewSteps(values.len()));
        }
        for &v in &values {
            ensure_finite("code element", v)?;
        }
        Ok(Self { values })
    }

    pub fn n_step(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for PhaseCode {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Reduces `raw` modulo `period` into `[-period/2, period/2)`.
pub fn wrap_phase(raw: f64, period: f64) -> Result<f64> {
    ensure_finite("raw", raw)?;
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::InvalidPeriod(period));
    }
    let half = period / 2.0;
    let mut wrapped = raw - period * ((raw + half) / period).floor();
    // floor() on a rounded quotient can land one ulp outside the interval
    if wrapped >= half {
        wrapped -= period;
    }
    if wrapped < -half {
        wrapped += period;
    }
    Ok(wrapped)
}

/// Maps an orientation onto the phase circle, `phi = k * theta`.
///
/// Angles outside the symmetry's range are rejected rather than wrapped.
pub fn angle_to_phase(theta: f64, cfg: &SymmetryConfig) -> Result<Phase> {
    ensure_finite("theta", theta)?;
    if !cfg.contains(theta) {
        let (lo, hi) = cfg.range();
        return Err(Error::AngleOutOfRange { theta, lo, hi });
    }
    Phase::new(cfg.frequency * theta)
}

/// Inverse of [`angle_to_phase`], `theta = phi / k`.
pub fn phase_to_angle(phi: Phase, cfg: &SymmetryConfig) -> f64 {
    phi.radians() / cfg.frequency
}

fn step_angle(n: usize, n_step: usize) -> f64 {
    TAU * n as f64 / n_step as f64
}

/// Encodes a phase into `n_step` shifted cosine samples.
pub fn encode(phi: Phase, n_step: usize) -> Result<PhaseCode> {
    if n_step < MIN_N_STEP {
        return Err(Error::TooFewSteps(n_step));
    }
    let phi = phi.radians();
    let values = (1..=n_step)
        .map(|n| (phi + step_angle(n, n_step)).cos())
        .collect();
    Ok(PhaseCode { values })
}

/// Recovers the phase from a code by a least-squares fit of the fundamental.
///
/// Returns [`Error::IndeterminatePhase`] when the code has no fundamental
/// component (e.g. an all-zero or constant code).
pub fn decode(code: &PhaseCode) -> Result<Phase> {
    let n_step = code.n_step();
    let (sin_sum, cos_sum) = code
        .values
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(s, c), (i, &x)| {
            let shift = step_angle(i + 1, n_step);
            (s + x * shift.sin(), c + x * shift.cos())
        });
    if sin_sum.abs() < INDETERMINATE_EPS && cos_sum.abs() < INDETERMINATE_EPS {
        return Err(Error::IndeterminatePhase);
    }
    // -atan2 lies in [-pi, pi) except for the signed-zero case that yields +pi.
    let phi = -sin_sum.atan2(cos_sum);
    #[cfg(feature = "fault-flip-decode-sign")]
    let phi = -phi;
    Phase::new(phi)
}

/// Geodesic distance between two orientations on a circle of circumference
/// `s`; the result lies in `[0, s/2]`.
pub fn angular_distance(a: f64, b: f64, cfg: &SymmetryConfig) -> f64 {
    let d = (a - b).rem_euclid(cfg.period);
    d.min(cfg.period - d)
}

/// Circular difference between two phases, in `[0, pi]`.
pub fn phase_distance(a: Phase, b: Phase) -> f64 {
    angular_distance(a.radians(), b.radians(), &SymmetryConfig::heading())
}
