//! Dual-frequency coder.
//!
//! A rectangle orientation `theta` is encoded at two frequencies,
//! `phi1 = 2*theta` and `phi2 = 4*theta`. The frequency-2 code is identical
//! for orientations that differ by a quarter turn, so it carries the angle
//! modulo `pi/2` unambiguously; the frequency-1 code only decides which of
//! the two half-angle branches of `phi2` is the right one.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coder::{self, Phase, PhaseCode, SymmetryConfig};
use crate::error::{Error, Result};

/// Concatenated codes of `phi1 = 2*theta` and `phi2 = 4*theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPhaseCode {
    x1: PhaseCode,
    x2: PhaseCode,
}

impl DualPhaseCode {
    pub fn new(x1: PhaseCode, x2: PhaseCode) -> Result<Self> {
        if x1.n_step() != x2.n_step() {
            return Err(Error::UnbalancedDualCode {
                x1: x1.n_step(),
                x2: x2.n_step(),
            });
        }
        Ok(Self { x1, x2 })
    }

    /// Splits a flat `[x1 | x2]` vector of even length `>= 6`.
    pub fn from_concatenated(values: &[f64]) -> Result<Self> {
        if !values.len().is_multiple_of(2) {
            return Err(Error::UnbalancedDualCode {
                x1: values.len().div_ceil(2),
                x2: values.len() / 2,
            });
        }
        let (a, b) = values.split_at(values.len() / 2);
        Self::new(PhaseCode::new(a.to_vec())?, PhaseCode::new(b.to_vec())?)
    }

    pub fn x1(&self) -> &PhaseCode {
        &self.x1
    }

    pub fn x2(&self) -> &PhaseCode {
        &self.x2
    }

    pub fn n_step(&self) -> usize {
        self.x1.n_step()
    }

    /// Total coding length, `2 * n_step`.
    pub fn len(&self) -> usize {
        2 * self.n_step()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(self.x1.values());
        out.extend_from_slice(self.x2.values());
        out
    }
}

/// Which half-angle branch the unwrapping step selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `phi = phi2/2 + pi`, taken when the inner product is negative.
    Shifted,
    /// `phi = phi2/2`.
    Direct,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Shifted => "shifted",
            Branch::Direct => "direct",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnwrapResult {
    /// Unwrapped frequency-1 phase.
    pub phi: Phase,
    /// `cos(phi1 - phi2/2)`; its sign picks the branch.
    pub delta: f64,
    pub branch: Branch,
}

/// Encodes a long-edge-90 orientation in `[-pi/2, pi/2)` at both frequencies.
pub fn encode_dual(theta: f64, n_step: usize) -> Result<DualPhaseCode> {
    let phi1 = coder::angle_to_phase(theta, &SymmetryConfig::rectangle())?;
    let phi2 = Phase::new(4.0 * theta)?;
    Ok(DualPhaseCode {
        x1: coder::encode(phi1, n_step)?,
        x2: coder::encode(phi2, n_step)?,
    })
}

/// Decodes both frequencies and unwraps `phi2` using the sign of the inner
/// product between the unit phasors of `phi1` and `phi2/2`.
pub fn decode_dual(code: &DualPhaseCode) -> Result<UnwrapResult> {
    unwrap_phases(coder::decode(&code.x1)?, coder::decode(&code.x2)?)
}

/// Unwraps an already decoded frequency-2 phase with the frequency-1 phase.
pub fn unwrap_phases(phi1: Phase, phi2: Phase) -> Result<UnwrapResult> {
    let phi1 = phi1.radians();
    let half = phi2.radians() / 2.0;
    let delta = phi1.cos() * half.cos() + phi1.sin() * half.sin();
    let branch = select_branch(delta);
    let raw = match branch {
        Branch::Shifted => half + PI,
        Branch::Direct => half,
    };
    Ok(UnwrapResult {
        phi: Phase::new(raw)?,
        delta,
        branch,
    })
}

/// Strict sign test; an exact zero stays on the direct branch.
pub fn select_branch(delta: f64) -> Branch {
    if delta < 0.0 {
        Branch::Shifted
    } else {
        Branch::Direct
    }
}

/// Full decode to a long-edge-90 orientation in `[-pi/2, pi/2)`.
pub fn decode_dual_to_angle(code: &DualPhaseCode) -> Result<f64> {
    let result = decode_dual(code)?;
    Ok(coder::phase_to_angle(
        result.phi,
        &SymmetryConfig::rectangle(),
    ))
}
