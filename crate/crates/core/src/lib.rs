//! Phase-shifting angle coder.
//!
//! Orientation angles are mapped onto a phase circle according to the
//! object's rotational symmetry and represented as a handful of shifted
//! cosine samples. The representation is continuous across the angle
//! range boundary, and the dual-frequency variant also resolves the
//! quarter-turn ambiguity of square-like objects.

pub mod bench;
pub mod coder;
pub mod dual;
pub mod error;
pub mod head;

pub use coder::{
    angle_to_phase, angular_distance, decode, encode, phase_to_angle, wrap_phase, Phase, PhaseCode,
    SymmetryConfig, DEFAULT_N_STEP,
};
pub use dual::{
    decode_dual, decode_dual_to_angle, encode_dual, unwrap_phases, Branch, DualPhaseCode,
    UnwrapResult,
};
pub use error::{Error, Result};
pub use head::{angle_loss, squash, squash_grad, total_loss, LossGrad, LossWeights};
