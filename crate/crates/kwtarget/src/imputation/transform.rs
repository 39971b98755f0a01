//! Transforms between raw performance indices and the real line.
//!
//! Impressions live on `[0, ∞)` and go through the log; CTRs live on
//! `[0, 1]` and go through the logit. Values at the boundary are clamped
//! by a small epsilon before transforming so both maps stay finite.

use super::ImputeError;

/// Which index family a transformed value belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    Impressions,
    Ctr,
}

/// `ln(max(d, epsilon))` for impressions `d ≥ 0`.
pub fn log_transform(d: f64, epsilon: f64) -> Result<f64, ImputeError> {
    if d < 0.0 || !d.is_finite() {
        return Err(ImputeError::NegativeInput(d));
    }
    Ok(d.max(epsilon).ln())
}

/// `logit(clamp(c, epsilon, 1 − epsilon))` for rates `c ∈ [0, 1]`.
pub fn logit_transform(c: f64, epsilon: f64) -> Result<f64, ImputeError> {
    if !(0.0..=1.0).contains(&c) {
        return Err(ImputeError::OutOfRange(c));
    }
    let c = c.clamp(epsilon, 1.0 - epsilon);
    Ok((c / (1.0 - c)).ln())
}

/// Maps a real back into the index's natural range: `exp` for
/// impressions, sigmoid for CTR.
pub fn inverse_transform(x: f64, kind: IndexKind) -> f64 {
    match kind {
        IndexKind::Impressions => x.exp(),
        IndexKind::Ctr => sigmoid(x),
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
