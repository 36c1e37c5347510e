//! Maximum Monte Carlo regret estimation.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegretError {
    #[error("cannot estimate regret from an empty value list")]
    EmptyValues,
    #[error("non-finite input to the regret estimator")]
    NonFinite,
}

/// Regret estimate for one scenario visit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretEstimate {
    /// Mean of (r_max - V(s_t)) over visited states, clamped below at zero.
    pub value: f64,
    /// Number of visited states averaged over.
    pub horizon_terms: usize,
    pub r_max_used: f64,
}

/// Averages `r_max - V(s_t)` over the visited states of a rollout batch and
/// clamps the mean at zero (early value heads can overshoot the achieved
/// maximum, and negative scores would corrupt rank prioritization).
pub fn mm_regret(values: &[f64], r_max: f64) -> Result<RegretEstimate, RegretError> {
    if values.is_empty() {
        return Err(RegretError::EmptyValues);
    }
    if !r_max.is_finite() || values.iter().any(|v| !v.is_finite()) {
        return Err(RegretError::NonFinite);
    }
    let mean = values.iter().map(|v| r_max - v).sum::<f64>() / values.len() as f64;
    Ok(RegretEstimate {
        value: mean.max(0.0),
        horizon_terms: values.len(),
        r_max_used: r_max,
    })
}
