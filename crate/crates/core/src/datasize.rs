//! Downlink data sizes for a fixed association.
//!
//! With the server of every user fixed, utility separates per user into
//! `alpha * ln(1 + beta * d) - omega * d / r` plus terms that do not depend on
//! `d`, where `r` is the downlink rate to the assigned server. The function is
//! strictly concave in `d`; its stationary point is `alpha * r / omega - 1 / beta`
//! and the box-constrained maximizer is that point clamped to `[d_min, d_max]`.

use crate::error::Result;
use crate::scenario::{Assignment, ResolutionPlan, Scenario, UtilityParams};

/// Maximizer of the per-user objective on `[d_min, d_max]` for downlink rate `rate`.
pub fn optimal_size(params: &UtilityParams, rate: f64, d_min: f64, d_max: f64) -> f64 {
    if params.omega == 0.0 {
        return d_max;
    }
    let stationary = params.alpha * rate / params.omega - 1.0 / params.beta;
    stationary.clamp(d_min, d_max)
}

/// Per-user part of the utility that depends on `d`.
pub fn per_user_objective(params: &UtilityParams, rate: f64, d: f64) -> f64 {
    params.alpha * (params.beta * d).ln_1p() - params.omega * d / rate
}

/// The utility-maximizing plan for assignment `a`.
pub fn optimal_data_sizes(s: &Scenario, a: &Assignment) -> Result<ResolutionPlan> {
    a.validate_for(s)?;
    Ok(optimal_data_sizes_unchecked(s, &a.server_of))
}

pub(crate) fn optimal_data_sizes_unchecked(s: &Scenario, server_of: &[usize]) -> ResolutionPlan {
    let d = server_of
        .iter()
        .enumerate()
        .map(|(i, &j)| optimal_size(&s.utility_params, s.downlink_rate[i][j], s.d_min, s.d_max))
        .collect();
    ResolutionPlan { d }
}
