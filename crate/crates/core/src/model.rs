//! Latency, earning and utility of a joint decision. Every strategy in the
//! crate is scored here.
//!
//! Per-user latency is the sum of three terms for the user's server `j`:
//!
//! ```text
//! uplink_size[i] / uplink_rate[i][j]                      (state upload)
//! compute_demand[i] * load[j] / compute_capacity[j]       (processor sharing)
//! d[i] / downlink_rate[i][j]                              (rendered content)
//! ```
//!
//! where `load[j]` counts the users assigned to `j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{Assignment, ResolutionPlan, Scenario, UtilityParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub per_user_latency: Vec<f64>,
    pub total_latency: f64,
    pub per_user_earning: Vec<f64>,
    pub total_earning: f64,
    pub utility: f64,
}

/// Uplink plus downlink time of user `i` on server `j`; the part of the
/// latency that does not depend on other users.
#[inline]
pub(crate) fn transmission_time(s: &Scenario, i: usize, j: usize, d: f64) -> f64 {
    s.uplink_size[i] / s.uplink_rate[i][j] + d / s.downlink_rate[i][j]
}

#[inline]
pub(crate) fn compute_time(s: &Scenario, i: usize, j: usize, load: usize) -> f64 {
    s.compute_demand[i] * load as f64 / s.compute_capacity[j]
}

/// Total latency without input validation. Callers guarantee dimensions.
pub(crate) fn total_latency_unchecked(s: &Scenario, server_of: &[usize], d: &[f64]) -> f64 {
    let mut loads = vec![0usize; s.n_servers];
    for &j in server_of {
        loads[j] += 1;
    }
    server_of
        .iter()
        .enumerate()
        .map(|(i, &j)| transmission_time(s, i, j, d[i]) + compute_time(s, i, j, loads[j]))
        .sum()
}

fn check(s: &Scenario, a: &Assignment, p: &ResolutionPlan) -> Result<()> {
    a.validate_for(s)?;
    p.validate_for(s)
}

/// Latency of user `i` in seconds.
pub fn latency(s: &Scenario, a: &Assignment, p: &ResolutionPlan, i: usize) -> Result<f64> {
    check(s, a, p)?;
    if i >= s.n_users {
        return Err(Error::InvalidArgument(format!(
            "user {i} out of range for {} users",
            s.n_users
        )));
    }
    let j = a.server_of[i];
    let load = a.server_of.iter().filter(|&&k| k == j).count();
    Ok(transmission_time(s, i, j, p.d[i]) + compute_time(s, i, j, load))
}

/// Token earning `alpha * ln(1 + beta * d)`: zero at zero, increasing and
/// strictly concave.
pub fn earning(params: &UtilityParams, d: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "data size must be nonnegative, got {d}"
        )));
    }
    Ok(earning_unchecked(params, d))
}

#[inline]
pub(crate) fn earning_unchecked(params: &UtilityParams, d: f64) -> f64 {
    params.alpha * (params.beta * d).ln_1p()
}

/// Derivative of the earning curve with respect to `d`.
#[inline]
pub fn marginal_earning(params: &UtilityParams, d: f64) -> f64 {
    params.alpha * params.beta / (1.0 + params.beta * d)
}

pub fn evaluate(s: &Scenario, a: &Assignment, p: &ResolutionPlan) -> Result<Metrics> {
    check(s, a, p)?;
    let loads = a.loads(s.n_servers);
    let per_user_latency: Vec<f64> = a
        .server_of
        .iter()
        .enumerate()
        .map(|(i, &j)| transmission_time(s, i, j, p.d[i]) + compute_time(s, i, j, loads[j]))
        .collect();
    let per_user_earning: Vec<f64> = p
        .d
        .iter()
        .map(|&d| earning_unchecked(&s.utility_params, d))
        .collect();
    let total_latency: f64 = per_user_latency.iter().sum();
    let total_earning: f64 = per_user_earning.iter().sum();
    let utility = total_earning - s.utility_params.omega * total_latency;
    Ok(Metrics {
        per_user_latency,
        total_latency,
        per_user_earning,
        total_earning,
        utility,
    })
}
