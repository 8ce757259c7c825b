//! Problem instances: players, edge servers, link rates and compute budgets.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Weights of the utility `earning - omega * total_latency` and the shape of
/// the earning curve `alpha * ln(1 + beta * d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for UtilityParams {
    fn default() -> Self {
        UtilityParams {
            omega: 2.0,
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

impl UtilityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega >= 0.0) {
            return Err(Error::Validation(format!(
                "utility_params.omega must be finite and >= 0, got {}",
                self.omega
            )));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Validation(format!(
                "utility_params.alpha must be finite and > 0, got {}",
                self.alpha
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::Validation(format!(
                "utility_params.beta must be finite and > 0, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// One problem instance. Rates are in Mbit/s, sizes in Mbit, compute in
/// megacycles (demand per epoch) and megacycles per second (capacity).
///
/// Matrices are indexed `[user][server]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n_users: usize,
    pub n_servers: usize,
    pub uplink_rate: Vec<Vec<f64>>,
    pub downlink_rate: Vec<Vec<f64>>,
    pub uplink_size: Vec<f64>,
    pub compute_demand: Vec<f64>,
    pub compute_capacity: Vec<f64>,
    pub d_min: f64,
    pub d_max: f64,
    pub utility_params: UtilityParams,
}

/// Optional replacements for the generator defaults. Ranges are inclusive
/// `(low, high)` pairs for uniform sampling.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOverrides {
    pub uplink_range: Option<(f64, f64)>,
    pub downlink_range: Option<(f64, f64)>,
    pub compute_demand_range: Option<(f64, f64)>,
    pub uplink_size: Option<f64>,
    pub compute_capacity: Option<f64>,
    pub d_min: Option<f64>,
    pub d_max: Option<f64>,
    pub omega: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// Sample one uplink and one downlink rate per user and repeat it across
    /// every server, instead of sampling each user-server pair.
    #[serde(default)]
    pub per_user_rates: bool,
}

pub const DEFAULT_UPLINK_RANGE: (f64, f64) = (1.0, 5.0);
pub const DEFAULT_DOWNLINK_RANGE: (f64, f64) = (10.0, 20.0);
pub const DEFAULT_COMPUTE_DEMAND_RANGE: (f64, f64) = (100.0, 300.0);
pub const DEFAULT_UPLINK_SIZE: f64 = 1.0;
pub const DEFAULT_COMPUTE_CAPACITY: f64 = 4000.0;
pub const DEFAULT_D_MIN: f64 = 1.0;
pub const DEFAULT_D_MAX: f64 = 10.0;

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
        return Err(Error::InvalidArgument(format!(
            "{name} must satisfy 0 < low <= high, got ({lo}, {hi})"
        )));
    }
    Ok(())
}

fn sample<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Draws a random instance. Rates are sampled row-major (uplink matrix, then
/// downlink matrix), then compute demands, from a ChaCha8 stream seeded by
/// `seed`. Overrides of scalar fields do not touch the random stream, so two
/// calls that differ only in, say, `omega` share every sampled rate.
pub fn generate_scenario(
    n_users: usize,
    n_servers: usize,
    seed: u64,
    overrides: Option<&ScenarioOverrides>,
) -> Result<Scenario> {
    if n_users == 0 || n_servers == 0 {
        return Err(Error::InvalidArgument(format!(
            "need at least one user and one server, got {n_users} users and {n_servers} servers"
        )));
    }
    let default = ScenarioOverrides::default();
    let o = overrides.unwrap_or(&default);

    let uplink_range = o.uplink_range.unwrap_or(DEFAULT_UPLINK_RANGE);
    let downlink_range = o.downlink_range.unwrap_or(DEFAULT_DOWNLINK_RANGE);
    let demand_range = o.compute_demand_range.unwrap_or(DEFAULT_COMPUTE_DEMAND_RANGE);
    check_range("uplink_range", uplink_range)?;
    check_range("downlink_range", downlink_range)?;
    check_range("compute_demand_range", demand_range)?;

    let mut rng = rng::rng_from(seed);
    let mut rate_matrix = |range: (f64, f64)| -> Vec<Vec<f64>> {
        (0..n_users)
            .map(|_| {
                if o.per_user_rates {
                    vec![sample(&mut rng, range); n_servers]
                } else {
                    (0..n_servers).map(|_| sample(&mut rng, range)).collect()
                }
            })
            .collect()
    };
    let uplink_rate = rate_matrix(uplink_range);
    let downlink_rate = rate_matrix(downlink_range);
    let compute_demand = (0..n_users).map(|_| sample(&mut rng, demand_range)).collect();

    let scenario = Scenario {
        n_users,
        n_servers,
        uplink_rate,
        downlink_rate,
        uplink_size: vec![o.uplink_size.unwrap_or(DEFAULT_UPLINK_SIZE); n_users],
        compute_demand,
        compute_capacity: vec![o.compute_capacity.unwrap_or(DEFAULT_COMPUTE_CAPACITY); n_servers],
        d_min: o.d_min.unwrap_or(DEFAULT_D_MIN),
        d_max: o.d_max.unwrap_or(DEFAULT_D_MAX),
        utility_params: UtilityParams {
            omega: o.omega.unwrap_or(UtilityParams::default().omega),
            alpha: o.alpha.unwrap_or(1.0),
            beta: o.beta.unwrap_or(1.0),
        },
    };
    scenario.validate().map_err(|e| match e {
        Error::Validation(msg) => Error::InvalidArgument(msg),
        other => other,
    })?;
    Ok(scenario)
}

fn check_positive(name: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        Some(k) => Err(Error::Validation(format!(
            "{name}[{k}] must be finite and > 0, got {}",
            values[k]
        ))),
        None => Ok(()),
    }
}

impl Scenario {
    /// Checks dimensions, positivity and the data-size bounds.
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_servers == 0 {
            return Err(Error::Validation(
                "n_users and n_servers must be positive".into(),
            ));
        }
        for (name, m) in [
            ("uplink_rate", &self.uplink_rate),
            ("downlink_rate", &self.downlink_rate),
        ] {
            if m.len() != self.n_users {
                return Err(Error::Validation(format!(
                    "{name} has {} rows, expected n_users = {}",
                    m.len(),
                    self.n_users
                )));
            }
            for (i, row) in m.iter().enumerate() {
                if row.len() != self.n_servers {
                    return Err(Error::Validation(format!(
                        "{name}[{i}] has {} entries, expected n_servers = {}",
                        row.len(),
                        self.n_servers
                    )));
                }
                check_positive(&format!("{name}[{i}]"), row)?;
            }
        }
        for (name, v, want) in [
            ("uplink_size", &self.uplink_size, self.n_users),
            ("compute_demand", &self.compute_demand, self.n_users),
            ("compute_capacity", &self.compute_capacity, self.n_servers),
        ] {
            if v.len() != want {
                return Err(Error::Validation(format!(
                    "{name} has {} entries, expected {want}",
                    v.len()
                )));
            }
            check_positive(name, v)?;
        }
        if !(self.d_min.is_finite() && self.d_max.is_finite()) {
            return Err(Error::Validation("d_min and d_max must be finite".into()));
        }
        if !(self.d_min > 0.0 && self.d_min <= self.d_max) {
            return Err(Error::Validation(format!(
                "data-size bounds must satisfy 0 < d_min <= d_max, got d_min = {}, d_max = {}",
                self.d_min, self.d_max
            )));
        }
        self.utility_params.validate()
    }

    pub fn n_variables(&self) -> usize {
        self.n_users * self.n_servers
    }

    /// Returns a copy with a different latency weight.
    pub fn with_omega(&self, omega: f64) -> Scenario {
        let mut s = self.clone();
        s.utility_params.omega = omega;
        s
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    /// Parses and validates an instance document.
    pub fn from_json(text: &str) -> Result<Scenario> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|err| {
            let path = err.path().to_string();
            let message = err.inner().to_string();
            let field = missing_field(&message)
                .map(|name| {
                    if path == "." {
                        name.to_string()
                    } else {
                        format!("{path}.{name}")
                    }
                })
                .unwrap_or(path);
            Error::Parse { field, message }
        })?;
        scenario.validate()?;
        Ok(scenario)
    }
}

fn missing_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split('`').next()
}

/// Writes the instance as pretty-printed JSON. Floats are written in their
/// shortest round-trip form, so loading gives back the identical instance.
pub fn save_scenario(s: &Scenario, destination: &Path) -> Result<()> {
    let mut text = s.to_json()?;
    text.push('\n');
    fs::write(destination, text)?;
    Ok(())
}

pub fn load_scenario(source: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(source)?;
    Scenario::from_json(&text)
}

/// A total map from users to servers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment {
    pub server_of: Vec<usize>,
}

impl Assignment {
    pub fn new(server_of: Vec<usize>, n_servers: usize) -> Result<Assignment> {
        let a = Assignment { server_of };
        a.check_servers(n_servers)?;
        Ok(a)
    }

    fn check_servers(&self, n_servers: usize) -> Result<()> {
        if let Some(i) = self.server_of.iter().position(|&j| j >= n_servers) {
            return Err(Error::Validation(format!(
                "user {i} assigned to server {} but only {n_servers} servers exist",
                self.server_of[i]
            )));
        }
        Ok(())
    }

    pub fn validate_for(&self, s: &Scenario) -> Result<()> {
        if self.server_of.len() != s.n_users {
            return Err(Error::Validation(format!(
                "assignment covers {} users, scenario has {}",
                self.server_of.len(),
                s.n_users
            )));
        }
        self.check_servers(s.n_servers)
    }

    /// Number of users on each server.
    pub fn loads(&self, n_servers: usize) -> Vec<usize> {
        let mut loads = vec![0; n_servers];
        for &j in &self.server_of {
            loads[j] += 1;
        }
        loads
    }

    pub fn len(&self) -> usize {
        self.server_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.server_of.is_empty()
    }
}

/// Downlink data size per user, in megabits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionPlan {
    pub d: Vec<f64>,
}

impl ResolutionPlan {
    pub fn uniform(s: &Scenario, d: f64) -> ResolutionPlan {
        ResolutionPlan {
            d: vec![d; s.n_users],
        }
    }

    pub fn validate_for(&self, s: &Scenario) -> Result<()> {
        if self.d.len() != s.n_users {
            return Err(Error::Validation(format!(
                "plan covers {} users, scenario has {}",
                self.d.len(),
                s.n_users
            )));
        }
        if let Some(i) = self
            .d
            .iter()
            .position(|&d| !(d >= s.d_min && d <= s.d_max))
        {
            return Err(Error::Validation(format!(
                "d[{i}] = {} lies outside [{}, {}]",
                self.d[i], s.d_min, s.d_max
            )));
        }
        Ok(())
    }
}
