use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::transmission_time;
use crate::scenario::{Assignment, ResolutionPlan, Scenario};

/// Binary quadratic program for the association subproblem.
///
/// Variable `x[u * n_servers + j]` is 1 iff the `u`-th free user sits on
/// server `j`. For every binary `x` that picks one server per free user,
/// `x' quad x + linear' x + constant` is the total latency of the decoded
/// assignment.
#[derive(Debug, Clone)]
pub struct Qcqp {
    pub n: usize,
    pub n_servers: usize,
    pub quad: DMatrix<f64>,
    pub linear: Vec<f64>,
    /// Latency contributed by users held fixed; zero for a full build.
    pub constant: f64,
    /// Variable indices of each free user; each row must sum to one.
    pub assignment_rows: Vec<Vec<usize>>,
    /// Scenario index of each free user.
    pub users: Vec<usize>,
    /// Full assignment supplying the servers of users that are not free.
    pub background: Option<Assignment>,
}

impl Qcqp {
    #[inline]
    pub fn var(&self, user_slot: usize, server: usize) -> usize {
        user_slot * self.n_servers + server
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut acc = self.constant;
        for k in 0..self.n {
            if x[k] == 0.0 {
                continue;
            }
            acc += self.linear[k] * x[k];
            for l in 0..self.n {
                acc += x[k] * self.quad[(k, l)] * x[l];
            }
        }
        acc
    }

    /// One-hot encoding of the free users' servers in `a`.
    pub fn encode(&self, a: &Assignment) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (slot, &i) in self.users.iter().enumerate() {
            x[self.var(slot, a.server_of[i])] = 1.0;
        }
        x
    }

    /// Full assignment from one server choice per free user.
    pub fn decode(&self, choices: &[usize]) -> Assignment {
        let mut server_of = match &self.background {
            Some(bg) => bg.server_of.clone(),
            None => vec![0; self.users.len()],
        };
        for (slot, &i) in self.users.iter().enumerate() {
            server_of[i] = choices[slot];
        }
        Assignment { server_of }
    }
}

/// Builds the program over all users for plan `p`.
///
/// Linear coefficients carry the uplink and downlink times; the quadratic
/// coefficient between two users on the same server `j` is
/// `(demand_i + demand_k) / (2 * capacity_j)`, which sums to
/// `load_j * demand_sum_j / capacity_j` over a server's users.
pub fn build_qcqp(s: &Scenario, p: &ResolutionPlan) -> Result<Qcqp> {
    p.validate_for(s)?;
    let users: Vec<usize> = (0..s.n_users).collect();
    Ok(build(s, p, &users, None))
}

/// Builds the program over `users` only, with every other user held on its
/// server in `background`. Load interactions with the fixed users become
/// linear terms and their own latency becomes the constant.
pub fn build_qcqp_block(
    s: &Scenario,
    p: &ResolutionPlan,
    users: &[usize],
    background: &Assignment,
) -> Result<Qcqp> {
    p.validate_for(s)?;
    background.validate_for(s)?;
    let mut seen = vec![false; s.n_users];
    for &i in users {
        if i >= s.n_users || seen[i] {
            return Err(Error::InvalidArgument(format!(
                "block users must be distinct indices below {}, got {users:?}",
                s.n_users
            )));
        }
        seen[i] = true;
    }
    Ok(build(s, p, users, Some(background)))
}

fn build(s: &Scenario, p: &ResolutionPlan, users: &[usize], background: Option<&Assignment>) -> Qcqp {
    let m = s.n_servers;
    let n = users.len() * m;
    let mut quad = DMatrix::zeros(n, n);
    let mut linear = vec![0.0; n];
    let mut constant = 0.0;

    let mut fixed_count = vec![0usize; m];
    let mut fixed_demand = vec![0.0; m];
    if let Some(bg) = background {
        let mut free = vec![false; s.n_users];
        for &i in users {
            free[i] = true;
        }
        for (k, &j) in bg.server_of.iter().enumerate() {
            if !free[k] {
                fixed_count[j] += 1;
                fixed_demand[j] += s.compute_demand[k];
                constant += transmission_time(s, k, j, p.d[k]);
            }
        }
        for j in 0..m {
            constant += fixed_count[j] as f64 * fixed_demand[j] / s.compute_capacity[j];
        }
    }

    for (a, &i) in users.iter().enumerate() {
        for j in 0..m {
            let v = a * m + j;
            linear[v] = transmission_time(s, i, j, p.d[i])
                + (fixed_count[j] as f64 * s.compute_demand[i] + fixed_demand[j]) / s.compute_capacity[j];
            for (b, &k) in users.iter().enumerate() {
                let w = b * m + j;
                quad[(v, w)] = (s.compute_demand[i] + s.compute_demand[k]) / (2.0 * s.compute_capacity[j]);
            }
        }
    }

    Qcqp {
        n,
        n_servers: m,
        quad,
        linear,
        constant,
        assignment_rows: (0..users.len()).map(|a| (a * m..(a + 1) * m).collect()).collect(),
        users: users.to_vec(),
        background: background.cloned(),
    }
}
