//! Brute-force enumeration of every assignment, for verification on small
//! instances.

use crate::datasize::optimal_data_sizes_unchecked;
use crate::error::{Error, Result};
use crate::model::{evaluate, total_latency_unchecked};
use crate::scenario::{Assignment, ResolutionPlan, Scenario};

/// Largest number of assignments the enumerators will visit.
pub const MAX_ENUMERATION: u64 = 10_000_000;

fn check_size(s: &Scenario) -> Result<()> {
    let needed = (s.n_servers as f64).powi(s.n_users as i32);
    if needed > MAX_ENUMERATION as f64 {
        return Err(Error::Capacity {
            needed,
            bound: MAX_ENUMERATION,
        });
    }
    Ok(())
}

/// Visits every assignment in lexicographic order of `server_of`.
fn for_each_assignment(n_users: usize, n_servers: usize, mut visit: impl FnMut(&[usize])) {
    let mut server_of = vec![0usize; n_users];
    loop {
        visit(&server_of);
        let mut pos = n_users;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            server_of[pos] += 1;
            if server_of[pos] < n_servers {
                break;
            }
            server_of[pos] = 0;
        }
    }
}

/// Exact latency-minimizing assignment for plan `p`. Among assignments whose
/// latency lies within `1e-12` relative of the best, the lexicographically
/// smallest wins.
pub fn exhaustive_association(s: &Scenario, p: &ResolutionPlan) -> Result<Assignment> {
    p.validate_for(s)?;
    check_size(s)?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_assignment(s.n_users, s.n_servers, |cand| {
        let lat = total_latency_unchecked(s, cand, &p.d);
        match &best {
            Some((_, b)) if lat >= b - 1e-12 * b.abs() => {}
            _ => best = Some((cand.to_vec(), lat)),
        }
    });
    let (server_of, _) = best.expect("at least one assignment");
    Ok(Assignment { server_of })
}

/// Exact joint optimum: every assignment paired with its closed-form plan.
#[derive(Debug, Clone)]
pub struct JointOptimum {
    pub assignment: Assignment,
    pub plan: ResolutionPlan,
    pub utility: f64,
}

pub fn exhaustive_joint(s: &Scenario) -> Result<JointOptimum> {
    s.validate()?;
    check_size(s)?;
    let mut best: Option<JointOptimum> = None;
    for_each_assignment(s.n_users, s.n_servers, |cand| {
        let plan = optimal_data_sizes_unchecked(s, cand);
        let a = Assignment {
            server_of: cand.to_vec(),
        };
        let utility = evaluate(s, &a, &plan).expect("enumerated input is valid").utility;
        if best.as_ref().is_none_or(|b| utility > b.utility + 1e-12 * b.utility.abs()) {
            best = Some(JointOptimum {
                assignment: a,
                plan,
                utility,
            });
        }
    });
    Ok(best.expect("at least one assignment"))
}
