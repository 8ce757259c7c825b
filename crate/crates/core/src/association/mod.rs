//! User-server association with data sizes held fixed.
//!
//! The subproblem is a binary quadratic program (quadratic through the
//! processor-sharing compute term). It is lifted to a semidefinite
//! relaxation, rounded by Gaussian randomization and polished by
//! best-response moves. [`exhaustive`] enumerates small instances exactly.

pub mod exhaustive;
pub mod qcqp;
pub mod relax;
pub mod repair;
pub mod rounding;

use rand::seq::SliceRandom;

pub use exhaustive::{exhaustive_association, exhaustive_joint, JointOptimum};
pub use qcqp::{build_qcqp, build_qcqp_block, Qcqp};
pub use relax::{solve_sdp_relaxation, solve_sdp_relaxation_with, SdpSolution};
pub use repair::local_repair;
pub use rounding::round_solution;

use crate::error::Result;
use crate::model::{total_latency_unchecked, transmission_time};
use crate::rng;
use crate::scenario::{Assignment, ResolutionPlan, Scenario};
use crate::sdp::SdpOptions;

/// Each user on the server with the smallest uplink plus downlink time at
/// its planned size, ignoring load. Ties go to the lowest index.
pub fn greedy_assignment(s: &Scenario, p: &ResolutionPlan) -> Result<Assignment> {
    p.validate_for(s)?;
    Ok(greedy_unchecked(s, p))
}

pub(crate) fn greedy_unchecked(s: &Scenario, p: &ResolutionPlan) -> Assignment {
    let server_of = (0..s.n_users)
        .map(|i| {
            let mut best = 0;
            let mut best_t = transmission_time(s, i, 0, p.d[i]);
            for j in 1..s.n_servers {
                let t = transmission_time(s, i, j, p.d[i]);
                if t < best_t {
                    best = j;
                    best_t = t;
                }
            }
            best
        })
        .collect();
    Assignment { server_of }
}

/// Outcome of one relaxation pass over user blocks.
#[derive(Debug, Clone)]
pub struct BlockPass {
    pub assignment: Assignment,
    /// Blocks whose relaxation failed and were left unchanged.
    pub failed_blocks: usize,
}

/// Block-coordinate relaxation for instances above the size cap.
///
/// Users are shuffled with `seed` and cut into blocks of
/// `max(1, size_cap / n_servers)`. Each block's relaxation is solved with the
/// remaining users held on their current servers, rounded, and accepted when
/// it lowers total latency.
pub fn subsampled_relaxation(
    s: &Scenario,
    p: &ResolutionPlan,
    start: &Assignment,
    size_cap: usize,
    samples: usize,
    sdp: &SdpOptions,
    seed: u64,
) -> Result<BlockPass> {
    start.validate_for(s)?;
    p.validate_for(s)?;
    let block = (size_cap / s.n_servers).max(1);
    let mut order: Vec<usize> = (0..s.n_users).collect();
    order.shuffle(&mut rng::rng_from(rng::derive(seed, 0xB10C)));

    let mut current = start.clone();
    let mut current_lat = total_latency_unchecked(s, &current.server_of, &p.d);
    let mut failed_blocks = 0;
    for (b, users) in order.chunks(block).enumerate() {
        let qp = build_qcqp_block(s, p, users, &current)?;
        let sol = match solve_sdp_relaxation_with(&qp, sdp) {
            Ok(sol) => sol,
            Err(_) => {
                failed_blocks += 1;
                continue;
            }
        };
        let cand = round_solution(&sol, &qp, s, p, samples, rng::derive(seed, b as u64 + 1))?;
        let lat = total_latency_unchecked(s, &cand.server_of, &p.d);
        if lat < current_lat {
            current = cand;
            current_lat = lat;
        }
    }
    Ok(BlockPass {
        assignment: current,
        failed_blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::generate_scenario;

    #[test]
    fn greedy_picks_fastest_links() {
        let s = generate_scenario(6, 4, 3, None).unwrap();
        let p = ResolutionPlan::uniform(&s, s.d_max);
        let a = greedy_assignment(&s, &p).unwrap();
        for i in 0..6 {
            let chosen = transmission_time(&s, i, a.server_of[i], s.d_max);
            for j in 0..4 {
                assert!(chosen <= transmission_time(&s, i, j, s.d_max));
            }
        }
    }

    #[test]
    fn block_pass_never_increases_latency() {
        let s = generate_scenario(30, 5, 8, None).unwrap();
        let p = ResolutionPlan::uniform(&s, 4.0);
        let start = greedy_assignment(&s, &p).unwrap();
        let pass = subsampled_relaxation(&s, &p, &start, 15, 20, &SdpOptions::default(), 4).unwrap();
        pass.assignment.validate_for(&s).unwrap();
        assert_eq!(pass.failed_blocks, 0);
        assert!(
            total_latency_unchecked(&s, &pass.assignment.server_of, &p.d)
                <= total_latency_unchecked(&s, &start.server_of, &p.d)
        );
        let again = subsampled_relaxation(&s, &p, &start, 15, 20, &SdpOptions::default(), 4).unwrap();
        assert_eq!(again.assignment, pass.assignment);
    }
}
