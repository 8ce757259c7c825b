use crate::error::Result;
use crate::model::{total_latency_unchecked, transmission_time};
use crate::scenario::{Assignment, ResolutionPlan, Scenario};

/// Best-response descent on total latency.
///
/// Users are visited in index order; each is moved to the server that
/// lowers total latency the most (lowest index on ties) when the decrease
/// exceeds a relative threshold of `1e-12`. Passes repeat until one makes no
/// move. Every accepted move strictly lowers latency, so the loop ends.
pub fn local_repair(s: &Scenario, p: &ResolutionPlan, a: &Assignment) -> Result<Assignment> {
    a.validate_for(s)?;
    p.validate_for(s)?;
    Ok(repair_unchecked(s, p, a))
}

pub(crate) fn repair_unchecked(s: &Scenario, p: &ResolutionPlan, a: &Assignment) -> Assignment {
    let m = s.n_servers;
    let mut server_of = a.server_of.clone();
    if m == 1 {
        return Assignment { server_of };
    }
    let trans: Vec<Vec<f64>> = (0..s.n_users)
        .map(|i| (0..m).map(|j| transmission_time(s, i, j, p.d[i])).collect())
        .collect();
    let mut load = vec![0usize; m];
    let mut demand = vec![0.0; m];
    for (i, &j) in server_of.iter().enumerate() {
        load[j] += 1;
        demand[j] += s.compute_demand[i];
    }
    let threshold = 1e-12 * total_latency_unchecked(s, &server_of, &p.d);

    loop {
        let mut moved = false;
        for i in 0..s.n_users {
            let from = server_of[i];
            let di = s.compute_demand[i];
            let leave = -(demand[from] + (load[from] as f64 - 1.0) * di) / s.compute_capacity[from];
            let mut best = from;
            let mut best_delta = -threshold;
            for to in 0..m {
                if to == from {
                    continue;
                }
                let join = (demand[to] + (load[to] as f64 + 1.0) * di) / s.compute_capacity[to];
                let delta = trans[i][to] - trans[i][from] + leave + join;
                if delta < best_delta {
                    best = to;
                    best_delta = delta;
                }
            }
            if best != from {
                server_of[i] = best;
                load[from] -= 1;
                load[best] += 1;
                for j in [from, best] {
                    demand[j] = server_of
                        .iter()
                        .zip(&s.compute_demand)
                        .filter(|(&k, _)| k == j)
                        .map(|(_, &d)| d)
                        .sum();
                }
                moved = true;
            }
        }
        if !moved {
            return Assignment { server_of };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::exhaustive::exhaustive_association;
    use crate::scenario::{generate_scenario, UtilityParams};

    fn compute_heavy() -> Scenario {
        Scenario {
            n_users: 2,
            n_servers: 2,
            uplink_rate: vec![vec![100.0; 2]; 2],
            downlink_rate: vec![vec![100.0; 2]; 2],
            uplink_size: vec![1.0; 2],
            compute_demand: vec![500.0; 2],
            compute_capacity: vec![1000.0; 2],
            d_min: 1.0,
            d_max: 10.0,
            utility_params: UtilityParams::default(),
        }
    }

    #[test]
    fn splits_users_sharing_a_server() {
        let s = compute_heavy();
        let p = ResolutionPlan::uniform(&s, 1.0);
        let a = Assignment::new(vec![0, 0], 2).unwrap();
        let out = local_repair(&s, &p, &a).unwrap();
        assert_eq!(out.server_of, vec![1, 0]);
        let before = total_latency_unchecked(&s, &a.server_of, &p.d);
        let after = total_latency_unchecked(&s, &out.server_of, &p.d);
        assert!((before - 2.0 * (0.02 + 1.0)).abs() < 1e-12);
        assert!((after - 2.0 * (0.02 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn local_optimum_is_unchanged() {
        let s = compute_heavy();
        let p = ResolutionPlan::uniform(&s, 1.0);
        let a = Assignment::new(vec![0, 1], 2).unwrap();
        assert_eq!(local_repair(&s, &p, &a).unwrap(), a);
    }

    /// True when no single-user move lowers latency, checked by full re-evaluation.
    fn is_single_move_optimal(s: &Scenario, p: &ResolutionPlan, a: &Assignment) -> bool {
        let base = total_latency_unchecked(s, &a.server_of, &p.d);
        for i in 0..s.n_users {
            for j in 0..s.n_servers {
                let mut b = a.server_of.clone();
                b[i] = j;
                if total_latency_unchecked(s, &b, &p.d) < base - 1e-9 {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn never_increases_latency_and_reaches_local_optimum() {
        let mut reached = 0;
        let mut reachable = 0;
        for seed in 0..50u64 {
            let s = generate_scenario(5, 3, seed, None).unwrap();
            let p = ResolutionPlan::uniform(&s, 1.0 + (seed % 9) as f64);
            let mut r = crate::rng::rng_from(seed);
            let start = Assignment::new(
                (0..5).map(|_| rand::Rng::random_range(&mut r, 0..3)).collect(),
                3,
            )
            .unwrap();
            let out = local_repair(&s, &p, &start).unwrap();
            let before = total_latency_unchecked(&s, &start.server_of, &p.d);
            let after = total_latency_unchecked(&s, &out.server_of, &p.d);
            assert!(after <= before);
            assert!(is_single_move_optimal(&s, &p, &out));

            // When every single-move local optimum is globally optimal, descent
            // must end at the optimum.
            let best = exhaustive_association(&s, &p).unwrap();
            let optimum = total_latency_unchecked(&s, &best.server_of, &p.d);
            let mut only_global = true;
            for code in 0..243usize {
                let server_of: Vec<usize> = (0..5).map(|k| (code / 3usize.pow(k)) % 3).collect();
                let cand = Assignment { server_of };
                if is_single_move_optimal(&s, &p, &cand)
                    && total_latency_unchecked(&s, &cand.server_of, &p.d) > optimum + 1e-9
                {
                    only_global = false;
                    break;
                }
            }
            if only_global {
                reachable += 1;
                if (after - optimum).abs() <= 1e-9 * optimum {
                    reached += 1;
                }
            }
        }
        assert!(reachable > 0);
        assert_eq!(reached, reachable);
    }
}
