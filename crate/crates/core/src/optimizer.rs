//! The alternating optimizer and the three comparison strategies.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::association::{
    build_qcqp, greedy_unchecked, repair::repair_unchecked, round_solution, solve_sdp_relaxation_with,
    subsampled_relaxation,
};
use crate::datasize::optimal_data_sizes_unchecked;
use crate::error::{Error, Result};
use crate::model::{evaluate, total_latency_unchecked, Metrics};
use crate::rng;
use crate::scenario::{Assignment, ResolutionPlan, Scenario};
use crate::sdp::SdpOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    OptimalLatencyEarning,
    OptimalEarning,
    OptimalLatency,
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::OptimalLatencyEarning,
        Strategy::OptimalEarning,
        Strategy::OptimalLatency,
        Strategy::Random,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::OptimalLatencyEarning => "optimal_latency_earning",
            Strategy::OptimalEarning => "optimal_earning",
            Strategy::OptimalLatency => "optimal_latency",
            Strategy::Random => "random",
        }
    }

    fn stream(self) -> u64 {
        match self {
            Strategy::OptimalLatencyEarning => 0x01,
            Strategy::OptimalEarning => 0x02,
            Strategy::OptimalLatency => 0x03,
            Strategy::Random => 0x04,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Strategy> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.label() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Strategy::ALL.iter().map(|st| st.label()).collect();
                Error::Usage(format!(
                    "unknown strategy `{s}`; valid names are {}",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Stop once an iteration improves utility by less than this fraction.
    pub tol: f64,
    pub seed: u64,
    /// Gaussian samples drawn when rounding a relaxation.
    pub samples: usize,
    /// Largest association variable count (`users * servers`) solved by
    /// a full relaxation.
    pub sdr_size_cap: usize,
    /// Above the cap, run block relaxations over user subsets instead of
    /// greedy plus repair alone.
    pub subsample: bool,
    /// When false, a relaxation failure or an instance above the cap without
    /// `subsample` is reported as an error instead of being bypassed.
    pub allow_fallback: bool,
    pub sdp: SdpOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: 20,
            tol: 1e-6,
            seed: 0,
            samples: 100,
            sdr_size_cap: 60,
            subsample: false,
            allow_fallback: true,
            sdp: SdpOptions::default(),
        }
    }
}

/// Reasons the association step left the full-relaxation path.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FallbackFlags {
    /// The instance exceeded the relaxation size cap.
    pub size_cap: bool,
    /// A relaxation (full or block) failed to converge.
    pub sdp_failure: bool,
    /// Block relaxations over user subsets were used.
    pub subsampled: bool,
}

impl FallbackFlags {
    pub fn any(&self) -> bool {
        self.size_cap || self.sdp_failure || self.subsampled
    }

    fn merge(&mut self, other: FallbackFlags) {
        self.size_cap |= other.size_cap;
        self.sdp_failure |= other.sdp_failure;
        self.subsampled |= other.subsampled;
    }

    /// `none`, or the raised flags joined by `;`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.size_cap {
            parts.push("size_cap");
        }
        if self.subsampled {
            parts.push("subsampled");
        }
        if self.sdp_failure {
            parts.push("sdp_failure");
        }
        if parts.is_empty() {
            "none".to_string()
        } else {
            parts.join(";")
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Relative gap between the chosen assignment's latency and the last
    /// relaxation lower bound.
    pub sdr_gap: Option<f64>,
    pub sdr_lower_bound: Option<f64>,
    pub sdp_iterations: usize,
    pub fallback: FallbackFlags,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub assignment: Assignment,
    pub plan: ResolutionPlan,
    pub metrics: Metrics,
    pub strategy: Strategy,
    pub iterations: usize,
    /// Utility after initialization followed by the utility after each iteration.
    pub utility_trace: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl SolveResult {
    pub fn trace_is_monotone(&self) -> bool {
        self.utility_trace.windows(2).all(|w| w[1] >= w[0])
    }
}

fn check_options(opts: &SolveOptions) -> Result<()> {
    if opts.max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {}", opts.tol)));
    }
    if opts.samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    Ok(())
}

/// Latency-minimizing association for a fixed plan.
///
/// Candidates, in priority order: the rounded and repaired relaxation (or the
/// repaired block pass above the size cap), greedy plus repair, and each warm
/// start plus repair. The lowest-latency candidate wins, earliest on ties.
fn association_step(
    s: &Scenario,
    p: &ResolutionPlan,
    warm: &[&Assignment],
    opts: &SolveOptions,
    seed: u64,
    diag: &mut Diagnostics,
) -> Result<Assignment> {
    let mut candidates = Vec::new();
    let mut lower_bound = None;
    let n = s.n_variables();
    if n <= opts.sdr_size_cap {
        let qp = build_qcqp(s, p)?;
        match solve_sdp_relaxation_with(&qp, &opts.sdp) {
            Ok(sol) => {
                diag.sdp_iterations += sol.iterations;
                lower_bound = Some(sol.lower_bound);
                let rounded = round_solution(&sol, &qp, s, p, opts.samples, seed)?;
                candidates.push(repair_unchecked(s, p, &rounded));
            }
            Err(e) if !opts.allow_fallback => return Err(e),
            Err(_) => diag.fallback.sdp_failure = true,
        }
    } else if opts.subsample {
        let start = warm.first().copied().cloned().unwrap_or_else(|| greedy_unchecked(s, p));
        let pass = subsampled_relaxation(s, p, &start, opts.sdr_size_cap, opts.samples, &opts.sdp, seed)?;
        if pass.failed_blocks > 0 && !opts.allow_fallback {
            return Err(Error::SolverFailure {
                reason: format!("{} block relaxations failed", pass.failed_blocks),
                iterations: 0,
                residuals: Default::default(),
            });
        }
        diag.fallback.merge(FallbackFlags {
            size_cap: false,
            sdp_failure: pass.failed_blocks > 0,
            subsampled: true,
        });
        candidates.push(repair_unchecked(s, p, &pass.assignment));
    } else if !opts.allow_fallback {
        return Err(Error::Capacity {
            needed: n as f64,
            bound: opts.sdr_size_cap as u64,
        });
    } else {
        diag.fallback.size_cap = true;
    }
    candidates.push(repair_unchecked(s, p, &greedy_unchecked(s, p)));
    candidates.extend(warm.iter().map(|a| repair_unchecked(s, p, a)));

    let mut scored = candidates
        .into_iter()
        .map(|a| {
            let lat = total_latency_unchecked(s, &a.server_of, &p.d);
            (a, lat)
        });
    let (mut best, mut best_lat) = scored.next().expect("greedy candidate is always present");
    for (cand, lat) in scored {
        if lat < best_lat {
            best = cand;
            best_lat = lat;
        }
    }
    if let Some(lb) = lower_bound {
        diag.sdr_lower_bound = Some(lb);
        diag.sdr_gap = Some((best_lat - lb) / best_lat);
    }
    Ok(best)
}

fn finish(
    s: &Scenario,
    strategy: Strategy,
    assignment: Assignment,
    plan: ResolutionPlan,
    iterations: usize,
    utility_trace: Option<Vec<f64>>,
    mut diagnostics: Diagnostics,
    started: Instant,
) -> Result<SolveResult> {
    let metrics = evaluate(s, &assignment, &plan)?;
    let utility_trace = utility_trace.unwrap_or_else(|| vec![metrics.utility]);
    diagnostics.wall_time = started.elapsed().as_secs_f64();
    Ok(SolveResult {
        assignment,
        plan,
        metrics,
        strategy,
        iterations,
        utility_trace,
        diagnostics,
    })
}

/// Alternates the closed-form data-size step with the association step.
///
/// Starts from the greedy assignment at `d_max`. Each iteration proposes a new
/// association for the current plan and keeps it only when utility strictly
/// improves, then re-solves the plan; the run stops when the relative
/// improvement falls below `tol`, when no proposal improves, or after
/// `max_iters` iterations.
pub fn alternating_optimize(s: &Scenario, opts: &SolveOptions) -> Result<SolveResult> {
    s.validate()?;
    check_options(opts)?;
    let started = Instant::now();
    let seed = rng::derive(opts.seed, Strategy::OptimalLatencyEarning.stream());
    let mut diag = Diagnostics::default();

    let mut assignment = greedy_unchecked(s, &ResolutionPlan::uniform(s, s.d_max));
    let mut plan = optimal_data_sizes_unchecked(s, &assignment.server_of);
    let mut utility = evaluate(s, &assignment, &plan)?.utility;
    let mut trace = vec![utility];
    let mut iterations = 0;

    for it in 1..=opts.max_iters {
        iterations = it;
        let candidate = association_step(s, &plan, &[&assignment], opts, rng::derive(seed, it as u64), &mut diag)?;
        let candidate_utility = evaluate(s, &candidate, &plan)?.utility;
        if !(candidate_utility > utility) {
            trace.push(utility);
            break;
        }
        let previous = utility;
        let resized = optimal_data_sizes_unchecked(s, &candidate.server_of);
        let resized_utility = evaluate(s, &candidate, &resized)?.utility;
        assignment = candidate;
        if resized_utility >= candidate_utility {
            plan = resized;
            utility = resized_utility;
        } else {
            utility = candidate_utility;
        }
        trace.push(utility);
        if utility - previous < opts.tol * previous.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    finish(s, Strategy::OptimalLatencyEarning, assignment, plan, iterations, Some(trace), diag, started)
}

/// Largest data size for every user on a uniformly random server.
pub fn baseline_optimal_earning(s: &Scenario, seed: u64) -> Result<SolveResult> {
    s.validate()?;
    let started = Instant::now();
    let mut r = rng::rng_from(rng::derive(seed, Strategy::OptimalEarning.stream()));
    let assignment = Assignment {
        server_of: (0..s.n_users).map(|_| r.random_range(0..s.n_servers)).collect(),
    };
    let plan = ResolutionPlan::uniform(s, s.d_max);
    finish(s, Strategy::OptimalEarning, assignment, plan, 0, None, Diagnostics::default(), started)
}

/// Smallest data size for every user, with the association minimizing
/// latency alone. Uses the same association step as the alternating
/// optimizer, warm-started from the same greedy initialization.
pub fn baseline_optimal_latency(s: &Scenario, opts: &SolveOptions) -> Result<SolveResult> {
    s.validate()?;
    check_options(opts)?;
    let started = Instant::now();
    let seed = rng::derive(opts.seed, Strategy::OptimalLatencyEarning.stream());
    let mut diag = Diagnostics::default();
    let plan = ResolutionPlan::uniform(s, s.d_min);
    let init = greedy_unchecked(s, &ResolutionPlan::uniform(s, s.d_max));
    let assignment = association_step(s, &plan, &[&init], opts, rng::derive(seed, 1), &mut diag)?;
    finish(s, Strategy::OptimalLatency, assignment, plan, 1, None, diag, started)
}

/// Uniform server per user and uniform data size on `[d_min, d_max]`.
pub fn baseline_random(s: &Scenario, seed: u64) -> Result<SolveResult> {
    s.validate()?;
    let started = Instant::now();
    let mut r = rng::rng_from(rng::derive(seed, Strategy::Random.stream()));
    let server_of = (0..s.n_users).map(|_| r.random_range(0..s.n_servers)).collect();
    let d = (0..s.n_users)
        .map(|_| {
            if s.d_min == s.d_max {
                s.d_min
            } else {
                r.random_range(s.d_min..=s.d_max)
            }
        })
        .collect();
    finish(
        s,
        Strategy::Random,
        Assignment { server_of },
        ResolutionPlan { d },
        0,
        None,
        Diagnostics::default(),
        started,
    )
}

/// Runs `strategy` with the seed in `opts`.
pub fn solve(s: &Scenario, strategy: Strategy, opts: &SolveOptions) -> Result<SolveResult> {
    match strategy {
        Strategy::OptimalLatencyEarning => alternating_optimize(s, opts),
        Strategy::OptimalEarning => baseline_optimal_earning(s, opts.seed),
        Strategy::OptimalLatency => baseline_optimal_latency(s, opts),
        Strategy::Random => baseline_random(s, opts.seed),
    }
}
