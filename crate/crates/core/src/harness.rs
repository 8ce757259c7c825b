//! Experiment runner: strategy comparison sweeps with CSV output, and an
//! oracle suite that checks the solvers against exhaustive enumeration on
//! small instances.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::association::{build_qcqp, exhaustive_association, exhaustive_joint, solve_sdp_relaxation_with};
use crate::association::exhaustive::MAX_ENUMERATION;
use crate::datasize::{optimal_data_sizes, per_user_objective};
use crate::error::{Error, Result};
use crate::model::{evaluate, total_latency_unchecked};
use crate::optimizer::{self, baseline_random, SolveOptions, SolveResult, Strategy};
use crate::rng;
use crate::scenario::{generate_scenario, Assignment, Scenario, ScenarioOverrides};

/// Column order of the sweep CSV.
pub const CSV_HEADER: &str =
    "strategy,omega,d_min,seed,avg_latency,total_earning,normalized_earning,utility,wall_time,fallback";

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub users: usize,
    pub servers: usize,
    pub omegas: Vec<f64>,
    pub d_mins: Vec<f64>,
    pub d_max: Option<f64>,
    pub first_seed: u64,
    pub seeds: usize,
    pub strategies: Vec<Strategy>,
    pub solve: SolveOptions,
    /// Write measured solve times; otherwise the column is zero and the file
    /// is byte-identical across runs.
    pub record_wall_time: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            users: 100,
            servers: 20,
            omegas: vec![2.0, 4.0],
            d_mins: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            d_max: None,
            first_seed: 0,
            seeds: 10,
            strategies: Strategy::ALL.to_vec(),
            solve: SolveOptions::default(),
            record_wall_time: false,
        }
    }
}

impl SweepConfig {
    pub fn seed_list(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.seeds as u64).map(move |k| self.first_seed + k)
    }

    /// Instance for one `(seed, omega, d_min)` cell. Every strategy in the
    /// cell sees the same rates.
    pub fn scenario(&self, seed: u64, omega: f64, d_min: f64) -> Result<Scenario> {
        let o = ScenarioOverrides {
            omega: Some(omega),
            d_min: Some(d_min),
            d_max: self.d_max,
            ..Default::default()
        };
        generate_scenario(self.users, self.servers, seed, Some(&o))
    }

    pub fn solve_cell(&self, strategy: Strategy, omega: f64, d_min: f64, seed: u64) -> Result<(Scenario, SolveResult)> {
        let s = self.scenario(seed, omega, d_min)?;
        let opts = SolveOptions {
            seed,
            ..self.solve
        };
        let r = optimizer::solve(&s, strategy, &opts)?;
        Ok((s, r))
    }

    fn check(&self) -> Result<()> {
        if self.omegas.is_empty() || self.d_mins.is_empty() || self.strategies.is_empty() || self.seeds == 0 {
            return Err(Error::Usage(
                "sweep needs at least one omega, d_min, strategy and seed".into(),
            ));
        }
        Ok(())
    }
}

/// One row of the sweep output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub strategy: Strategy,
    pub omega: f64,
    pub d_min: f64,
    pub seed: u64,
    /// Seconds per user.
    pub avg_latency: f64,
    pub total_earning: f64,
    pub normalized_earning: f64,
    pub utility: f64,
    pub wall_time: f64,
    pub fallback: String,
}

impl ExperimentRecord {
    fn from_result(r: &SolveResult, omega: f64, d_min: f64, seed: u64, n_users: usize, wall_time: bool) -> Self {
        ExperimentRecord {
            strategy: r.strategy,
            omega,
            d_min,
            seed,
            avg_latency: r.metrics.total_latency / n_users as f64,
            total_earning: r.metrics.total_earning,
            normalized_earning: f64::NAN,
            utility: r.metrics.utility,
            wall_time: if wall_time { r.diagnostics.wall_time } else { 0.0 },
            fallback: r.diagnostics.fallback.label(),
        }
    }
}

/// Divides each row's earning by the largest earning among rows of the same
/// `(seed, omega, d_min)` cell.
pub fn normalize_earnings(records: &mut [ExperimentRecord]) {
    let key = |r: &ExperimentRecord| (r.seed, r.omega.to_bits(), r.d_min.to_bits());
    let mut best: HashMap<(u64, u64, u64), f64> = HashMap::new();
    for r in records.iter() {
        let e = best.entry(key(r)).or_insert(f64::NEG_INFINITY);
        *e = e.max(r.total_earning);
    }
    for r in records.iter_mut() {
        let max = best[&key(r)];
        r.normalized_earning = if max > 0.0 { r.total_earning / max } else { 1.0 };
    }
}

/// Runs every `(strategy, omega, d_min, seed)` combination, in parallel, and
/// returns rows sorted by that tuple with strategies in canonical order.
pub fn run_comparison(config: &SweepConfig) -> Result<Vec<ExperimentRecord>> {
    config.check()?;
    let mut jobs = Vec::new();
    for &strategy in &config.strategies {
        for &omega in &config.omegas {
            for &d_min in &config.d_mins {
                for seed in config.seed_list() {
                    jobs.push((strategy, omega, d_min, seed));
                }
            }
        }
    }
    let mut records = jobs
        .par_iter()
        .map(|&(strategy, omega, d_min, seed)| {
            let (_, r) = config.solve_cell(strategy, omega, d_min, seed)?;
            Ok(ExperimentRecord::from_result(&r, omega, d_min, seed, config.users, config.record_wall_time))
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| {
        a.strategy
            .cmp(&b.strategy)
            .then(a.omega.total_cmp(&b.omega))
            .then(a.d_min.total_cmp(&b.d_min))
            .then(a.seed.cmp(&b.seed))
    });
    normalize_earnings(&mut records);
    Ok(records)
}

pub fn write_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Re-solves `count` evenly spaced rows and re-derives their metrics with
/// [`evaluate`]. Returns the largest relative deviation from the logged values.
pub fn recheck(config: &SweepConfig, records: &[ExperimentRecord], count: usize) -> Result<f64> {
    if records.is_empty() || count == 0 {
        return Ok(0.0);
    }
    let count = count.min(records.len());
    let picks: Vec<usize> = (0..count).map(|k| k * records.len() / count).collect();
    let deviations = picks
        .par_iter()
        .map(|&k| {
            let row = &records[k];
            let (s, r) = config.solve_cell(row.strategy, row.omega, row.d_min, row.seed)?;
            let m = evaluate(&s, &r.assignment, &r.plan)?;
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
            Ok(rel(m.total_latency / s.n_users as f64, row.avg_latency)
                .max(rel(m.total_earning, row.total_earning))
                .max(rel(m.utility, row.utility)))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(deviations.into_iter().fold(0.0, f64::max))
}

/// Small-instance verification settings.
#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// User counts, cycled across seeds.
    pub users: Vec<usize>,
    pub servers: usize,
    pub first_seed: u64,
    pub seeds: usize,
    /// Random (scenario, assignment) pairs for the data-size grid check.
    pub grid_pairs: usize,
    pub solve: SolveOptions,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            users: vec![5, 6, 7],
            servers: 3,
            first_seed: 0,
            seeds: 50,
            grid_pairs: 100,
            solve: SolveOptions::default(),
        }
    }
}

/// Thresholds checked by the oracle suite.
pub mod thresholds {
    pub const DOMINANCE_TOL: f64 = 1e-9;
    pub const NEAR_OPTIMAL_RATIO: f64 = 0.9;
    pub const NEAR_OPTIMAL_FRACTION: f64 = 0.9;
    pub const LOWER_BOUND_TOL: f64 = 1e-6;
    pub const PSD_TOL: f64 = -1e-7;
    pub const GRID_STEP: f64 = 1e-4;
    pub const GRID_ARG_TOL: f64 = 1e-3;
    pub const GRID_OBJ_TOL: f64 = 1e-6;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub seed: u64,
    pub users: usize,
    pub servers: usize,
    pub alternating_utility: f64,
    pub oracle_utility: f64,
    pub random_utility: f64,
    /// `(alternating - random) / (oracle - random)`; one when the two
    /// reference utilities coincide.
    pub shifted_ratio: f64,
    /// Largest `lower_bound - exhaustive_latency` over the checked plans.
    pub bound_excess: f64,
    pub min_eigenvalue: f64,
    pub sdr_gap: f64,
    pub trace_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCheck {
    pub pairs: usize,
    pub max_argument_error: f64,
    /// Largest `grid_utility - closed_form_utility` (positive means grid won).
    pub max_objective_shortfall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub dominance_violations: usize,
    pub near_optimal_fraction: f64,
    pub min_shifted_ratio: f64,
    pub mean_shifted_ratio: f64,
    pub bound_violations: usize,
    pub psd_violations: usize,
    pub non_monotone_traces: usize,
    pub grid: GridCheck,
}

impl OracleSummary {
    pub fn dominance_ok(&self) -> bool {
        self.dominance_violations == 0
    }
    pub fn near_optimal_ok(&self) -> bool {
        self.near_optimal_fraction >= thresholds::NEAR_OPTIMAL_FRACTION
    }
    pub fn relaxation_ok(&self) -> bool {
        self.bound_violations == 0 && self.psd_violations == 0
    }
    pub fn grid_ok(&self) -> bool {
        self.grid.max_argument_error <= thresholds::GRID_ARG_TOL
            && self.grid.max_objective_shortfall <= thresholds::GRID_OBJ_TOL
    }
    pub fn traces_ok(&self) -> bool {
        self.non_monotone_traces == 0
    }
    pub fn passed(&self) -> bool {
        self.dominance_ok() && self.near_optimal_ok() && self.relaxation_ok() && self.grid_ok() && self.traces_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub rows: Vec<OracleRow>,
    pub summary: OracleSummary,
}

fn grid_argmax(params: &crate::scenario::UtilityParams, rate: f64, lo: f64, hi: f64) -> f64 {
    let steps = ((hi - lo) / thresholds::GRID_STEP).round() as usize;
    let mut best = (lo, per_user_objective(params, rate, lo));
    for k in 1..=steps {
        let d = (lo + k as f64 * thresholds::GRID_STEP).min(hi);
        let v = per_user_objective(params, rate, d);
        if v > best.1 {
            best = (d, v);
        }
    }
    best.0
}

/// Closed-form plans against a `1e-4` grid search on random pairs.
pub fn grid_check(pairs: usize, servers: usize, first_seed: u64) -> Result<GridCheck> {
    let results = (0..pairs as u64)
        .into_par_iter()
        .map(|k| {
            let seed = rng::derive(first_seed, 0x6_1D00 + k);
            let users = 1 + (k % 6) as usize;
            let omega = 0.25 + (k % 16) as f64 * 0.5;
            let s = generate_scenario(users, servers, seed, None)?.with_omega(omega);
            let mut r = rng::rng_from(seed);
            let a = Assignment {
                server_of: (0..users).map(|_| rand::Rng::random_range(&mut r, 0..servers)).collect(),
            };
            let plan = optimal_data_sizes(&s, &a)?;
            let mut grid = plan.clone();
            let mut arg_err: f64 = 0.0;
            for i in 0..users {
                let rate = s.downlink_rate[i][a.server_of[i]];
                grid.d[i] = grid_argmax(&s.utility_params, rate, s.d_min, s.d_max);
                arg_err = arg_err.max((grid.d[i] - plan.d[i]).abs());
            }
            let shortfall = evaluate(&s, &a, &grid)?.utility - evaluate(&s, &a, &plan)?.utility;
            Ok((arg_err, shortfall))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridCheck {
        pairs,
        max_argument_error: results.iter().map(|r| r.0).fold(0.0, f64::max),
        max_objective_shortfall: results.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max),
    })
}

fn oracle_row(config: &OracleConfig, seed: u64, users: usize) -> Result<OracleRow> {
    let s = generate_scenario(users, config.servers, seed, None)?;
    let opts = SolveOptions {
        seed,
        ..config.solve
    };
    let alt = optimizer::alternating_optimize(&s, &opts)?;
    let best = exhaustive_joint(&s)?;
    let random = baseline_random(&s, seed)?.metrics.utility;
    let denom = best.utility - random;
    let shifted_ratio = if denom.abs() <= 1e-12 {
        1.0
    } else {
        (alt.metrics.utility - random) / denom
    };

    // Relaxation bounds at the plan the loop started from and the plan it ended on.
    let initial = crate::association::greedy_assignment(&s, &crate::scenario::ResolutionPlan::uniform(&s, s.d_max))?;
    let plans = [optimal_data_sizes(&s, &initial)?, alt.plan.clone()];
    let mut bound_excess = f64::NEG_INFINITY;
    let mut min_eigenvalue = f64::INFINITY;
    for p in &plans {
        let qp = build_qcqp(&s, p)?;
        let sol = solve_sdp_relaxation_with(&qp, &config.solve.sdp)?;
        let exact = exhaustive_association(&s, p)?;
        let exact_lat = total_latency_unchecked(&s, &exact.server_of, &p.d);
        bound_excess = bound_excess.max(sol.lower_bound - exact_lat);
        min_eigenvalue = min_eigenvalue.min(sol.residuals.min_eigenvalue);
    }
    Ok(OracleRow {
        seed,
        users,
        servers: config.servers,
        alternating_utility: alt.metrics.utility,
        oracle_utility: best.utility,
        random_utility: random,
        shifted_ratio,
        bound_excess,
        min_eigenvalue,
        sdr_gap: alt.diagnostics.sdr_gap.unwrap_or(0.0),
        trace_monotone: alt.trace_is_monotone(),
    })
}

pub fn run_oracle_suite(config: &OracleConfig) -> Result<OracleReport> {
    if config.users.is_empty() || config.seeds == 0 || config.servers == 0 {
        return Err(Error::Usage("oracle suite needs user counts, servers and seeds".into()));
    }
    for &u in &config.users {
        let needed = (config.servers as f64).powi(u as i32);
        if u == 0 || needed > MAX_ENUMERATION as f64 {
            return Err(Error::Capacity {
                needed,
                bound: MAX_ENUMERATION,
            });
        }
    }
    let rows = (0..config.seeds)
        .into_par_iter()
        .map(|k| {
            let seed = config.first_seed + k as u64;
            oracle_row(config, seed, config.users[k % config.users.len()])
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = grid_check(config.grid_pairs, config.servers, config.first_seed)?;

    let near = rows
        .iter()
        .filter(|r| r.shifted_ratio >= thresholds::NEAR_OPTIMAL_RATIO)
        .count();
    let summary = OracleSummary {
        dominance_violations: rows
            .iter()
            .filter(|r| r.alternating_utility > r.oracle_utility + thresholds::DOMINANCE_TOL)
            .count(),
        near_optimal_fraction: near as f64 / rows.len() as f64,
        min_shifted_ratio: rows.iter().map(|r| r.shifted_ratio).fold(f64::INFINITY, f64::min),
        mean_shifted_ratio: rows.iter().map(|r| r.shifted_ratio).sum::<f64>() / rows.len() as f64,
        bound_violations: rows
            .iter()
            .filter(|r| r.bound_excess > thresholds::LOWER_BOUND_TOL)
            .count(),
        psd_violations: rows.iter().filter(|r| r.min_eigenvalue < thresholds::PSD_TOL).count(),
        non_monotone_traces: rows.iter().filter(|r| !r.trace_monotone).count(),
        grid,
    };
    Ok(OracleReport { rows, summary })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Per-seed CSV rows followed by `#`-prefixed summary lines.
pub fn write_oracle_report<W: Write>(report: &OracleReport, mut out: W) -> Result<()> {
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for r in &report.rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    let s = &report.summary;
    writeln!(
        out,
        "# dominance: {} of {} seeds exceed the exhaustive optimum by more than {:e} [{}]",
        s.dominance_violations,
        report.rows.len(),
        thresholds::DOMINANCE_TOL,
        verdict(s.dominance_ok())
    )?;
    writeln!(
        out,
        "# near-optimality: {:.3} of seeds reach shifted ratio >= {} (min {:.6}, mean {:.6}) [{}]",
        s.near_optimal_fraction,
        thresholds::NEAR_OPTIMAL_RATIO,
        s.min_shifted_ratio,
        s.mean_shifted_ratio,
        verdict(s.near_optimal_ok())
    )?;
    writeln!(
        out,
        "# relaxation: {} lower-bound violations, {} eigenvalue violations [{}]",
        s.bound_violations,
        s.psd_violations,
        verdict(s.relaxation_ok())
    )?;
    writeln!(
        out,
        "# data sizes: {} pairs, max argument error {:.3e}, max objective shortfall {:.3e} [{}]",
        s.grid.pairs,
        s.grid.max_argument_error,
        s.grid.max_objective_shortfall,
        verdict(s.grid_ok())
    )?;
    writeln!(
        out,
        "# traces: {} non-monotone [{}]",
        s.non_monotone_traces,
        verdict(s.traces_ok())
    )?;
    writeln!(out, "# overall: {}", verdict(s.passed()))?;
    Ok(())
}
