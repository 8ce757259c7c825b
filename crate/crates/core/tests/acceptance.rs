//! Acceptance suite. Runs every criterion at its pinned tolerance, prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use edgeverse::harness::{self, OracleConfig, SweepConfig};
use edgeverse::optimizer::{self, SolveOptions, Strategy};
use edgeverse::scenario::{generate_scenario, ScenarioOverrides};

struct Outcome {
    ok: bool,
    detail: String,
}

/// Solver runs seen so far, for the trace criterion.
#[derive(Default)]
struct Traces {
    runs: usize,
    non_monotone: usize,
}

impl Traces {
    fn record(&mut self, monotone: bool) {
        self.runs += 1;
        if !monotone {
            self.non_monotone += 1;
        }
    }
}

fn oracle_criteria(traces: &mut Traces) -> [Outcome; 3] {
    let started = Instant::now();
    let report = harness::run_oracle_suite(&OracleConfig::default()).expect("oracle suite");
    let secs = started.elapsed().as_secs_f64();
    for r in &report.rows {
        traces.record(r.trace_monotone);
    }
    let s = &report.summary;
    let c1 = s.dominance_ok() && s.near_optimal_ok();
    let c3 = s.relaxation_ok();
    let worst_eig = report.rows.iter().map(|r| r.min_eigenvalue).fold(f64::INFINITY, f64::min);
    let worst_excess = report.rows.iter().map(|r| r.bound_excess).fold(f64::NEG_INFINITY, f64::max);

    let started = Instant::now();
    let grid = harness::grid_check(100, 3, 0).expect("grid check");
    let grid_secs = started.elapsed().as_secs_f64();
    let c2 = grid.max_argument_error <= 1e-3 && grid.max_objective_shortfall <= 1e-6;
    [
        Outcome {
            ok: c1,
            detail: format!(
                "{} seeds, {} above optimum, {:.0}% with shifted ratio >= 0.9 (min {:.4}), {secs:.1}s",
                report.rows.len(),
                s.dominance_violations,
                100.0 * s.near_optimal_fraction,
                s.min_shifted_ratio
            ),
        },
        Outcome {
            ok: c2,
            detail: format!(
                "{} pairs, argument error {:.2e}, objective shortfall {:.2e}, {grid_secs:.2}s",
                grid.pairs, grid.max_argument_error, grid.max_objective_shortfall
            ),
        },
        Outcome {
            ok: c3,
            detail: format!(
                "max lower_bound - exhaustive {worst_excess:.2e}, min eigenvalue {worst_eig:.2e}"
            ),
        },
    ]
}

fn strategy_orderings(traces: &mut Traces) -> Outcome {
    let started = Instant::now();
    let cfg = SweepConfig::default();
    let mut cells = 0;
    let mut ordered = 0;
    let mut beats_random = 0;
    let mut per_omega = Vec::new();
    for &omega in &cfg.omegas {
        let (mut o_n, mut o_ord, mut o_rand) = (0, 0, 0);
        for &d_min in &cfg.d_mins {
            for seed in cfg.seed_list() {
                let run = |st| cfg.solve_cell(st, omega, d_min, seed).expect("solve").1;
                let prop = run(Strategy::OptimalLatencyEarning);
                let oe = run(Strategy::OptimalEarning);
                let ol = run(Strategy::OptimalLatency);
                let rnd = run(Strategy::Random);
                traces.record(prop.trace_is_monotone());
                let (lp, ep) = (prop.metrics.total_latency, prop.metrics.total_earning);
                let lat_order = oe.metrics.total_latency >= lp && lp >= ol.metrics.total_latency;
                let earn_order = oe.metrics.total_earning >= ep && ep >= ol.metrics.total_earning;
                o_n += 1;
                if lat_order && earn_order {
                    o_ord += 1;
                }
                if lp < rnd.metrics.total_latency && ep > rnd.metrics.total_earning {
                    o_rand += 1;
                }
            }
        }
        per_omega.push(format!("omega={omega}: ordering {o_ord}/{o_n}, beats random {o_rand}/{o_n}"));
        cells += o_n;
        ordered += o_ord;
        beats_random += o_rand;
    }
    let secs = started.elapsed().as_secs_f64();
    let ok = ordered as f64 >= 0.9 * cells as f64 && beats_random as f64 >= 0.8 * cells as f64 && secs < 600.0;
    Outcome {
        ok,
        detail: format!(
            "ordering {ordered}/{cells}, beats random {beats_random}/{cells} ({}), {secs:.1}s",
            per_omega.join("; ")
        ),
    }
}

fn omega_tradeoff(traces: &mut Traces) -> Outcome {
    let mut lat = [0.0; 2];
    let mut earn = [0.0; 2];
    let seeds = 30u64;
    for seed in 0..seeds {
        for (k, omega) in [2.0, 4.0].into_iter().enumerate() {
            let o = ScenarioOverrides {
                omega: Some(omega),
                ..Default::default()
            };
            let s = generate_scenario(100, 20, seed, Some(&o)).expect("scenario");
            let r = optimizer::alternating_optimize(&s, &SolveOptions { seed, ..Default::default() }).expect("solve");
            traces.record(r.trace_is_monotone());
            lat[k] += r.metrics.total_latency / (100.0 * seeds as f64);
            earn[k] += r.metrics.total_earning / seeds as f64;
        }
    }
    Outcome {
        ok: lat[1] < lat[0] && earn[1] < earn[0],
        detail: format!(
            "avg latency {:.4} -> {:.4}, earning {:.3} -> {:.3} (omega 2 -> 4)",
            lat[0], lat[1], earn[0], earn[1]
        ),
    }
}

fn csv_determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let run = |name: &str| {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_edgeverse"))
            .args(["sweep", "--users", "20", "--servers", "4", "--seeds", "3"])
            .args(["--omega", "2", "--omega", "4", "--dmin", "1", "--dmin", "3"])
            .arg("--out")
            .arg(&path)
            .status()
            .expect("run edgeverse");
        assert!(status.success(), "sweep exited with {status}");
        std::fs::read(&path).expect("read csv")
    };
    let a = run("a.csv");
    let b = run("b.csv");
    Outcome {
        ok: a == b && !a.is_empty(),
        detail: format!("{} bytes, {} lines", a.len(), a.iter().filter(|&&c| c == b'\n').count()),
    }
}

fn main() -> ExitCode {
    let mut traces = Traces::default();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let [c1, c2, c3] = oracle_criteria(&mut traces);
    results.push(("1 oracle dominance and near-optimality", c1));
    results.push(("2 closed-form data sizes vs grid search", c2));
    results.push(("3 relaxation lower bound validity", c3));
    results.push(("4 strategy orderings at 100 users, 20 servers", strategy_orderings(&mut traces)));
    results.push(("5 omega trade-off direction", omega_tradeoff(&mut traces)));
    results.push((
        "6 monotone utility traces",
        Outcome {
            ok: traces.non_monotone == 0,
            detail: format!("{} of {} runs non-monotone", traces.non_monotone, traces.runs),
        },
    ));
    results.push(("7 byte-identical sweep CSV", csv_determinism()));

    let mut all = true;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
        all &= o.ok;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
