use nalgebra::DMatrix;

use super::qcqp::Qcqp;
use crate::error::Result;
use crate::sdp::{self, Residuals, SdpOptions, SdpProblem, SymSparse};

/// Optimum of the lifted relaxation.
///
/// `y` is `(n + 1) x (n + 1)`; its last row and column hold the relaxed
/// assignment vector and its top-left block the relaxed `x x'`.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub y: DMatrix<f64>,
    /// Relaxed objective value, including the program's constant. A lower
    /// bound on the latency of every feasible assignment.
    pub lower_bound: f64,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl SdpSolution {
    /// Relaxed assignment vector (the border column without its last entry).
    pub fn mean(&self) -> Vec<f64> {
        let n = self.y.nrows() - 1;
        (0..n).map(|k| self.y[(k, n)]).collect()
    }
}

/// Lifted problem over `Y = [[X, x], [x', 1]]`:
///
/// ```text
/// minimize    <Q, X> + q'x
/// subject to  Y ⪰ 0,  Y[n][n] = 1
///             X[k][k] = x[k]                 (from x_k^2 = x_k)
///             sum_j x[(i, j)] = 1            for every free user i
/// ```
pub fn lifted_problem(qp: &Qcqp) -> SdpProblem {
    let n = qp.n;
    let dim = n + 1;
    let mut cost = DMatrix::zeros(dim, dim);
    cost.view_mut((0, 0), (n, n)).copy_from(&qp.quad);
    for k in 0..n {
        cost[(k, n)] = qp.linear[k] / 2.0;
        cost[(n, k)] = qp.linear[k] / 2.0;
    }

    let mut constraints = Vec::with_capacity(1 + n + qp.assignment_rows.len());
    let mut rhs = Vec::with_capacity(constraints.capacity());
    let mut corner = SymSparse::new();
    corner.push(n, n, 1.0);
    constraints.push(corner);
    rhs.push(1.0);
    for k in 0..n {
        let mut c = SymSparse::new();
        c.push(k, k, 1.0).push(k, n, -0.5);
        constraints.push(c);
        rhs.push(0.0);
    }
    for row in &qp.assignment_rows {
        let mut c = SymSparse::new();
        for &k in row {
            c.push(k, n, 0.5);
        }
        constraints.push(c);
        rhs.push(1.0);
    }
    SdpProblem {
        dim,
        cost,
        constraints,
        rhs,
    }
}

pub fn solve_sdp_relaxation(qp: &Qcqp) -> Result<SdpSolution> {
    solve_sdp_relaxation_with(qp, &SdpOptions::default())
}

pub fn solve_sdp_relaxation_with(qp: &Qcqp, opts: &SdpOptions) -> Result<SdpSolution> {
    // With one candidate server per user the feasible set is the single
    // all-ones matrix, which has no interior; answer it directly.
    if qp.assignment_rows.iter().all(|row| row.len() == 1) {
        let dim = qp.n + 1;
        let ones = vec![1.0; qp.n];
        return Ok(SdpSolution {
            y: DMatrix::from_element(dim, dim, 1.0),
            lower_bound: qp.objective(&ones),
            residuals: Residuals {
                min_eigenvalue: 0.0,
                ..Default::default()
            },
            iterations: 0,
        });
    }
    let problem = lifted_problem(qp);
    let out = sdp::solve(&problem, opts)?;
    Ok(SdpSolution {
        lower_bound: out.primal_objective + qp.constant,
        y: out.x,
        residuals: out.residuals,
        iterations: out.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::qcqp::build_qcqp;
    use crate::scenario::{generate_scenario, ResolutionPlan, Scenario, UtilityParams};

    fn tiny(n_users: usize, n_servers: usize) -> Scenario {
        Scenario {
            n_users,
            n_servers,
            uplink_rate: vec![vec![1.0; n_servers]; n_users],
            downlink_rate: vec![vec![1.0; n_servers]; n_users],
            uplink_size: vec![1.0; n_users],
            compute_demand: vec![100.0; n_users],
            compute_capacity: vec![1000.0; n_servers],
            d_min: 1.0,
            d_max: 10.0,
            utility_params: UtilityParams::default(),
        }
    }

    #[test]
    fn single_user_single_server_is_determined() {
        let s = tiny(1, 1);
        let qp = build_qcqp(&s, &ResolutionPlan { d: vec![1.0] }).unwrap();
        let sol = solve_sdp_relaxation(&qp).unwrap();
        assert!((sol.lower_bound - 2.1).abs() < 1e-12);
        assert!(sol.y.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn lifted_cost_reproduces_objective_on_rank_one_points() {
        let s = generate_scenario(3, 2, 5, None).unwrap();
        let qp = build_qcqp(&s, &ResolutionPlan::uniform(&s, 4.0)).unwrap();
        let problem = lifted_problem(&qp);
        let x = [1.0, 0.0, 0.0, 1.0, 1.0, 0.0];
        let mut v = x.to_vec();
        v.push(1.0);
        let y = nalgebra::DVector::from_vec(v);
        let lifted = (&problem.cost.component_mul(&(&y * y.transpose()))).sum();
        assert!((lifted - qp.objective(&x)).abs() < 1e-12);
        for (c, b) in problem.constraints.iter().zip(&problem.rhs) {
            let a = c.to_dense(problem.dim);
            let val = a.component_mul(&(&y * y.transpose())).sum();
            assert!((val - b).abs() < 1e-12);
        }
    }

    #[test]
    fn relaxation_satisfies_constraints() {
        let s = generate_scenario(3, 2, 8, None).unwrap();
        let qp = build_qcqp(&s, &ResolutionPlan::uniform(&s, 5.0)).unwrap();
        let sol = solve_sdp_relaxation(&qp).unwrap();
        let n = qp.n;
        assert!((sol.y[(n, n)] - 1.0).abs() < 1e-8);
        for k in 0..n {
            assert!((sol.y[(k, k)] - sol.y[(k, n)]).abs() < 1e-6);
        }
        for row in &qp.assignment_rows {
            let total: f64 = row.iter().map(|&k| sol.y[(k, n)]).sum();
            assert!((total - 1.0).abs() < 1e-6);
        }
        assert!(sol.residuals.min_eigenvalue >= -1e-7);
        assert!(sol.residuals.primal <= 1e-6);
        assert!(sol.residuals.dual <= 1e-6);
        assert!(sol.residuals.gap <= 1e-6);
    }
}
