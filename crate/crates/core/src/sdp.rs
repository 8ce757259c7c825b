//! Small dense semidefinite programs in standard primal form
//!
//! ```text
//! minimize    <C, X>
//! subject to  <A_k, X> = b_k,   k = 0..m
//!             X ⪰ 0
//! ```
//!
//! solved by an infeasible-start primal-dual path-following method with the
//! HKM search direction and Mehrotra predictor-corrector steps. Constraint
//! matrices are sparse and symmetric; `X`, `Z` and the Schur complement are
//! dense. Intended for dimensions up to roughly a hundred.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse symmetric matrix given by its upper-triangle entries. An entry
/// `(i, j, v)` with `i != j` sets both `A[i][j]` and `A[j][i]` to `v`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymSparse {
    entries: Vec<(usize, usize, f64)>,
}

impl SymSparse {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) -> &mut Self {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.entries.push((i, j, v));
        self
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Both orientations of every off-diagonal entry.
    fn full(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(2 * self.entries.len());
        for &(i, j, v) in &self.entries {
            out.push((i, j, v));
            if i != j {
                out.push((j, i, v));
            }
        }
        out
    }

    pub fn to_dense(&self, dim: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(dim, dim);
        for (i, j, v) in self.full() {
            m[(i, j)] += v;
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub dim: usize,
    pub cost: DMatrix<f64>,
    pub constraints: Vec<SymSparse>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    /// Target for relative primal infeasibility, dual infeasibility and gap.
    pub tol: f64,
    /// Residual level below which a stalled run is still accepted.
    pub accept_tol: f64,
    pub max_iters: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            tol: 1e-9,
            accept_tol: 1e-6,
            max_iters: 500,
        }
    }
}

/// Convergence diagnostics at the returned iterate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `max_k |<A_k, X> - b_k|`.
    pub primal: f64,
    /// Frobenius norm of `C - sum_k y_k A_k - Z`.
    pub dual: f64,
    /// `|<C, X> - b'y|`.
    pub gap: f64,
    pub min_eigenvalue: f64,
}

impl fmt::Display for Residuals {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "primal {:.3e}, dual {:.3e}, gap {:.3e}, min eigenvalue {:.3e}",
            self.primal, self.dual, self.gap, self.min_eigenvalue
        )
    }
}

#[derive(Debug, Clone)]
pub struct SdpOutcome {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub z: DMatrix<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residuals: Residuals,
}

struct Operator {
    rows: Vec<Vec<(usize, usize, f64)>>,
    dim: usize,
}

impl Operator {
    fn new(p: &SdpProblem) -> Operator {
        Operator {
            rows: p.constraints.iter().map(SymSparse::full).collect(),
            dim: p.dim,
        }
    }

    /// `<A_k, W>` for every k; `W` need not be symmetric.
    fn apply(&self, w: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows
                .iter()
                .map(|row| row.iter().map(|&(a, b, v)| v * w[(a, b)]).sum::<f64>()),
        )
    }

    fn adjoint(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (row, &yk) in self.rows.iter().zip(y.iter()) {
            if yk == 0.0 {
                continue;
            }
            for &(a, b, v) in row {
                m[(a, b)] += yk * v;
            }
        }
        m
    }

    /// `M[k][l] = tr(A_k X A_l Z^-1)`.
    fn schur(&self, x: &DMatrix<f64>, zinv: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.rows.len();
        let mut out = DMatrix::zeros(m, m);
        for k in 0..m {
            for l in k..m {
                let mut acc = 0.0;
                for &(a, b, v) in &self.rows[k] {
                    for &(c, d, w) in &self.rows[l] {
                        acc += v * w * x[(b, c)] * zinv[(d, a)];
                    }
                }
                out[(k, l)] = acc;
                out[(l, k)] = acc;
            }
        }
        out
    }

    fn frobenius(&self, k: usize) -> f64 {
        self.rows[k].iter().map(|&(_, _, v)| v * v).sum::<f64>().sqrt()
    }
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(sym(m)).eigenvalues.min()
}

/// Largest step `alpha` with `x + alpha * dx ⪰ 0`, or infinity.
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(chol) = x.clone().cholesky() else {
        return 0.0;
    };
    let l = chol.l();
    let Some(linv) = l.clone().try_inverse() else {
        return 0.0;
    };
    let scaled = &linv * dx * linv.transpose();
    let lambda = min_eigenvalue(&scaled);
    if lambda >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lambda
    }
}

fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(c) = m.clone().cholesky() {
        return Some(c.solve(rhs));
    }
    let scale = m.diagonal().amax().max(1e-300);
    for shift in [1e-14, 1e-12, 1e-10] {
        let mut reg = m.clone();
        for k in 0..reg.nrows() {
            reg[(k, k)] += shift * scale;
        }
        if let Some(c) = reg.cholesky() {
            return Some(c.solve(rhs));
        }
    }
    m.clone().lu().solve(rhs)
}

struct State {
    x: DMatrix<f64>,
    y: DVector<f64>,
    z: DMatrix<f64>,
}

struct Measures {
    pinf: f64,
    dinf: f64,
    rel_gap: f64,
    residuals: Residuals,
    pobj: f64,
    dobj: f64,
}

fn measure(p: &SdpProblem, op: &Operator, b: &DVector<f64>, s: &State) -> Measures {
    let rp = b - op.apply(&s.x);
    let rd = &p.cost - op.adjoint(&s.y) - &s.z;
    let pobj = inner(&p.cost, &s.x);
    let dobj = b.dot(&s.y);
    let gap = (pobj - dobj).abs();
    let comp = inner(&s.x, &s.z).abs();
    let scale = 1.0 + pobj.abs() + dobj.abs();
    Measures {
        pinf: rp.norm() / (1.0 + b.norm()),
        dinf: rd.norm() / (1.0 + p.cost.norm()),
        rel_gap: gap.max(comp) / scale,
        residuals: Residuals {
            primal: rp.amax(),
            dual: rd.norm(),
            gap,
            min_eigenvalue: f64::NAN,
        },
        pobj,
        dobj,
    }
}

fn check_shapes(p: &SdpProblem) -> Result<()> {
    if p.cost.nrows() != p.dim || p.cost.ncols() != p.dim {
        return Err(Error::InvalidArgument(format!(
            "cost matrix is {}x{}, expected {}x{}",
            p.cost.nrows(),
            p.cost.ncols(),
            p.dim,
            p.dim
        )));
    }
    if p.constraints.len() != p.rhs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} constraint matrices but {} right-hand sides",
            p.constraints.len(),
            p.rhs.len()
        )));
    }
    for (k, c) in p.constraints.iter().enumerate() {
        if c.entries().iter().any(|&(_, j, _)| j >= p.dim) {
            return Err(Error::InvalidArgument(format!(
                "constraint {k} indexes outside the {}x{} variable",
                p.dim, p.dim
            )));
        }
    }
    Ok(())
}

pub fn solve(p: &SdpProblem, opts: &SdpOptions) -> Result<SdpOutcome> {
    check_shapes(p)?;
    let n = p.dim;
    let op = Operator::new(p);
    let b = DVector::from_column_slice(&p.rhs);
    let m = p.rhs.len();

    let sqrt_n = (n as f64).sqrt();
    let xi = (0..m)
        .map(|k| n as f64 * (1.0 + b[k].abs()) / (1.0 + op.frobenius(k)))
        .fold(10f64.max(sqrt_n), f64::max);
    let eta = (0..m)
        .map(|k| op.frobenius(k))
        .fold(10f64.max(sqrt_n).max(p.cost.norm()), f64::max);
    let mut st = State {
        x: DMatrix::identity(n, n) * xi,
        y: DVector::zeros(m),
        z: DMatrix::identity(n, n) * eta,
    };

    let finish = |st: State, meas: Measures, iterations: usize, converged: bool| {
        let mut residuals = meas.residuals;
        residuals.min_eigenvalue = min_eigenvalue(&st.x);
        SdpOutcome {
            x: st.x,
            y: st.y.iter().copied().collect(),
            z: st.z,
            primal_objective: meas.pobj,
            dual_objective: meas.dobj,
            iterations,
            converged,
            residuals,
        }
    };
    let acceptable = |meas: &Measures| {
        meas.pinf <= opts.accept_tol && meas.dinf <= opts.accept_tol && meas.rel_gap <= opts.accept_tol
    };
    let failure = |st: &State, meas: Measures, iterations: usize, reason: &str| {
        let mut residuals = meas.residuals;
        residuals.min_eigenvalue = min_eigenvalue(&st.x);
        Error::SolverFailure {
            reason: reason.to_string(),
            iterations,
            residuals,
        }
    };

    let identity = DMatrix::<f64>::identity(n, n);
    for iter in 0..opts.max_iters {
        let meas = measure(p, &op, &b, &st);
        if meas.pinf <= opts.tol && meas.dinf <= opts.tol && meas.rel_gap <= opts.tol {
            return Ok(finish(st, meas, iter, true));
        }

        let Some(zinv) = st.z.clone().cholesky().map(|c| c.inverse()) else {
            return if acceptable(&meas) {
                Ok(finish(st, meas, iter, false))
            } else {
                Err(failure(&st, meas, iter, "dual slack lost definiteness"))
            };
        };
        let zinv = sym(&zinv);
        let schur = op.schur(&st.x, &zinv);
        let rd = &p.cost - op.adjoint(&st.y) - &st.z;
        let x_rd_zinv = &st.x * &rd * &zinv;
        let base_rhs = &b + op.apply(&x_rd_zinv);
        let mu = inner(&st.x, &st.z) / n as f64;

        let direction = |g: Option<&DMatrix<f64>>| -> Option<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
            let rhs = match g {
                Some(g) => &base_rhs - op.apply(g),
                None => base_rhs.clone(),
            };
            let dy = solve_spd(&schur, &rhs)?;
            let dz = &rd - op.adjoint(&dy);
            let mut dx = -(&st.x) - &st.x * &dz * &zinv;
            if let Some(g) = g {
                dx += g;
            }
            Some((sym(&dx), dy, sym(&dz)))
        };

        // Predictor.
        let Some((dxp, _, dzp)) = direction(None) else {
            return if acceptable(&meas) {
                Ok(finish(st, meas, iter, false))
            } else {
                Err(failure(&st, meas, iter, "singular Schur complement"))
            };
        };
        let ap = max_step(&st.x, &dxp).min(1.0);
        let ad = max_step(&st.z, &dzp).min(1.0);
        let mu_aff = inner(&(&st.x + &dxp * ap), &(&st.z + &dzp * ad)) / n as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let g = (&identity * (sigma * mu) - &dxp * &dzp) * &zinv;
        let Some((dx, dy, dz)) = direction(Some(&g)) else {
            return if acceptable(&meas) {
                Ok(finish(st, meas, iter, false))
            } else {
                Err(failure(&st, meas, iter, "singular Schur complement"))
            };
        };
        let tau = 0.9 + 0.09 * ap.min(ad);
        let ap = (tau * max_step(&st.x, &dx)).min(1.0);
        let ad = (tau * max_step(&st.z, &dz)).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            return if acceptable(&meas) {
                Ok(finish(st, meas, iter, false))
            } else {
                Err(failure(&st, meas, iter, "step length collapsed"))
            };
        }
        st.x = sym(&(&st.x + dx * ap));
        st.y += dy * ad;
        st.z = sym(&(&st.z + dz * ad));
    }

    let meas = measure(p, &op, &b, &st);
    if acceptable(&meas) {
        Ok(finish(st, meas, opts.max_iters, false))
    } else {
        Err(failure(&st, meas, opts.max_iters, "iteration budget exhausted"))
    }
}
