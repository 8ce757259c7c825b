use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use super::qcqp::Qcqp;
use super::relax::SdpSolution;
use crate::error::{Error, Result};
use crate::model::total_latency_unchecked;
use crate::rng;
use crate::scenario::{Assignment, ResolutionPlan, Scenario};

/// Per-user argmax over each assignment row; ties go to the lowest server.
pub fn argmax_choices(qp: &Qcqp, x: &[f64]) -> Vec<usize> {
    qp.assignment_rows
        .iter()
        .map(|row| {
            let mut best = 0;
            for (pos, &k) in row.iter().enumerate() {
                if x[k] > x[row[best]] {
                    best = pos;
                }
            }
            best
        })
        .collect()
}

/// `F` with `F F' = Σ⁺`, where `Σ⁺` is `Σ` with negative eigenvalues clipped to zero.
fn covariance_factor(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (sigma + sigma.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    eig.eigenvectors * DMatrix::from_diagonal(&roots)
}

/// Gaussian randomization. Candidates are the relaxed mean itself followed
/// by `samples` draws from `N(mean, Y_xx - mean mean')`, each rounded by
/// per-user argmax; the candidate with the smallest model latency wins,
/// earliest first on ties. Trial `t` draws from its own stream derived
/// from `(seed, t)`.
pub fn round_solution(
    sol: &SdpSolution,
    qp: &Qcqp,
    s: &Scenario,
    p: &ResolutionPlan,
    samples: usize,
    seed: u64,
) -> Result<Assignment> {
    if samples == 0 {
        return Err(Error::InvalidArgument("rounding needs at least one sample".into()));
    }
    p.validate_for(s)?;
    let n = qp.n;
    if sol.y.nrows() != n + 1 || sol.y.ncols() != n + 1 {
        return Err(Error::InvalidArgument(format!(
            "relaxation matrix is {}x{}, expected {}x{}",
            sol.y.nrows(),
            sol.y.ncols(),
            n + 1,
            n + 1
        )));
    }

    let mean = DVector::from_vec(sol.mean());
    let sigma = sol.y.view((0, 0), (n, n)) - &mean * mean.transpose();
    let factor = covariance_factor(&sigma);

    let score = |choices: &[usize]| {
        let a = qp.decode(choices);
        let lat = total_latency_unchecked(s, &a.server_of, &p.d);
        (a, lat)
    };

    let (mut best, mut best_lat) = score(&argmax_choices(qp, mean.as_slice()));
    for t in 0..samples {
        let mut r = rng::rng_from(rng::derive(seed, t as u64));
        let xi = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut r));
        let draw = &mean + &factor * xi;
        let (a, lat) = score(&argmax_choices(qp, draw.as_slice()));
        if lat < best_lat {
            best = a;
            best_lat = lat;
        }
    }
    Ok(best)
}
