//! Direct numeric solution of the bias-constrained variance minimization
//!
//! ```text
//! minimize  Tr(L L^T) / 2   subject to   ||L X - I||_p <= C
//! ```
//!
//! by ADMM on the split `B = L X - I`. The `L`-step is a ridge-type linear
//! solve and the `B`-step is a Euclidean projection onto the Schatten-p ball,
//! computed exactly from an SVD (soft-threshold for p = 1, rescaling for
//! p = 2, clipping for p = infinity). Nothing here uses the eigenvalue
//! filters of the closed-form estimators, so the two routes check each other.
//!
//! Only meant for small problems (N <= 32, d <= 8).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{check_finite, BiasBound, LinearOperator, SchattenIndex};
use crate::error::{Error, Result};

pub const MAX_ORACLE_OBS: usize = 32;
pub const MAX_ORACLE_FEAT: usize = 8;

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub max_iter: usize,
    /// Stopping tolerance on the primal and dual residuals (Frobenius norm,
    /// relative to `sqrt(d)`), and on the spread of restart objectives.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            max_iter: 200_000,
            tol: 1e-10,
            restarts: 5,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub operator: LinearOperator,
    /// `Tr(L L^T) / 2` at the returned operator.
    pub objective: f64,
    /// Objective reached by every restart, in order.
    pub restart_objectives: Vec<f64>,
    /// Iterations used by the best restart.
    pub iterations: usize,
}

/// Numerically solve for the minimal-variance operator with bias at most `bound`.
pub fn solve_bias_constrained_numeric(
    x: &DMatrix<f64>,
    bound: BiasBound,
    p: SchattenIndex,
    max_iter: usize,
    tol: f64,
) -> Result<LinearOperator> {
    let opts = OracleOptions {
        max_iter,
        tol,
        ..OracleOptions::default()
    };
    Ok(solve_detailed(x, bound, p, &opts)?.operator)
}

/// Same as [`solve_bias_constrained_numeric`] with full control and diagnostics.
pub fn solve_detailed(
    x: &DMatrix<f64>,
    bound: BiasBound,
    p: SchattenIndex,
    opts: &OracleOptions,
) -> Result<OracleSolution> {
    check_finite(x.iter(), "design matrix")?;
    let (n, d) = x.shape();
    if n == 0 || d == 0 || n > MAX_ORACLE_OBS || d > MAX_ORACLE_FEAT {
        return Err(Error::InvalidArgument(format!(
            "numeric oracle is limited to 1..={MAX_ORACLE_OBS} rows and 1..={MAX_ORACLE_FEAT} columns, got {n}x{d}"
        )));
    }
    if !(opts.tol > 0.0) || opts.restarts == 0 {
        return Err(Error::InvalidArgument(
            "tol must be positive and restarts >= 1".into(),
        ));
    }
    let c = bound.value();
    if c >= p.identity_norm(d) {
        return Ok(OracleSolution {
            operator: LinearOperator::zeros(d, n),
            objective: 0.0,
            restart_objectives: vec![0.0; opts.restarts],
            iterations: 0,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut runs = Vec::with_capacity(opts.restarts);
    for _ in 0..opts.restarts {
        let b0 = project_schatten_ball(&random_matrix(&mut rng, d), p, c);
        let w0 = random_matrix(&mut rng, d) * 0.1;
        runs.push(admm(x, p, c, b0, w0, opts)?);
    }
    let objectives: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let best = objectives
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let (entries, objective, iterations) = runs.swap_remove(best);
    Ok(OracleSolution {
        operator: LinearOperator::new(entries)?,
        objective,
        restart_objectives: objectives,
        iterations,
    })
}

fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// One ADMM run with adaptive penalty. Returns `(L, objective, iterations)`.
fn admm(
    x: &DMatrix<f64>,
    p: SchattenIndex,
    c: f64,
    mut b: DMatrix<f64>,
    mut w: DMatrix<f64>,
    opts: &OracleOptions,
) -> Result<(DMatrix<f64>, f64, usize)> {
    let d = x.ncols();
    let eye = DMatrix::<f64>::identity(d, d);
    let gram = x.tr_mul(x);
    let xt = x.transpose();
    let scale = (d as f64).sqrt();

    let trace = gram.trace() / d as f64;
    let mut rho = if trace > 0.0 { 1.0 / trace } else { 1.0 };
    let (rho_min, rho_max) = (rho * 1e-6, rho * 1e6);
    let mut solve = penalized_inverse(&gram, rho)?;
    let mut last_obj = f64::INFINITY;

    for it in 1..=opts.max_iter {
        // L = rho (I + B - W) (I + rho G)^{-1} X^T
        let m = &eye + &b - &w;
        let l = (&m * &solve) * &xt * rho;
        let lx = &l * x;
        let b_prev = b;
        b = project_schatten_ball(&(&lx - &eye + &w), p, c);
        let resid = &lx - &eye - &b;
        w += &resid;

        let primal = resid.norm() / scale;
        let dual = rho * ((&b - &b_prev) * &xt).norm() / scale;
        let obj = 0.5 * l.norm_squared();
        let obj_change = (obj - last_obj).abs() / obj.max(1e-300);
        last_obj = obj;
        if primal < opts.tol && dual < opts.tol && obj_change < opts.tol {
            return Ok((l, obj, it));
        }
        if it % 50 == 0 && primal.max(dual) > opts.tol {
            if primal > 10.0 * dual && rho < rho_max {
                rho *= 2.0;
                w /= 2.0;
                solve = penalized_inverse(&gram, rho)?;
            } else if dual > 10.0 * primal && rho > rho_min {
                rho /= 2.0;
                w *= 2.0;
                solve = penalized_inverse(&gram, rho)?;
            }
        }
        if it == opts.max_iter {
            return Err(Error::DidNotConverge {
                iterations: it,
                residual: primal.max(dual).max(obj_change),
            });
        }
    }
    unreachable!("max_iter >= 1 returns inside the loop")
}

fn penalized_inverse(gram: &DMatrix<f64>, rho: f64) -> Result<DMatrix<f64>> {
    let d = gram.nrows();
    (DMatrix::<f64>::identity(d, d) + gram * rho)
        .cholesky()
        .map(|ch| ch.inverse())
        .ok_or_else(|| {
            Error::InvalidArgument("penalized Gram matrix is not positive definite".into())
        })
}

/// Euclidean projection of a square matrix onto `{ M : ||M||_p <= radius }`.
pub fn project_schatten_ball(m: &DMatrix<f64>, p: SchattenIndex, radius: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let sv = &svd.singular_values;
    if p.norm_of_singular_values(sv.iter().copied()) <= radius {
        return m.clone();
    }
    let projected = project_vector_ball(sv, p, radius);
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");
    u * DMatrix::from_diagonal(&projected) * vt
}

/// Projection of a nonnegative vector onto the l_p ball of the given radius.
fn project_vector_ball(s: &DVector<f64>, p: SchattenIndex, radius: f64) -> DVector<f64> {
    if radius <= 0.0 {
        return DVector::zeros(s.len());
    }
    match p {
        SchattenIndex::Spectral => s.map(|v| v.min(radius)),
        SchattenIndex::Frobenius => {
            let norm = s.norm();
            if norm <= radius {
                s.clone()
            } else {
                s * (radius / norm)
            }
        }
        SchattenIndex::Nuclear => {
            if s.sum() <= radius {
                return s.clone();
            }
            let mut sorted: Vec<f64> = s.iter().copied().collect();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let mut cumsum = 0.0;
            let mut theta = 0.0;
            for (k, v) in sorted.iter().enumerate() {
                cumsum += v;
                let t = (cumsum - radius) / (k + 1) as f64;
                if *v > t {
                    theta = t;
                }
            }
            s.map(|v| (v - theta).max(0.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::operator_diagnostics;
    use approx::assert_relative_eq;

    #[test]
    fn vector_projections() {
        let s = DVector::from_vec(vec![3.0, 1.0, 0.5]);
        let l1 = project_vector_ball(&s, SchattenIndex::Nuclear, 2.0);
        assert_relative_eq!(l1.sum(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(l1, DVector::from_vec(vec![2.0, 0.0, 0.0]), epsilon = 1e-14);
        let l1 = project_vector_ball(&s, SchattenIndex::Nuclear, 3.5);
        assert_relative_eq!(
            l1,
            DVector::from_vec(vec![8.0 / 3.0, 2.0 / 3.0, 1.0 / 6.0]),
            epsilon = 1e-14
        );
        let l2 = project_vector_ball(&s, SchattenIndex::Frobenius, 1.0);
        assert_relative_eq!(l2.norm(), 1.0, epsilon = 1e-14);
        let linf = project_vector_ball(&s, SchattenIndex::Spectral, 0.8);
        assert_eq!(linf.as_slice(), &[0.8, 0.8, 0.5]);
    }

    #[test]
    fn projection_lands_in_ball() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 3.0, 0.2, 0.1, -2.0]);
        for p in SchattenIndex::ALL {
            let proj = project_schatten_ball(&m, p, 0.7);
            let norm = p.norm_of_singular_values(proj.singular_values().iter().copied());
            assert_relative_eq!(norm, 0.7, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_bound_recovers_least_squares() {
        let x =
            DMatrix::from_row_slice(5, 2, &[1.0, 0.3, -0.2, 1.1, 0.7, 0.4, 1.5, -0.9, 0.1, 0.8]);
        let ols = (x.tr_mul(&x)).try_inverse().unwrap() * x.transpose();
        for p in SchattenIndex::ALL {
            let l =
                solve_bias_constrained_numeric(&x, BiasBound::new(0.0).unwrap(), p, 200_000, 1e-11)
                    .unwrap();
            assert_relative_eq!(l.entries, ols, epsilon = 1e-6);
        }
    }

    #[test]
    fn large_bound_gives_zero_operator() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        for p in SchattenIndex::ALL {
            let c = BiasBound::new(p.identity_norm(2) + 0.1).unwrap();
            let l = solve_bias_constrained_numeric(&x, c, p, 10, 1e-8).unwrap();
            assert_eq!(l.entries, DMatrix::zeros(2, 3));
        }
    }

    #[test]
    fn solution_is_on_the_constraint_boundary() {
        let x = DMatrix::from_row_slice(
            6,
            3,
            &[
                0.9, -0.4, 0.3, 0.2, 1.1, -0.7, -1.3, 0.5, 0.8, 0.6, 0.6, 0.1, -0.2, -0.9, 1.4,
                1.0, 0.3, -0.5,
            ],
        );
        for p in SchattenIndex::ALL {
            let c = 0.4 * p.identity_norm(3);
            let l =
                solve_bias_constrained_numeric(&x, BiasBound::new(c).unwrap(), p, 200_000, 1e-10)
                    .unwrap();
            let (bias, _) = operator_diagnostics(&l, &x, p).unwrap();
            assert_relative_eq!(bias, c, max_relative = 1e-6);
        }
    }

    #[test]
    fn rejects_oversized_problem() {
        let x = DMatrix::<f64>::zeros(40, 3);
        let r = solve_bias_constrained_numeric(
            &x,
            BiasBound::new(0.1).unwrap(),
            SchattenIndex::Nuclear,
            10,
            1e-6,
        );
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn reports_non_convergence() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.2, 0.1, 1.0, 0.5, 0.5, -0.3, 0.7]);
        let r = solve_bias_constrained_numeric(
            &x,
            BiasBound::new(0.3).unwrap(),
            SchattenIndex::Nuclear,
            3,
            1e-12,
        );
        assert!(matches!(
            r,
            Err(Error::DidNotConverge { iterations: 3, .. })
        ));
    }
}
