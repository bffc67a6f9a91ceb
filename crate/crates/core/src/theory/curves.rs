//! Thermodynamic-limit test error of the three estimators.
//!
//! With `f_alpha` the eigenvalue filter of an estimator and
//! `lambda = d / N`, the average test error is
//!
//! * spherical Gaussian design:
//!   `lambda ∫ [beta^2 (1 - x/f)^2 + sigma^2 x / f^2] dMP_lambda(x)`
//! * diagonal (Stiefel) design with spectral density `nu`:
//!   `lambda ∫ [beta^2 x (1 - x/f)^2 + sigma^2 x^2 / f^2] nu(dx)`
//!
//! Both are evaluated by adaptive quadrature. The spectral and nuclear
//! estimators on the spherical design also have closed forms, used to
//! cross-check the quadrature.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::density::SpectralDensity;
use crate::error::{Error, Result};
use crate::estimator::SchattenIndex;
use crate::theory::mp::MarchenkoPastur;
use crate::theory::quadrature::Quadrature;

/// Target accuracy of the quadrature-based error curves.
pub const ERROR_CURVE_ABS_TOL: f64 = 1e-9;

fn curve_quadrature() -> Quadrature {
    Quadrature {
        abs_tol: ERROR_CURVE_ABS_TOL * 1e-2,
        rel_tol: 1e-12,
        max_segments: 4000,
    }
}

/// `x / f_alpha(x)`, with the `0/0` limit at the origin taken as 1.
#[inline]
fn shrinkage(p: SchattenIndex, x: f64, alpha: f64) -> f64 {
    let f = p.filter(x, alpha);
    if f > 0.0 {
        x / f
    } else {
        1.0
    }
}

fn check_common(alpha: f64, beta: f64, sigma: f64) -> Result<()> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "alpha must be nonnegative, got {alpha}"
        )));
    }
    if !(beta >= 0.0 && sigma >= 0.0) {
        return Err(Error::InvalidArgument(
            "beta and sigma must be nonnegative".into(),
        ));
    }
    Ok(())
}

/// Spherical-design error by quadrature against the Marchenko–Pastur law.
pub fn err_spherical_quadrature(
    p: SchattenIndex,
    alpha: f64,
    lambda: f64,
    beta: f64,
    sigma: f64,
) -> Result<f64> {
    check_common(alpha, beta, sigma)?;
    let mp = MarchenkoPastur::new(lambda)?;
    let (b2, s2) = (beta * beta, sigma * sigma);
    let integrand = |x: f64| {
        let r = shrinkage(p, x, alpha);
        // sigma^2 x / f^2 = sigma^2 r^2 / x
        b2 * (1.0 - r).powi(2) + s2 * r * r / x
    };
    let kinks: &[f64] = if p == SchattenIndex::Nuclear {
        &[alpha]
    } else {
        &[]
    };
    let v = mp.integrate(integrand, mp.support_hi(), kinks, &curve_quadrature())?;
    Ok(lambda * v.max(0.0))
}

/// Closed-form spectral-estimator error
/// `(lambda beta^2 alpha^2 + lambda sigma^2 / (1 - lambda)) / (1 + alpha)^2`.
pub fn err_spectral_closed(alpha: f64, lambda: f64, beta: f64, sigma: f64) -> Result<f64> {
    check_common(alpha, beta, sigma)?;
    MarchenkoPastur::new(lambda)?;
    let t = if alpha.is_infinite() {
        1.0
    } else {
        alpha / (1.0 + alpha)
    };
    Ok(lambda * beta * beta * t * t + lambda * sigma * sigma / (1.0 - lambda) * (1.0 - t).powi(2))
}

/// Closed-form nuclear-estimator error on the spherical design.
///
/// Three branches: below the Marchenko–Pastur support the filter is inactive
/// (least-squares error); above it every eigenvalue is lifted to `alpha` and
/// the error is a rational function of `alpha` built from the first two MP
/// moments; inside the support the integral splits at `alpha` into truncated
/// moments `I(r, alpha)`, `r ∈ {-1, 0, 1, 2}`, each given by an Appell `F1`.
pub fn err_nuclear_closed(alpha: f64, lambda: f64, beta: f64, sigma: f64) -> Result<f64> {
    check_common(alpha, beta, sigma)?;
    let mp = MarchenkoPastur::new(lambda)?;
    let (b2, s2) = (beta * beta, sigma * sigma);
    let ols = s2 * lambda / (1.0 - lambda);
    if alpha <= mp.support_lo() {
        return Ok(ols);
    }
    if alpha.is_infinite() {
        return Ok(lambda * b2);
    }
    if alpha >= mp.support_hi() {
        // E[x] = 1 and E[x^2] = 1 + lambda under MP
        let a2 = alpha * alpha;
        return Ok(
            lambda * b2 - 2.0 * lambda * b2 / alpha + lambda * (b2 * (1.0 + lambda) + s2) / a2
        );
    }
    let i2 = mp.partial_moment(2, alpha)?;
    let i1 = mp.partial_moment(1, alpha)?;
    let i0 = mp.partial_moment(0, alpha)?;
    let im1 = mp.partial_moment(-1, alpha)?;
    let rest = b2 * i2 / (alpha * alpha) + (s2 / (alpha * alpha) - 2.0 * b2 / alpha) * i1
        - b2 * (1.0 - i0)
        + s2 * (1.0 / (1.0 - lambda) - im1);
    Ok(lambda * (b2 + rest))
}

/// Diagonal-design error by quadrature against `density`.
pub fn err_diagonal_quadrature(
    p: SchattenIndex,
    alpha: f64,
    lambda: f64,
    beta: f64,
    sigma: f64,
    density: &SpectralDensity,
) -> Result<f64> {
    check_common(alpha, beta, sigma)?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "aspect ratio must be positive, got {lambda}"
        )));
    }
    density.validate()?;
    let (b2, s2) = (beta * beta, sigma * sigma);
    let integrand = |x: f64| {
        let r = shrinkage(p, x, alpha);
        b2 * x * (1.0 - r).powi(2) + s2 * r * r
    };
    let kinks: &[f64] = if p == SchattenIndex::Nuclear {
        &[alpha]
    } else {
        &[]
    };
    let v = density.expectation(integrand, kinks, &curve_quadrature())?;
    Ok(lambda * v.max(0.0))
}

/// Ridge strength `sigma^2 / beta^2` that is optimal among all spectral filters.
pub fn oracle_ridge_alpha(beta: f64, sigma: f64) -> Result<f64> {
    if beta == 0.0 {
        return Err(Error::DivisionByZero(
            "oracle ridge strength needs beta > 0",
        ));
    }
    Ok(sigma * sigma / (beta * beta))
}

/// Random-matrix ensemble whose limiting test error is being evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum TheoryEnsemble {
    Spherical,
    Diagonal(SpectralDensity),
}

impl TheoryEnsemble {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Spherical => "spherical",
            Self::Diagonal(_) => "diagonal",
        }
    }
}

/// Parameters of a theoretical error curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModel {
    pub ensemble: TheoryEnsemble,
    pub lambda: f64,
    pub beta: f64,
    pub sigma: f64,
}

impl ErrorModel {
    pub fn spherical(lambda: f64, beta: f64, sigma: f64) -> Self {
        Self {
            ensemble: TheoryEnsemble::Spherical,
            lambda,
            beta,
            sigma,
        }
    }

    pub fn diagonal(lambda: f64, beta: f64, sigma: f64, density: SpectralDensity) -> Self {
        Self {
            ensemble: TheoryEnsemble::Diagonal(density),
            lambda,
            beta,
            sigma,
        }
    }

    /// Predicted test error at one `alpha`, by quadrature.
    pub fn error(&self, p: SchattenIndex, alpha: f64) -> Result<f64> {
        match &self.ensemble {
            TheoryEnsemble::Spherical => {
                err_spherical_quadrature(p, alpha, self.lambda, self.beta, self.sigma)
            }
            TheoryEnsemble::Diagonal(density) => {
                err_diagonal_quadrature(p, alpha, self.lambda, self.beta, self.sigma, density)
            }
        }
    }

    /// Error of the null estimator (`alpha -> infinity`).
    pub fn null_error(&self) -> f64 {
        let b2 = self.beta * self.beta;
        match &self.ensemble {
            TheoryEnsemble::Spherical => self.lambda * b2,
            TheoryEnsemble::Diagonal(density) => self.lambda * b2 * density.mean(),
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match &self.ensemble {
            TheoryEnsemble::Spherical => None,
            TheoryEnsemble::Diagonal(d) => d.gamma(),
        }
    }
}

/// Predicted error on a grid of `alpha` values for one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryCurve {
    pub p: SchattenIndex,
    pub ensemble: String,
    pub alphas: Vec<f64>,
    pub errors: Vec<f64>,
    pub lambda: f64,
    pub beta: f64,
    pub sigma: f64,
    pub gamma: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CurveRow {
    alpha: f64,
    error: f64,
    p: SchattenIndex,
    ensemble: String,
    lambda: f64,
    beta: f64,
    sigma: f64,
    gamma: Option<f64>,
}

/// Format with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_full(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

impl TheoryCurve {
    pub fn compute(model: &ErrorModel, p: SchattenIndex, alphas: &[f64]) -> Result<Self> {
        let errors = alphas
            .iter()
            .map(|&a| model.error(p, a))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            p,
            ensemble: model.ensemble.tag().to_string(),
            alphas: alphas.to_vec(),
            errors,
            lambda: model.lambda,
            beta: model.beta,
            sigma: model.sigma,
            gamma: model.gamma(),
        })
    }

    /// Write one or more curves as rows of
    /// `alpha,error,p,ensemble,lambda,beta,sigma,gamma`.
    pub fn write_csv<W: Write>(curves: &[TheoryCurve], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "alpha", "error", "p", "ensemble", "lambda", "beta", "sigma", "gamma",
        ])?;
        for c in curves {
            for (a, e) in c.alphas.iter().zip(&c.errors) {
                w.write_record([
                    fmt_full(*a),
                    fmt_full(*e),
                    c.p.name().to_string(),
                    c.ensemble.clone(),
                    fmt_full(c.lambda),
                    fmt_full(c.beta),
                    fmt_full(c.sigma),
                    c.gamma.map(fmt_full).unwrap_or_default(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Read curves written by [`TheoryCurve::write_csv`]; consecutive rows with
    /// the same metadata form one curve.
    pub fn read_csv<R: Read>(input: R) -> Result<Vec<TheoryCurve>> {
        let mut r = csv::Reader::from_reader(input);
        let mut curves: Vec<TheoryCurve> = Vec::new();
        for row in r.deserialize::<CurveRow>() {
            let row = row?;
            let same = curves.last().is_some_and(|c| {
                c.p == row.p
                    && c.ensemble == row.ensemble
                    && c.lambda == row.lambda
                    && c.beta == row.beta
                    && c.sigma == row.sigma
                    && c.gamma == row.gamma
            });
            if !same {
                curves.push(TheoryCurve {
                    p: row.p,
                    ensemble: row.ensemble.clone(),
                    alphas: Vec::new(),
                    errors: Vec::new(),
                    lambda: row.lambda,
                    beta: row.beta,
                    sigma: row.sigma,
                    gamma: row.gamma,
                });
            }
            let c = curves.last_mut().unwrap();
            c.alphas.push(row.alpha);
            c.errors.push(row.error);
        }
        Ok(curves)
    }
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ols_limit_for_every_estimator() {
        for p in SchattenIndex::ALL {
            let e = err_spherical_quadrature(p, 0.0, 0.5, 1.0, 1.0).unwrap();
            assert_relative_eq!(e, 1.0, epsilon = 1e-9);
        }
        assert_relative_eq!(
            err_spectral_closed(0.0, 0.3, 2.0, 1.5).unwrap(),
            0.3 * 2.25 / 0.7,
            epsilon = 1e-14
        );
    }

    #[test]
    fn spectral_closed_form_values() {
        assert_relative_eq!(
            err_spectral_closed(1.0, 0.5, 1.0, 1.0).unwrap(),
            0.375,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            err_spectral_closed(f64::INFINITY, 0.5, 1.3, 1.0).unwrap(),
            0.5 * 1.69
        );
        assert_relative_eq!(
            err_spectral_closed(1e12, 0.5, 1.3, 1.0).unwrap(),
            0.5 * 1.69,
            max_relative = 1e-10
        );
    }

    #[test]
    fn spectral_quadrature_matches_closed_form() {
        for lambda in [0.1, 0.5, 0.9] {
            for alpha in log_grid(1e-3, 1e5, 25) {
                let q = err_spherical_quadrature(SchattenIndex::Spectral, alpha, lambda, 1.0, 0.7)
                    .unwrap();
                let c = err_spectral_closed(alpha, lambda, 1.0, 0.7).unwrap();
                assert_relative_eq!(q, c, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn nuclear_branches() {
        let lambda = 0.5;
        let mp = MarchenkoPastur::new(lambda).unwrap();
        let below = err_nuclear_closed(mp.support_lo() / 2.0, lambda, 1.0, 1.0).unwrap();
        assert_eq!(below, 1.0);
        let q = err_spherical_quadrature(
            SchattenIndex::Nuclear,
            mp.support_lo() / 2.0,
            lambda,
            1.0,
            1.0,
        )
        .unwrap();
        assert_relative_eq!(q, 1.0, epsilon = 1e-9);
        let mid = err_nuclear_closed(1.2, lambda, 1.0, 1.0).unwrap();
        let q = err_spherical_quadrature(SchattenIndex::Nuclear, 1.2, lambda, 1.0, 1.0).unwrap();
        assert_relative_eq!(mid, q, epsilon = 1e-6);
        assert_relative_eq!(
            err_nuclear_closed(1e9, lambda, 1.0, 1.0).unwrap(),
            0.5,
            epsilon = 1e-8
        );
        assert_eq!(
            err_nuclear_closed(f64::INFINITY, lambda, 2.0, 1.0).unwrap(),
            2.0
        );
    }

    #[test]
    fn nuclear_upper_branch_carries_beta_squared() {
        let lambda = 0.3;
        let mp = MarchenkoPastur::new(lambda).unwrap();
        for beta in [0.5, 1.0, 2.5] {
            let a = mp.support_hi() * 1.7;
            let c = err_nuclear_closed(a, lambda, beta, 0.8).unwrap();
            let q = err_spherical_quadrature(SchattenIndex::Nuclear, a, lambda, beta, 0.8).unwrap();
            assert_relative_eq!(c, q, epsilon = 1e-9);
        }
    }

    #[test]
    fn nuclear_is_continuous_at_support_edges() {
        for lambda in [0.1, 0.5, 0.9] {
            let mp = MarchenkoPastur::new(lambda).unwrap();
            for edge in [mp.support_lo(), mp.support_hi()] {
                let eps = 1e-12 * edge;
                let l = err_nuclear_closed(edge - eps, lambda, 1.0, 0.5).unwrap();
                let r = err_nuclear_closed(edge + eps, lambda, 1.0, 0.5).unwrap();
                assert!(
                    (l - r).abs() < 1e-8,
                    "lambda {lambda} edge {edge}: {l} vs {r}"
                );
            }
        }
    }

    #[test]
    fn diagonal_limits() {
        let density = SpectralDensity::power_law(2.0).unwrap();
        for p in SchattenIndex::ALL {
            let e = err_diagonal_quadrature(p, 0.0, 0.5, 1.0, 0.7, &density).unwrap();
            assert_relative_eq!(e, 0.5 * 0.49, epsilon = 1e-10);
        }
        for p in [SchattenIndex::Nuclear, SchattenIndex::Frobenius] {
            let e = err_diagonal_quadrature(p, 1e9, 0.5, 1.0, 0.7, &density).unwrap();
            assert_relative_eq!(e, 0.5 * 2.0 / 3.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn oracle_ridge_values() {
        assert_eq!(oracle_ridge_alpha(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(oracle_ridge_alpha(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(oracle_ridge_alpha(2.0, 1.0).unwrap(), 0.25);
        assert!(matches!(
            oracle_ridge_alpha(0.0, 1.0),
            Err(Error::DivisionByZero(_))
        ));
    }

    #[test]
    fn ridge_minimum_dominates_on_a_grid() {
        let grid = log_grid(1e-3, 1e5, 200);
        let models = [
            ErrorModel::spherical(0.5, 1.0, 1.0),
            ErrorModel::spherical(0.2, 1.0, 2.0),
            ErrorModel::diagonal(0.5, 1.0, 0.5, SpectralDensity::power_law(2.0).unwrap()),
            ErrorModel::diagonal(0.5, 1.0, 1.0, SpectralDensity::power_law(0.5).unwrap()),
        ];
        for m in &models {
            let min = |p| {
                grid.iter()
                    .map(|a| m.error(p, *a).unwrap())
                    .fold(f64::INFINITY, f64::min)
            };
            let ridge = min(SchattenIndex::Frobenius);
            assert!(ridge <= min(SchattenIndex::Nuclear) + 1e-8);
            assert!(ridge <= min(SchattenIndex::Spectral) + 1e-8);
        }
    }

    #[test]
    fn curve_csv_round_trip() {
        let grid = log_grid(1e-2, 1e2, 7);
        let a = TheoryCurve::compute(
            &ErrorModel::spherical(0.5, 1.0, 1.0),
            SchattenIndex::Nuclear,
            &grid,
        )
        .unwrap();
        let b = TheoryCurve::compute(
            &ErrorModel::diagonal(0.5, 1.0, 0.5, SpectralDensity::power_law(2.0).unwrap()),
            SchattenIndex::Frobenius,
            &grid,
        )
        .unwrap();
        let mut buf = Vec::new();
        TheoryCurve::write_csv(&[a.clone(), b.clone()], &mut buf).unwrap();
        let back = TheoryCurve::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-4, 1e6, 9);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], 1e-4);
        assert_eq!(g[8], 1e6);
        assert_relative_eq!(g[4], 10.0, max_relative = 1e-14);
    }
}
