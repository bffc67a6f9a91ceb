//! Bias-constrained linear estimators.
//!
//! Every estimator here has the form `beta_hat = G_hat^{-1} X^T Y`, where
//! `G_hat` shares eigenvectors with the Gram matrix `G = X^T X` and its
//! eigenvalues are a pointwise filter of the eigenvalues of `G`:
//!
//! | index      | filter `f_alpha(s)` |
//! |------------|---------------------|
//! | Nuclear    | `max(s, alpha)`     |
//! | Frobenius  | `s + alpha`         |
//! | Spectral   | `(1 + alpha) s`     |
//!
//! Each filter is the minimal-variance linear estimator whose bias operator
//! `LX - I` has Schatten-p norm at most `C`, with `alpha` determined by `C`
//! (see [`alpha_to_bias_bound`] and [`bias_bound_to_alpha`]).

mod oracle;

pub use oracle::{
    project_schatten_ball, solve_bias_constrained_numeric, solve_detailed, OracleOptions,
    OracleSolution,
};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold below which Gram eigenvalues are treated as exactly zero.
pub const EIGEN_ZERO_RTOL: f64 = 1e-12;

/// Relative tolerance of the bisection in [`bias_bound_to_alpha`].
pub const BISECTION_RTOL: f64 = 1e-12;

/// Which Schatten norm bounds the bias operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchattenIndex {
    /// p = 1.
    Nuclear,
    /// p = 2; the resulting estimator is ridge regression.
    #[serde(rename = "ridge", alias = "frobenius")]
    Frobenius,
    /// p = infinity; scalar shrinkage of least squares.
    Spectral,
}

impl SchattenIndex {
    pub const ALL: [SchattenIndex; 3] = [Self::Nuclear, Self::Frobenius, Self::Spectral];

    /// Canonical short name, also used in CSV/JSON output.
    pub fn name(self) -> &'static str {
        match self {
            Self::Nuclear => "nuclear",
            Self::Frobenius => "ridge",
            Self::Spectral => "spectral",
        }
    }

    /// The exponent p, with `f64::INFINITY` for the spectral norm.
    pub fn exponent(self) -> f64 {
        match self {
            Self::Nuclear => 1.0,
            Self::Frobenius => 2.0,
            Self::Spectral => f64::INFINITY,
        }
    }

    /// Filtered Gram eigenvalue `f_alpha(s)`.
    #[inline]
    pub fn filter(self, s: f64, alpha: f64) -> f64 {
        match self {
            Self::Nuclear => s.max(alpha),
            Self::Frobenius => s + alpha,
            Self::Spectral => (1.0 + alpha) * s,
        }
    }

    /// Schatten-p norm of the identity in dimension `d`, i.e. `d^{1/p}`.
    pub fn identity_norm(self, d: usize) -> f64 {
        match self {
            Self::Nuclear => d as f64,
            Self::Frobenius => (d as f64).sqrt(),
            Self::Spectral => 1.0,
        }
    }

    /// Vector p-norm of a list of (nonnegative) singular values.
    pub fn norm_of_singular_values(self, values: impl IntoIterator<Item = f64>) -> f64 {
        let it = values.into_iter().map(f64::abs);
        match self {
            Self::Nuclear => it.sum(),
            Self::Frobenius => it.map(|v| v * v).sum::<f64>().sqrt(),
            Self::Spectral => it.fold(0.0, f64::max),
        }
    }
}

impl fmt::Display for SchattenIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchattenIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nuclear" | "1" | "p1" => Ok(Self::Nuclear),
            "ridge" | "frobenius" | "2" | "p2" => Ok(Self::Frobenius),
            "spectral" | "inf" | "pinf" => Ok(Self::Spectral),
            other => Err(Error::InvalidArgument(format!(
                "unknown estimator `{other}`"
            ))),
        }
    }
}

/// Upper bound `C` on the Schatten norm of the bias operator.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BiasBound(f64);

impl BiasBound {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "bias bound must be nonnegative, got {value}"
            )));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Eigendecomposition of the Gram matrix `X^T X`.
///
/// `eigvals` always has length `n_feat` and is sorted in descending order,
/// with numerically-zero eigenvalues set to exactly zero. `eigvecs` has
/// orthonormal columns matching the leading entries of `eigvals`; it always
/// spans the row space of `X` and is square when `n_obs >= n_feat`.
#[derive(Debug, Clone)]
pub struct GramSpectrum {
    eigvecs: DMatrix<f64>,
    eigvals: DVector<f64>,
    n_obs: usize,
    n_feat: usize,
}

impl GramSpectrum {
    /// Decompose the Gram matrix of a design matrix `x` (N rows, d columns).
    ///
    /// When `N < d` the smaller matrix `X X^T` is decomposed and mapped back.
    pub fn from_design(x: &DMatrix<f64>) -> Result<Self> {
        check_finite(x.iter(), "design matrix")?;
        let (n_obs, n_feat) = x.shape();
        if n_obs == 0 || n_feat == 0 {
            return Err(Error::DimensionMismatch("empty design matrix".into()));
        }
        if n_obs >= n_feat {
            let gram = x.tr_mul(x);
            let eig = SymmetricEigen::new(gram);
            let order = descending_order(eig.eigenvalues.as_slice());
            let max = eig.eigenvalues.max().max(0.0);
            let eigvals = DVector::from_iterator(
                n_feat,
                order.iter().map(|&i| zero_small(eig.eigenvalues[i], max)),
            );
            let eigvecs = DMatrix::from_fn(n_feat, n_feat, |r, c| eig.eigenvectors[(r, order[c])]);
            Ok(Self {
                eigvecs,
                eigvals,
                n_obs,
                n_feat,
            })
        } else {
            let outer = x * x.transpose();
            let eig = SymmetricEigen::new(outer);
            let order = descending_order(eig.eigenvalues.as_slice());
            let max = eig.eigenvalues.max().max(0.0);
            let kept: Vec<(usize, f64)> = order
                .iter()
                .map(|&i| (i, zero_small(eig.eigenvalues[i], max)))
                .filter(|&(_, v)| v > 0.0)
                .collect();
            let mut eigvecs = DMatrix::zeros(n_feat, kept.len());
            for (c, &(i, v)) in kept.iter().enumerate() {
                let col = x.tr_mul(&eig.eigenvectors.column(i)) / v.sqrt();
                eigvecs.set_column(c, &col);
            }
            let mut eigvals = DVector::zeros(n_feat);
            for (c, &(_, v)) in kept.iter().enumerate() {
                eigvals[c] = v;
            }
            Ok(Self {
                eigvecs,
                eigvals,
                n_obs,
                n_feat,
            })
        }
    }

    /// Build a spectrum directly from eigenvectors and eigenvalues.
    ///
    /// Eigenvalues are sorted into descending order (with the matching
    /// eigenvector columns) and must be nonnegative.
    pub fn from_parts(eigvecs: DMatrix<f64>, eigvals: DVector<f64>, n_obs: usize) -> Result<Self> {
        let n_feat = eigvals.len();
        if eigvecs.nrows() != n_feat || eigvecs.ncols() > n_feat {
            return Err(Error::DimensionMismatch(format!(
                "eigvecs {}x{} incompatible with {} eigenvalues",
                eigvecs.nrows(),
                eigvecs.ncols(),
                n_feat
            )));
        }
        if eigvals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "eigenvalues must be finite and nonnegative".into(),
            ));
        }
        let k = eigvecs.ncols();
        let order = descending_order(&eigvals.as_slice()[..k]);
        let mut sorted = eigvals.clone();
        for (c, &i) in order.iter().enumerate() {
            sorted[c] = eigvals[i];
        }
        let eigvecs = DMatrix::from_fn(n_feat, k, |r, c| eigvecs[(r, order[c])]);
        Ok(Self {
            eigvecs,
            eigvals: sorted,
            n_obs,
            n_feat,
        })
    }

    /// Spectrum of a diagonal Gram matrix with the given eigenvalues.
    pub fn diagonal(eigvals: &[f64], n_obs: usize) -> Result<Self> {
        let d = eigvals.len();
        Self::from_parts(
            DMatrix::identity(d, d),
            DVector::from_column_slice(eigvals),
            n_obs,
        )
    }

    pub fn eigvecs(&self) -> &DMatrix<f64> {
        &self.eigvecs
    }

    pub fn eigvals(&self) -> &DVector<f64> {
        &self.eigvals
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_feat(&self) -> usize {
        self.n_feat
    }

    /// Number of strictly positive eigenvalues.
    pub fn rank(&self) -> usize {
        self.eigvals.iter().filter(|v| **v > 0.0).count()
    }
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

fn zero_small(v: f64, max: f64) -> f64 {
    if v <= EIGEN_ZERO_RTOL * max {
        0.0
    } else {
        v
    }
}

pub(crate) fn check_finite<'a>(
    values: impl IntoIterator<Item = &'a f64>,
    what: &'static str,
) -> Result<()> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_nan() || alpha < 0.0 {
        Err(Error::InvalidArgument(format!(
            "alpha must be nonnegative, got {alpha}"
        )))
    } else {
        Ok(())
    }
}

/// Eigenvalues of `G_hat` for the given estimator and regularization.
pub fn filtered_gram_eigvals(
    spectrum: &GramSpectrum,
    p: SchattenIndex,
    alpha: f64,
) -> DVector<f64> {
    spectrum.eigvals.map(|s| p.filter(s, alpha))
}

/// Options controlling [`fit_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions {
    /// Reject rank-deficient designs for the spectral estimator instead of
    /// falling back to the minimum-norm least-squares direction.
    pub strict: bool,
}

/// A fitted estimator.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub p: SchattenIndex,
    /// Regularization strength; `f64::INFINITY` means the zero estimator.
    pub alpha: f64,
    pub beta_hat: DVector<f64>,
    pub spectrum: Arc<GramSpectrum>,
}

/// Precomputed pieces of a regression problem that every estimator and
/// every `alpha` share: the Gram spectrum and `U^T X^T Y`.
#[derive(Debug, Clone)]
pub struct SpectralSolver {
    spectrum: Arc<GramSpectrum>,
    projected: DVector<f64>,
}

impl SpectralSolver {
    pub fn new(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "X has {} rows but Y has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        check_finite(y.iter(), "response vector")?;
        let spectrum = GramSpectrum::from_design(x)?;
        let xty = x.tr_mul(y);
        let projected = spectrum.eigvecs.tr_mul(&xty);
        Ok(Self {
            spectrum: Arc::new(spectrum),
            projected,
        })
    }

    pub fn spectrum(&self) -> &Arc<GramSpectrum> {
        &self.spectrum
    }

    /// Coefficient vector `U diag(1/f_alpha) U^T X^T Y`.
    pub fn coefficients(
        &self,
        p: SchattenIndex,
        alpha: f64,
        opts: FitOptions,
    ) -> Result<DVector<f64>> {
        check_alpha(alpha)?;
        let d = self.spectrum.n_feat;
        if opts.strict && p == SchattenIndex::Spectral && self.spectrum.rank() < d {
            return Err(Error::SingularGram {
                rank: self.spectrum.rank(),
                n_feat: d,
            });
        }
        if alpha == f64::INFINITY {
            return Ok(DVector::zeros(d));
        }
        let weights = DVector::from_iterator(
            self.projected.len(),
            self.projected.iter().enumerate().map(|(i, z)| {
                let f = p.filter(self.spectrum.eigvals[i], alpha);
                if f > 0.0 {
                    z / f
                } else {
                    0.0
                }
            }),
        );
        Ok(&self.spectrum.eigvecs * weights)
    }

    pub fn fit(&self, p: SchattenIndex, alpha: f64, opts: FitOptions) -> Result<FittedModel> {
        let beta_hat = self.coefficients(p, alpha, opts)?;
        Ok(FittedModel {
            p,
            alpha,
            beta_hat,
            spectrum: Arc::clone(&self.spectrum),
        })
    }
}

/// Fit the bias-constrained estimator with index `p` at regularization `alpha`.
pub fn fit(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    p: SchattenIndex,
    alpha: f64,
) -> Result<FittedModel> {
    fit_with(x, y, p, alpha, FitOptions::default())
}

pub fn fit_with(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    p: SchattenIndex,
    alpha: f64,
    opts: FitOptions,
) -> Result<FittedModel> {
    check_alpha(alpha)?;
    SpectralSolver::new(x, y)?.fit(p, alpha, opts)
}

/// Predictions `X_test * beta_hat`.
pub fn predict(model: &FittedModel, x_test: &DMatrix<f64>) -> Result<DVector<f64>> {
    if x_test.ncols() != model.beta_hat.len() {
        return Err(Error::DimensionMismatch(format!(
            "test matrix has {} columns, model has {} coefficients",
            x_test.ncols(),
            model.beta_hat.len()
        )));
    }
    Ok(x_test * &model.beta_hat)
}

impl FittedModel {
    pub fn predict(&self, x_test: &DMatrix<f64>) -> Result<DVector<f64>> {
        predict(self, x_test)
    }
}

/// Schatten-p norm of the bias operator for the estimator fitted at `alpha`.
///
/// The spectrum should have strictly positive eigenvalues; zero eigenvalues
/// contribute a full unit of bias for every `alpha`, including zero.
pub fn alpha_to_bias_bound(spectrum: &GramSpectrum, p: SchattenIndex, alpha: f64) -> BiasBound {
    let d = spectrum.n_feat;
    if alpha == f64::INFINITY {
        return BiasBound(p.identity_norm(d));
    }
    let value = match p {
        SchattenIndex::Nuclear => spectrum
            .eigvals
            .iter()
            .filter(|&&s| s < alpha || s == 0.0)
            .fold(0.0, |acc, &s| acc + 1.0 - s / alpha.max(f64::MIN_POSITIVE)),
        SchattenIndex::Frobenius => spectrum
            .eigvals
            .iter()
            .map(|&s| {
                if s + alpha > 0.0 {
                    (alpha / (s + alpha)).powi(2)
                } else {
                    1.0
                }
            })
            .sum::<f64>()
            .sqrt(),
        SchattenIndex::Spectral => {
            if spectrum.eigvals.iter().any(|&s| s == 0.0) {
                1.0
            } else {
                alpha / (1.0 + alpha)
            }
        }
    };
    BiasBound(value.clamp(0.0, p.identity_norm(d)))
}

/// Regularization strength whose estimator has bias norm exactly `bound`.
///
/// Returns `f64::INFINITY` (the zero estimator) when `bound >= d^{1/p}`.
pub fn bias_bound_to_alpha(spectrum: &GramSpectrum, p: SchattenIndex, bound: BiasBound) -> f64 {
    let c = bound.value();
    if c >= p.identity_norm(spectrum.n_feat) {
        return f64::INFINITY;
    }
    if c == 0.0 {
        return 0.0;
    }
    if p == SchattenIndex::Spectral {
        return c / (1.0 - c);
    }
    let g = |a: f64| alpha_to_bias_bound(spectrum, p, a).value();
    let scale = spectrum.eigvals.max().max(1.0);
    let mut hi = scale;
    while g(hi) < c {
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    while hi - lo > BISECTION_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid) < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A linear estimator `beta_hat = L Y`, stored as the d-by-N matrix `L`.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    pub entries: DMatrix<f64>,
}

impl LinearOperator {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        check_finite(entries.iter(), "linear operator")?;
        Ok(Self { entries })
    }

    pub fn zeros(d: usize, n: usize) -> Self {
        Self {
            entries: DMatrix::zeros(d, n),
        }
    }

    /// The closed-form operator `G_hat^{-1} X^T`.
    pub fn closed_form(x: &DMatrix<f64>, p: SchattenIndex, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let spectrum = GramSpectrum::from_design(x)?;
        let (n, d) = x.shape();
        if alpha == f64::INFINITY {
            return Ok(Self::zeros(d, n));
        }
        let inv = filtered_gram_eigvals(&spectrum, p, alpha)
            .rows(0, spectrum.eigvecs.ncols())
            .map(|f| if f > 0.0 { 1.0 / f } else { 0.0 });
        let u = &spectrum.eigvecs;
        let ut_xt = u.tr_mul(&x.transpose());
        let scaled = DMatrix::from_fn(ut_xt.nrows(), n, |r, c| ut_xt[(r, c)] * inv[r]);
        Self::new(u * scaled)
    }
}

/// Schatten-p norm of `LX - I` and the variance objective `Tr(L L^T) / 2`.
pub fn operator_diagnostics(
    op: &LinearOperator,
    x: &DMatrix<f64>,
    p: SchattenIndex,
) -> Result<(f64, f64)> {
    let l = &op.entries;
    if l.ncols() != x.nrows() || l.nrows() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{} but design is {}x{}",
            l.nrows(),
            l.ncols(),
            x.nrows(),
            x.ncols()
        )));
    }
    let d = x.ncols();
    let bias = l * x - DMatrix::<f64>::identity(d, d);
    let sv = bias.singular_values();
    let bias_norm = p.norm_of_singular_values(sv.iter().copied());
    let variance_trace = 0.5 * l.norm_squared();
    Ok((bias_norm, variance_trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sqrt_diagonal_design() -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            10,
            (1..=10).map(|i| (i as f64).sqrt()),
        ))
    }

    #[test]
    fn nuclear_filter_on_fig1_matrix() {
        let spec = GramSpectrum::from_design(&sqrt_diagonal_design()).unwrap();
        let got = filtered_gram_eigvals(&spec, SchattenIndex::Nuclear, 5.0);
        let want = [10.0, 9.0, 8.0, 7.0, 6.0, 5.0, 5.0, 5.0, 5.0, 5.0];
        for (g, w) in got.iter().zip(want) {
            assert_relative_eq!(*g, w, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_alpha_leaves_eigvals_unchanged() {
        let spec = GramSpectrum::diagonal(&[3.0, 2.0, 0.5], 5).unwrap();
        for p in SchattenIndex::ALL {
            assert_eq!(filtered_gram_eigvals(&spec, p, 0.0), *spec.eigvals());
        }
    }

    #[test]
    fn ridge_filter_is_additive() {
        let spec = GramSpectrum::diagonal(&[2.0, 1.0], 2).unwrap();
        let got = filtered_gram_eigvals(&spec, SchattenIndex::Frobenius, 0.5);
        assert_eq!(got.as_slice(), &[2.5, 1.5]);
    }

    #[test]
    fn identity_design_recovers_targets() {
        let x = DMatrix::<f64>::identity(4, 4);
        let y = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        for p in SchattenIndex::ALL {
            let m = fit(&x, &y, p, 0.0).unwrap();
            assert_relative_eq!(m.beta_hat, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn spectral_halves_noiseless_fit_at_alpha_one() {
        let x = sqrt_diagonal_design();
        let beta0 = DVector::from_iterator(10, (0..10).map(|i| (i as f64) - 4.5));
        let y = &x * &beta0;
        let m = fit(&x, &y, SchattenIndex::Spectral, 1.0).unwrap();
        assert_relative_eq!(m.beta_hat, &beta0 / 2.0, epsilon = 1e-12);

        let row = DMatrix::from_row_slice(
            1,
            10,
            &[0.3, -1.0, 2.0, 0.0, 0.5, 1.5, -0.25, 0.0, 1.0, -2.0],
        );
        let pred = predict(&m, &row).unwrap();
        let want = (row.row(0) * &beta0)[0] / 2.0;
        assert_relative_eq!(pred[0], want, epsilon = 1e-12);
    }

    #[test]
    fn predict_trivial_cases() {
        let x = sqrt_diagonal_design();
        let y = DVector::from_element(10, 1.0);
        let mut m = fit(&x, &y, SchattenIndex::Frobenius, 0.3).unwrap();
        let eye = DMatrix::<f64>::identity(10, 10);
        assert_eq!(predict(&m, &eye).unwrap(), m.beta_hat);
        m.beta_hat.fill(0.0);
        assert_eq!(predict(&m, &x).unwrap(), DVector::zeros(10));
        let bad = DMatrix::<f64>::zeros(3, 4);
        assert!(matches!(
            predict(&m, &bad),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn alpha_bias_examples() {
        let spec = GramSpectrum::from_design(&sqrt_diagonal_design()).unwrap();
        assert_relative_eq!(
            alpha_to_bias_bound(&spec, SchattenIndex::Spectral, 1.0).value(),
            0.5
        );
        assert_relative_eq!(
            alpha_to_bias_bound(&spec, SchattenIndex::Nuclear, 5.0).value(),
            2.0,
            epsilon = 1e-12
        );
        for p in SchattenIndex::ALL {
            assert_eq!(alpha_to_bias_bound(&spec, p, 0.0).value(), 0.0);
        }
        let c = BiasBound::new(0.5).unwrap();
        assert_relative_eq!(
            bias_bound_to_alpha(&spec, SchattenIndex::Spectral, c),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn large_bound_gives_infinite_alpha() {
        let spec = GramSpectrum::from_design(&sqrt_diagonal_design()).unwrap();
        for p in SchattenIndex::ALL {
            let c = BiasBound::new(p.identity_norm(10)).unwrap();
            assert_eq!(bias_bound_to_alpha(&spec, p, c), f64::INFINITY);
            let c = BiasBound::new(p.identity_norm(10) * 1.5).unwrap();
            assert_eq!(bias_bound_to_alpha(&spec, p, c), f64::INFINITY);
        }
    }

    #[test]
    fn bias_bound_round_trip() {
        // smallest eigenvalue below every test alpha keeps the nuclear map strictly monotone
        let spec = GramSpectrum::diagonal(&[500.0, 120.0, 3.0, 0.4, 0.001], 10).unwrap();
        for p in SchattenIndex::ALL {
            for alpha in [0.01, 1.0, 100.0] {
                let c = alpha_to_bias_bound(&spec, p, alpha);
                let back = bias_bound_to_alpha(&spec, p, c);
                assert_relative_eq!(back, alpha, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn diagnostics_trivial_operators() {
        let x = sqrt_diagonal_design();
        for p in SchattenIndex::ALL {
            let (b, v) = operator_diagnostics(&LinearOperator::zeros(10, 10), &x, p).unwrap();
            assert_relative_eq!(b, p.identity_norm(10), epsilon = 1e-12);
            assert_eq!(v, 0.0);
            let ols = LinearOperator::closed_form(&x, p, 0.0).unwrap();
            let (b, _) = operator_diagnostics(&ols, &x, p).unwrap();
            assert!(b < 1e-12);
        }
        let l = LinearOperator::closed_form(&x, SchattenIndex::Spectral, 1.0).unwrap();
        let (b, _) = operator_diagnostics(&l, &x, SchattenIndex::Spectral).unwrap();
        assert_relative_eq!(b, 0.5, epsilon = 1e-12);
        let wrong = DMatrix::<f64>::zeros(3, 3);
        assert!(operator_diagnostics(&l, &wrong, SchattenIndex::Spectral).is_err());
    }

    #[test]
    fn bias_norm_matches_alpha_map() {
        let x = sqrt_diagonal_design();
        for p in SchattenIndex::ALL {
            for alpha in [0.3, 2.0, 7.5, 40.0] {
                let spec = GramSpectrum::from_design(&x).unwrap();
                let l = LinearOperator::closed_form(&x, p, alpha).unwrap();
                let (b, _) = operator_diagnostics(&l, &x, p).unwrap();
                assert_relative_eq!(
                    b,
                    alpha_to_bias_bound(&spec, p, alpha).value(),
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn frontier_is_monotone_along_alpha_sweep() {
        let x = sqrt_diagonal_design();
        for p in SchattenIndex::ALL {
            let mut last = (f64::NEG_INFINITY, f64::INFINITY);
            for k in 0..60 {
                let alpha = 10f64.powf(-2.0 + k as f64 * 0.07);
                let l = LinearOperator::closed_form(&x, p, alpha).unwrap();
                let (b, v) = operator_diagnostics(&l, &x, p).unwrap();
                assert!(b >= last.0 - 1e-12 && v <= last.1 + 1e-12);
                last = (b, v);
            }
        }
    }

    #[test]
    fn each_estimator_is_variance_optimal_for_its_own_norm() {
        // at matched Schatten-q bias, the q-estimator has the smallest variance
        let x = sqrt_diagonal_design();
        let spec = GramSpectrum::from_design(&x).unwrap();
        for q in SchattenIndex::ALL {
            for frac in [0.1, 0.3, 0.5, 0.8] {
                let c = BiasBound::new(frac * q.identity_norm(10)).unwrap();
                let mut variances = Vec::new();
                for p in SchattenIndex::ALL {
                    // find alpha for p whose q-norm bias equals c
                    let qbias = |a: f64| {
                        let l = LinearOperator::closed_form(&x, p, a).unwrap();
                        operator_diagnostics(&l, &x, q).unwrap().0
                    };
                    let (mut lo, mut hi) = (0.0, 1.0);
                    while qbias(hi) < c.value() {
                        hi *= 2.0;
                    }
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if qbias(mid) < c.value() {
                            lo = mid
                        } else {
                            hi = mid
                        }
                    }
                    let l = LinearOperator::closed_form(&x, p, hi).unwrap();
                    variances.push((p, operator_diagnostics(&l, &x, q).unwrap().1));
                }
                let own = variances.iter().find(|(p, _)| *p == q).unwrap().1;
                for (_, v) in &variances {
                    assert!(own <= v + 1e-9, "{q}: {own} > {v}");
                }
                let _ = bias_bound_to_alpha(&spec, q, c);
            }
        }
    }

    #[test]
    fn rank_deficient_design() {
        // 2 observations, 4 features
        let x = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 2.0, -1.0, 0.5, 1.0, 0.0, 1.0]);
        let y = DVector::from_vec(vec![1.0, 2.0]);
        let spec = GramSpectrum::from_design(&x).unwrap();
        assert_eq!(spec.rank(), 2);
        assert_eq!(spec.eigvals().len(), 4);
        assert!(matches!(
            fit_with(
                &x,
                &y,
                SchattenIndex::Spectral,
                0.5,
                FitOptions { strict: true }
            ),
            Err(Error::SingularGram { rank: 2, n_feat: 4 })
        ));
        let m = fit(&x, &y, SchattenIndex::Spectral, 0.0).unwrap();
        // minimum-norm interpolant
        assert_relative_eq!(&x * &m.beta_hat, y, epsilon = 1e-10);
        let pinv = x.clone().pseudo_inverse(1e-12).unwrap();
        assert_relative_eq!(m.beta_hat, &pinv * &y, epsilon = 1e-10);
        let half = fit(&x, &y, SchattenIndex::Spectral, 1.0).unwrap();
        assert_relative_eq!(half.beta_hat, &pinv * &y / 2.0, epsilon = 1e-10);
        for p in [SchattenIndex::Nuclear, SchattenIndex::Frobenius] {
            let m = fit(&x, &y, p, 0.2).unwrap();
            assert!(m.beta_hat.iter().all(|v| v.is_finite()));
        }
        // ridge through the small-side decomposition equals the direct formula
        let r = fit(&x, &y, SchattenIndex::Frobenius, 0.2).unwrap();
        let direct = (x.tr_mul(&x) + DMatrix::<f64>::identity(4, 4) * 0.2)
            .try_inverse()
            .unwrap()
            * x.tr_mul(&y);
        assert_relative_eq!(r.beta_hat, direct, epsilon = 1e-10);
    }

    #[test]
    fn infinite_alpha_is_zero_estimator() {
        let x = sqrt_diagonal_design();
        let y = DVector::from_element(10, 2.0);
        for p in SchattenIndex::ALL {
            let m = fit(&x, &y, p, f64::INFINITY).unwrap();
            assert_eq!(m.beta_hat, DVector::zeros(10));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut x = sqrt_diagonal_design();
        let y = DVector::from_element(10, 1.0);
        assert!(fit(&x, &y, SchattenIndex::Nuclear, -1.0).is_err());
        assert!(fit(&x, &y, SchattenIndex::Nuclear, f64::NAN).is_err());
        x[(0, 0)] = f64::NAN;
        assert!(matches!(
            fit(&x, &y, SchattenIndex::Nuclear, 1.0),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn parses_names() {
        assert_eq!(
            "Ridge".parse::<SchattenIndex>().unwrap(),
            SchattenIndex::Frobenius
        );
        assert_eq!(
            "frobenius".parse::<SchattenIndex>().unwrap(),
            SchattenIndex::Frobenius
        );
        assert!("lasso".parse::<SchattenIndex>().is_err());
        let json = serde_json::to_string(&SchattenIndex::Frobenius).unwrap();
        assert_eq!(json, "\"ridge\"");
    }
}
