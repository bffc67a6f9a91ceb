//! Synthetic train/test generators.
//!
//! All samplers are pure functions of `(config, seed)`; replicate `i` of an
//! experiment uses [`derive_seed`]`(master, i)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::density::SpectralDensity;
use crate::error::{Error, Result};
use crate::estimator::FittedModel;
use crate::theory::curves::fmt_full;

/// Test-set size used when none is given.
pub const DEFAULT_N_TEST: usize = 5000;

/// One step of the splitmix64 generator.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replicate `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

pub(crate) fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn gaussian_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    scale: f64,
    rng: &mut R,
) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

pub(crate) fn gaussian_vector<R: Rng + ?Sized>(
    len: usize,
    scale: f64,
    rng: &mut R,
) -> DVector<f64> {
    DVector::from_fn(len, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

fn check_sizes(n_obs: usize, n_feat: usize) -> Result<()> {
    if n_obs == 0 || n_feat == 0 {
        return Err(Error::InvalidConfig(
            "n_obs and n_feat must be at least 1".into(),
        ));
    }
    Ok(())
}

fn check_scale(v: f64, name: &str) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "{name} must be finite and nonnegative, got {v}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphericalGaussianConfig {
    pub n_obs: usize,
    pub n_feat: usize,
    pub beta: f64,
    pub sigma: f64,
}

impl SphericalGaussianConfig {
    pub fn validate(&self) -> Result<()> {
        check_sizes(self.n_obs, self.n_feat)?;
        check_scale(self.beta, "beta")?;
        check_scale(self.sigma, "sigma")
    }

    pub fn lambda(&self) -> f64 {
        self.n_feat as f64 / self.n_obs as f64
    }
}

/// Multiplicative noise on the training eigenvalues; always unit mean.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseDensity {
    #[default]
    PointMass,
    /// Uniform on `[1 - half_width, 1 + half_width]`.
    Uniform { half_width: f64 },
}

impl NoiseDensity {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::PointMass => Ok(()),
            Self::Uniform { half_width } if (0.0..1.0).contains(half_width) => Ok(()),
            Self::Uniform { half_width } => Err(Error::InvalidConfig(format!(
                "uniform noise half width must lie in [0, 1), got {half_width}"
            ))),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::PointMass => 1.0,
            Self::Uniform { half_width } => 1.0 + half_width * (2.0 * rng.random::<f64>() - 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalEnsembleConfig {
    pub n_obs: usize,
    pub n_feat: usize,
    pub spectral_density: SpectralDensity,
    #[serde(default)]
    pub noise_density: NoiseDensity,
    pub beta: f64,
    pub sigma: f64,
}

impl DiagonalEnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        check_sizes(self.n_obs, self.n_feat)?;
        if self.n_feat > self.n_obs {
            return Err(Error::InvalidConfig(format!(
                "diagonal ensemble needs n_feat <= n_obs, got {} > {}",
                self.n_feat, self.n_obs
            )));
        }
        self.spectral_density.validate()?;
        self.noise_density.validate()?;
        check_scale(self.beta, "beta")?;
        check_scale(self.sigma, "sigma")
    }

    pub fn lambda(&self) -> f64 {
        self.n_feat as f64 / self.n_obs as f64
    }
}

/// Sparse coefficient recipe: `n_large` coordinates chosen from the first
/// `pool` are standard normal, the rest are scaled by `small_scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseSpec {
    #[serde(default = "SparseSpec::default_n_large")]
    pub n_large: usize,
    #[serde(default = "SparseSpec::default_pool")]
    pub pool: usize,
    #[serde(default = "SparseSpec::default_small_scale")]
    pub small_scale: f64,
}

impl SparseSpec {
    fn default_n_large() -> usize {
        3
    }
    fn default_pool() -> usize {
        10
    }
    fn default_small_scale() -> f64 {
        0.1
    }
}

impl Default for SparseSpec {
    fn default() -> Self {
        Self {
            n_large: 3,
            pool: 10,
            small_scale: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquicorrelatedConfig {
    pub n_obs: usize,
    pub n_feat: usize,
    pub rho: f64,
    pub sigma: f64,
    #[serde(default)]
    pub sparse: Option<SparseSpec>,
}

impl EquicorrelatedConfig {
    pub fn validate(&self) -> Result<()> {
        check_sizes(self.n_obs, self.n_feat)?;
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidConfig(format!(
                "rho must lie in [0, 1), got {}",
                self.rho
            )));
        }
        if let Some(s) = &self.sparse {
            if s.n_large == 0 || s.pool == 0 {
                return Err(Error::InvalidConfig(
                    "sparse spec needs n_large and pool >= 1".into(),
                ));
            }
            check_scale(s.small_scale, "small_scale")?;
        }
        check_scale(self.sigma, "sigma")
    }
}

/// A train/test split. `beta0` is `None` when the data have no linear
/// ground truth (random-feature data).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x_tr: DMatrix<f64>,
    pub y_tr: DVector<f64>,
    pub x_te: DMatrix<f64>,
    pub y_te: DVector<f64>,
    pub beta0: Option<DVector<f64>>,
    pub seed: u64,
}

impl Dataset {
    pub fn n_obs(&self) -> usize {
        self.x_tr.nrows()
    }

    pub fn n_feat(&self) -> usize {
        self.x_tr.ncols()
    }

    pub fn write_train_csv<W: Write>(&self, out: W) -> Result<()> {
        write_xy_csv(&self.x_tr, &self.y_tr, out)
    }

    pub fn write_test_csv<W: Write>(&self, out: W) -> Result<()> {
        write_xy_csv(&self.x_te, &self.y_te, out)
    }
}

/// Write a design matrix and target as CSV with header `x1,...,xd,y`.
pub fn write_xy_csv<W: Write>(x: &DMatrix<f64>, y: &DVector<f64>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    w.write_record(&header)?;
    for i in 0..x.nrows() {
        let mut rec: Vec<String> = x.row(i).iter().map(|v| fmt_full(*v)).collect();
        rec.push(fmt_full(y[i]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Spherical Gaussian design: entries `N(0, 1/N)` for train and test rows,
/// `beta0 ~ N(0, beta^2 I)`, noiseless test targets.
pub fn sample_spherical(
    config: &SphericalGaussianConfig,
    n_test: usize,
    seed: u64,
) -> Result<Dataset> {
    config.validate()?;
    let (n, d) = (config.n_obs, config.n_feat);
    let mut rng = rng_from(seed);
    let scale = 1.0 / (n as f64).sqrt();
    let beta0 = gaussian_vector(d, config.beta, &mut rng);
    let x_tr = gaussian_matrix(n, d, scale, &mut rng);
    let noise = gaussian_vector(n, config.sigma, &mut rng);
    let x_te = gaussian_matrix(n_test, d, scale, &mut rng);
    let y_tr = &x_tr * &beta0 + noise;
    let y_te = &x_te * &beta0;
    Ok(Dataset {
        x_tr,
        y_tr,
        x_te,
        y_te,
        beta0: Some(beta0),
        seed,
    })
}

/// Haar-distributed `n x d` matrix with orthonormal columns.
pub fn sample_stiefel<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> DMatrix<f64> {
    let qr = gaussian_matrix(n, d, 1.0, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Diagonal ensemble: `X_tr = X1 diag(sqrt(l_i s_i))`, `X_te = X2 diag(sqrt(l_i))`
/// with independent Stiefel frames `X1, X2`, `l_i ~ spectral density`,
/// `s_i ~ noise density`. The test set has `N` rows.
pub fn sample_diagonal(config: &DiagonalEnsembleConfig, seed: u64) -> Result<Dataset> {
    config.validate()?;
    let (n, d) = (config.n_obs, config.n_feat);
    let mut rng = rng_from(seed);
    let eig = config.spectral_density.sample_n(d, &mut rng);
    let mult: Vec<f64> = (0..d)
        .map(|_| config.noise_density.sample(&mut rng))
        .collect();
    let beta0 = gaussian_vector(d, config.beta, &mut rng);
    let mut x_tr = sample_stiefel(n, d, &mut rng);
    let mut x_te = sample_stiefel(n, d, &mut rng);
    for j in 0..d {
        x_tr.column_mut(j).scale_mut((eig[j] * mult[j]).sqrt());
        x_te.column_mut(j).scale_mut(eig[j].sqrt());
    }
    let noise = gaussian_vector(n, config.sigma, &mut rng);
    let y_tr = &x_tr * &beta0 + noise;
    let y_te = &x_te * &beta0;
    Ok(Dataset {
        x_tr,
        y_tr,
        x_te,
        y_te,
        beta0: Some(beta0),
        seed,
    })
}

fn equicorrelated_rows<R: Rng + ?Sized>(
    rows: usize,
    d: usize,
    rho: f64,
    rng: &mut R,
) -> DMatrix<f64> {
    let (a, b) = ((1.0 - rho).sqrt(), rho.sqrt());
    let mut x = gaussian_matrix(rows, d, a, rng);
    let shared = gaussian_vector(rows, b, rng);
    for mut col in x.column_iter_mut() {
        col += &shared;
    }
    x
}

/// Rows `N(0, (1 - rho) I + rho 11^T)`, `beta0 ~ N(0, I)` or the sparse
/// recipe, noiseless test targets.
pub fn sample_equicorrelated(
    config: &EquicorrelatedConfig,
    n_test: usize,
    seed: u64,
) -> Result<Dataset> {
    config.validate()?;
    let (n, d) = (config.n_obs, config.n_feat);
    let mut rng = rng_from(seed);
    let beta0 = match &config.sparse {
        None => gaussian_vector(d, 1.0, &mut rng),
        Some(spec) => {
            let mut b = gaussian_vector(d, spec.small_scale, &mut rng);
            let pool = spec.pool.min(d);
            for i in index::sample(&mut rng, pool, spec.n_large.min(pool)) {
                b[i] = StandardNormal.sample(&mut rng);
            }
            b
        }
    };
    let x_tr = equicorrelated_rows(n, d, config.rho, &mut rng);
    let noise = gaussian_vector(n, config.sigma, &mut rng);
    let x_te = equicorrelated_rows(n_test, d, config.rho, &mut rng);
    let y_tr = &x_tr * &beta0 + noise;
    let y_te = &x_te * &beta0;
    Ok(Dataset {
        x_tr,
        y_tr,
        x_te,
        y_te,
        beta0: Some(beta0),
        seed,
    })
}

/// A synthetic generator together with its test-set size.
#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleConfig {
    Spherical {
        config: SphericalGaussianConfig,
        n_test: usize,
    },
    Diagonal(DiagonalEnsembleConfig),
    Equicorrelated {
        config: EquicorrelatedConfig,
        n_test: usize,
    },
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Spherical { config, .. } => config.validate(),
            Self::Diagonal(config) => config.validate(),
            Self::Equicorrelated { config, .. } => config.validate(),
        }
    }

    pub fn sample(&self, seed: u64) -> Result<Dataset> {
        match self {
            Self::Spherical { config, n_test } => sample_spherical(config, *n_test, seed),
            Self::Diagonal(config) => sample_diagonal(config, seed),
            Self::Equicorrelated { config, n_test } => sample_equicorrelated(config, *n_test, seed),
        }
    }
}

/// Mean squared prediction error on the test set.
pub fn empirical_mse(model: &FittedModel, dataset: &Dataset) -> Result<f64> {
    let pred = model.predict(&dataset.x_te)?;
    mse(&pred, &dataset.y_te)
}

pub(crate) fn mse(pred: &DVector<f64>, target: &DVector<f64>) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} targets",
            pred.len(),
            target.len()
        )));
    }
    if target.is_empty() {
        return Err(Error::DimensionMismatch("empty test set".into()));
    }
    Ok((pred - target).norm_squared() / target.len() as f64)
}
