//! Random Fourier features and the synthetic nonlinear target
//! `f(x) = sum_k cos(2 pi k <x, v_k>) / k^2`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensembles::{
    derive_seed, gaussian_matrix, gaussian_vector, rng_from, Dataset, DEFAULT_N_TEST,
};
use crate::error::{Error, Result};

/// Feature map `phi(x) = sqrt(2 / d_rbf) cos(W x + b)` approximating the
/// kernel `exp(-bandwidth |x - y|^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RffMap {
    /// `d_rbf x d`, rows `N(0, 2 bandwidth I)`.
    pub weights: DMatrix<f64>,
    /// Uniform on `[0, 2 pi)`.
    pub offsets: DVector<f64>,
    pub bandwidth: f64,
    pub seed: u64,
}

pub fn sample_rff_map(d: usize, d_rbf: usize, bandwidth: f64, seed: u64) -> Result<RffMap> {
    if d == 0 || d_rbf == 0 {
        return Err(Error::InvalidArgument(
            "input and feature dimensions must be at least 1".into(),
        ));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    let mut rng = rng_from(seed);
    let weights = gaussian_matrix(d_rbf, d, (2.0 * bandwidth).sqrt(), &mut rng);
    let offsets = DVector::from_fn(d_rbf, |_, _| 2.0 * PI * rng.random::<f64>());
    Ok(RffMap {
        weights,
        offsets,
        bandwidth,
        seed,
    })
}

impl RffMap {
    pub fn n_features(&self) -> usize {
        self.weights.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    /// Map each row of `x` (`rows x d`) to a row of features (`rows x d_rbf`).
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "input has {} columns, feature map expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        let scale = (2.0 / self.n_features() as f64).sqrt();
        let mut z = x * self.weights.transpose();
        for (j, mut col) in z.column_iter_mut().enumerate() {
            let b = self.offsets[j];
            col.apply(|v| *v = scale * (*v + b).cos());
        }
        Ok(z)
    }
}

/// Target `sum_{k=1}^{K} cos(2 pi k <x, v_k>) / k^2` with unit directions `v_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearTarget {
    pub directions: Vec<DVector<f64>>,
}

/// `terms` directions uniform on the unit sphere in dimension `d`.
pub fn sample_target<R: Rng + ?Sized>(d: usize, terms: usize, rng: &mut R) -> NonlinearTarget {
    let directions = (0..terms)
        .map(|_| loop {
            let v = gaussian_vector(d, 1.0, rng);
            let n = v.norm();
            if n > 0.0 {
                break v / n;
            }
        })
        .collect();
    NonlinearTarget { directions }
}

pub fn eval_target(target: &NonlinearTarget, x: &[f64]) -> f64 {
    target
        .directions
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let k = (i + 1) as f64;
            let proj: f64 = v.iter().zip(x).map(|(a, b)| a * b).sum();
            (2.0 * PI * k * proj).cos() / (k * k)
        })
        .sum()
}

/// Random-feature regression problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RffConfig {
    #[serde(default = "RffConfig::default_d")]
    pub d: usize,
    pub d_rbf: usize,
    #[serde(default = "RffConfig::default_n_obs")]
    pub n_obs: usize,
    #[serde(default = "RffConfig::default_n_test")]
    pub n_test: usize,
    pub sigma: f64,
    #[serde(default = "RffConfig::default_bandwidth")]
    pub bandwidth: f64,
}

impl RffConfig {
    fn default_d() -> usize {
        10
    }
    fn default_n_obs() -> usize {
        100
    }
    fn default_n_test() -> usize {
        DEFAULT_N_TEST
    }
    fn default_bandwidth() -> f64 {
        1.0
    }

    pub fn new(d_rbf: usize, sigma: f64) -> Self {
        Self {
            d: Self::default_d(),
            d_rbf,
            n_obs: Self::default_n_obs(),
            n_test: Self::default_n_test(),
            sigma,
            bandwidth: Self::default_bandwidth(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d_rbf == 0 || self.n_obs == 0 || self.n_test == 0 {
            return Err(Error::InvalidConfig(
                "d, d_rbf, n_obs and n_test must be at least 1".into(),
            ));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be nonnegative, got {}",
                self.sigma
            )));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        Ok(())
    }
}

/// Raw inputs with entries `N(0, 1/d_rbf)` pushed through one shared
/// feature map; training targets carry noise `sigma`, test targets do not.
pub fn make_rff_dataset(cfg: &RffConfig, seed: u64) -> Result<Dataset> {
    let (dataset, _, _) = make_rff_dataset_with_raw(cfg, seed)?;
    Ok(dataset)
}

/// As [`make_rff_dataset`], also returning the raw training and test inputs.
pub fn make_rff_dataset_with_raw(
    cfg: &RffConfig,
    seed: u64,
) -> Result<(Dataset, DMatrix<f64>, DMatrix<f64>)> {
    cfg.validate()?;
    let map = sample_rff_map(cfg.d, cfg.d_rbf, cfg.bandwidth, derive_seed(seed, 0))?;
    let mut rng = rng_from(derive_seed(seed, 1));
    let target = sample_target(cfg.d, cfg.d_rbf, &mut rng);
    let scale = 1.0 / (cfg.d_rbf as f64).sqrt();
    let raw_tr = gaussian_matrix(cfg.n_obs, cfg.d, scale, &mut rng);
    let raw_te = gaussian_matrix(cfg.n_test, cfg.d, scale, &mut rng);
    let noise = gaussian_vector(cfg.n_obs, cfg.sigma, &mut rng);
    let f = |x: &DMatrix<f64>| {
        DVector::from_iterator(
            x.nrows(),
            x.row_iter()
                .map(|r| eval_target(&target, &r.iter().copied().collect::<Vec<_>>())),
        )
    };
    let y_tr = f(&raw_tr) + noise;
    let y_te = f(&raw_te);
    let dataset = Dataset {
        x_tr: map.transform(&raw_tr)?,
        y_tr,
        x_te: map.transform(&raw_te)?,
        y_te,
        beta0: None,
        seed,
    };
    Ok((dataset, raw_tr, raw_te))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn map_is_seeded_and_bounded() {
        let a = sample_rff_map(3, 64, 1.0, 7).unwrap();
        assert_eq!(a, sample_rff_map(3, 64, 1.0, 7).unwrap());
        let x = DMatrix::from_row_slice(2, 3, &[0.1, -0.4, 2.0, 3.0, 0.0, 1.0]);
        let z = a.transform(&x).unwrap();
        assert_eq!(z, a.transform(&x).unwrap());
        let bound = (2.0f64 / 64.0).sqrt();
        assert!(z.iter().all(|v| v.abs() <= bound + 1e-15));
        assert!(a.offsets.iter().all(|b| (0.0..2.0 * PI).contains(b)));
    }

    #[test]
    fn target_special_cases() {
        let mut rng = rng_from(2);
        let t = sample_target(4, 6, &mut rng);
        let expected: f64 = (1..=6).map(|k| 1.0 / (k * k) as f64).sum();
        assert_relative_eq!(eval_target(&t, &[0.0; 4]), expected, epsilon = 1e-15);
        for v in &t.directions {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        let one = sample_target(4, 1, &mut rng);
        let x = [0.3, -0.2, 0.9, 0.1];
        let proj: f64 = one.directions[0].iter().zip(&x).map(|(a, b)| a * b).sum();
        assert_relative_eq!(eval_target(&one, &x), (2.0 * PI * proj).cos());
    }

    #[test]
    fn noiseless_training_targets_are_exact() {
        let cfg = RffConfig {
            n_test: 20,
            ..RffConfig::new(30, 0.0)
        };
        let (ds, raw_tr, _) = make_rff_dataset_with_raw(&cfg, 4).unwrap();
        let mut rng = rng_from(derive_seed(4, 1));
        let target = sample_target(cfg.d, cfg.d_rbf, &mut rng);
        for i in 0..cfg.n_obs {
            let row: Vec<f64> = raw_tr.row(i).iter().copied().collect();
            assert_eq!(ds.y_tr[i], eval_target(&target, &row));
        }
        assert!(ds.beta0.is_none());
        assert_eq!(ds.x_tr.shape(), (100, 30));
        assert_eq!(ds, make_rff_dataset(&cfg, 4).unwrap());
    }
}
