//! TOML experiment configuration.
//!
//! One file may hold sections for several commands; each command reads its
//! own section and falls back to defaults when the section is absent.
//! Unknown keys are rejected everywhere.
//!
//! ```toml
//! seed = 7
//! format = "csv"
//!
//! [cv_bench]
//! ensemble = { kind = "equicorrelated", n_obs = 100, n_feat = 50, rho = 0.0, sigma = 2.0 }
//! cv = { n_datasets = 100, models = ["nuclear", "ridge", "spectral"] }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basin::LogGrid;
use crate::cv::CvConfig;
use crate::density::SpectralDensity;
use crate::ensembles::{
    DiagonalEnsembleConfig, EnsembleConfig, EquicorrelatedConfig, NoiseDensity, SparseSpec,
    SphericalGaussianConfig, DEFAULT_N_TEST,
};
use crate::error::{Error, Result};
use crate::estimator::SchattenIndex;
use crate::rff::RffConfig;
use crate::theory::curves::ErrorModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }

    pub fn other(self) -> Self {
        match self {
            Self::Csv => Self::Json,
            Self::Json => Self::Csv,
        }
    }
}

fn default_estimators() -> Vec<SchattenIndex> {
    SchattenIndex::ALL.to_vec()
}
fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn default_n_test() -> usize {
    DEFAULT_N_TEST
}

/// Which limiting ensemble a theoretical curve refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TheoryKind {
    #[default]
    Spherical,
    Diagonal,
}

/// Parameters of a limiting error curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub ensemble: TheoryKind,
    #[serde(default = "half")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    /// Spectral density of the diagonal ensemble (power law `gamma = 2` if absent).
    #[serde(default)]
    pub density: Option<SpectralDensity>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            ensemble: TheoryKind::Spherical,
            lambda: 0.5,
            beta: 1.0,
            sigma: 1.0,
            density: None,
        }
    }
}

impl ModelSpec {
    pub fn density_or_default(&self) -> SpectralDensity {
        self.density
            .clone()
            .unwrap_or(SpectralDensity::PowerLaw { gamma: 2.0 })
    }

    pub fn error_model(&self) -> Result<ErrorModel> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::Config(format!(
                "lambda must lie in (0, 1), got {}",
                self.lambda
            )));
        }
        if !(self.beta >= 0.0 && self.sigma >= 0.0) {
            return Err(Error::Config("beta and sigma must be nonnegative".into()));
        }
        Ok(match self.ensemble {
            TheoryKind::Spherical => ErrorModel::spherical(self.lambda, self.beta, self.sigma),
            TheoryKind::Diagonal => {
                let d = self.density_or_default();
                d.validate()?;
                ErrorModel::diagonal(self.lambda, self.beta, self.sigma, d)
            }
        })
    }
}

/// Explicit `alphas` win over `grid`; with neither, `fallback` is used.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSpec {
    #[serde(default)]
    pub alphas: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: Option<LogGrid>,
}

impl AlphaSpec {
    pub fn resolve(&self, fallback: LogGrid) -> Result<Vec<f64>> {
        let values = match (&self.alphas, &self.grid) {
            (Some(a), _) => a.clone(),
            (None, Some(g)) => {
                g.validate().map_err(|e| Error::Config(e.to_string()))?;
                g.points()
            }
            (None, None) => fallback.points(),
        };
        if values.is_empty() {
            return Err(Error::Config("alpha grid is empty".into()));
        }
        if values.iter().any(|a| a.is_nan() || *a < 0.0) {
            return Err(Error::Config("alpha values must be nonnegative".into()));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryCurveSection {
    #[serde(default)]
    pub ensemble: TheoryKind,
    #[serde(default = "half")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default)]
    pub density: Option<SpectralDensity>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<SchattenIndex>,
    #[serde(default)]
    pub alphas: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: Option<LogGrid>,
}

impl TheoryCurveSection {
    /// Grid used when neither `alphas` nor `grid` is given.
    pub const DEFAULT_GRID: LogGrid = LogGrid {
        lo: 1e-3,
        hi: 1e5,
        count: 100,
    };

    pub fn model(&self) -> ModelSpec {
        ModelSpec {
            ensemble: self.ensemble,
            lambda: self.lambda,
            beta: self.beta,
            sigma: self.sigma,
            density: self.density.clone(),
        }
    }

    pub fn alpha_values(&self) -> Result<Vec<f64>> {
        AlphaSpec {
            alphas: self.alphas.clone(),
            grid: self.grid,
        }
        .resolve(Self::DEFAULT_GRID)
    }
}

impl Default for TheoryCurveSection {
    fn default() -> Self {
        Self {
            ensemble: TheoryKind::Spherical,
            lambda: 0.5,
            beta: 1.0,
            sigma: 1.0,
            density: None,
            estimators: default_estimators(),
            alphas: None,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    #[serde(default)]
    pub ensemble: TheoryKind,
    #[serde(default = "half")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default)]
    pub density: Option<SpectralDensity>,
    #[serde(default = "SimulateSection::default_n_obs")]
    pub n_obs: usize,
    #[serde(default = "SimulateSection::default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default)]
    pub noise_density: NoiseDensity,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<SchattenIndex>,
    #[serde(default)]
    pub alphas: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: Option<LogGrid>,
}

impl SimulateSection {
    fn default_n_obs() -> usize {
        100
    }
    fn default_replicates() -> usize {
        100
    }
    /// Grid used when neither `alphas` nor `grid` is given.
    pub const DEFAULT_GRID: LogGrid = LogGrid {
        lo: 1e-3,
        hi: 1e3,
        count: 30,
    };

    /// Number of features `round(lambda * n_obs)`.
    pub fn n_feat(&self) -> usize {
        (self.lambda * self.n_obs as f64).round() as usize
    }

    pub fn model(&self) -> ModelSpec {
        ModelSpec {
            ensemble: self.ensemble,
            lambda: self.lambda,
            beta: self.beta,
            sigma: self.sigma,
            density: self.density.clone(),
        }
    }

    pub fn alpha_values(&self) -> Result<Vec<f64>> {
        AlphaSpec {
            alphas: self.alphas.clone(),
            grid: self.grid,
        }
        .resolve(Self::DEFAULT_GRID)
    }
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            ensemble: TheoryKind::Spherical,
            lambda: 0.5,
            beta: 1.0,
            sigma: 1.0,
            density: None,
            n_obs: Self::default_n_obs(),
            replicates: Self::default_replicates(),
            n_test: DEFAULT_N_TEST,
            noise_density: NoiseDensity::PointMass,
            estimators: default_estimators(),
            alphas: None,
            grid: None,
        }
    }
}

/// Synthetic ensemble as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleSpec {
    Spherical {
        n_obs: usize,
        n_feat: usize,
        #[serde(default = "one")]
        beta: f64,
        sigma: f64,
        #[serde(default = "default_n_test")]
        n_test: usize,
    },
    Diagonal {
        n_obs: usize,
        n_feat: usize,
        spectral_density: SpectralDensity,
        #[serde(default)]
        noise_density: NoiseDensity,
        #[serde(default = "one")]
        beta: f64,
        sigma: f64,
    },
    Equicorrelated {
        n_obs: usize,
        n_feat: usize,
        #[serde(default)]
        rho: f64,
        sigma: f64,
        #[serde(default)]
        sparse: Option<SparseSpec>,
        #[serde(default = "default_n_test")]
        n_test: usize,
    },
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self::Equicorrelated {
            n_obs: 100,
            n_feat: 50,
            rho: 0.0,
            sigma: 2.0,
            sparse: None,
            n_test: DEFAULT_N_TEST,
        }
    }
}

impl EnsembleSpec {
    pub fn to_config(&self) -> EnsembleConfig {
        match self.clone() {
            Self::Spherical {
                n_obs,
                n_feat,
                beta,
                sigma,
                n_test,
            } => EnsembleConfig::Spherical {
                config: SphericalGaussianConfig {
                    n_obs,
                    n_feat,
                    beta,
                    sigma,
                },
                n_test,
            },
            Self::Diagonal {
                n_obs,
                n_feat,
                spectral_density,
                noise_density,
                beta,
                sigma,
            } => EnsembleConfig::Diagonal(DiagonalEnsembleConfig {
                n_obs,
                n_feat,
                spectral_density,
                noise_density,
                beta,
                sigma,
            }),
            Self::Equicorrelated {
                n_obs,
                n_feat,
                rho,
                sigma,
                sparse,
                n_test,
            } => EnsembleConfig::Equicorrelated {
                config: EquicorrelatedConfig {
                    n_obs,
                    n_feat,
                    rho,
                    sigma,
                    sparse,
                },
                n_test,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvBenchSection {
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub cv: CvConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RffBenchSection {
    #[serde(default = "RffBenchSection::default_rff")]
    pub rff: RffConfig,
    #[serde(default = "RffBenchSection::default_cv")]
    pub cv: CvConfig,
}

impl RffBenchSection {
    fn default_rff() -> RffConfig {
        RffConfig::new(200, 0.5)
    }
    fn default_cv() -> CvConfig {
        CvConfig {
            models: vec![SchattenIndex::Nuclear, SchattenIndex::Frobenius],
            ..CvConfig::default()
        }
    }
}

impl Default for RffBenchSection {
    fn default() -> Self {
        Self {
            rff: Self::default_rff(),
            cv: Self::default_cv(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinSection {
    #[serde(default)]
    pub ensemble: TheoryKind,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "BasinSection::default_sigmas")]
    pub sigmas: Vec<f64>,
    /// Aspect ratios (spherical) or the fixed aspect ratio (diagonal, first entry).
    #[serde(default = "BasinSection::default_lambdas")]
    pub lambdas: Vec<f64>,
    /// Power-law exponents (diagonal only).
    #[serde(default = "BasinSection::default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<SchattenIndex>,
    #[serde(default)]
    pub grid: LogGrid,
    /// Check the curvature fit on a known parabola before building the table.
    #[serde(default)]
    pub self_test: bool,
}

impl BasinSection {
    fn default_sigmas() -> Vec<f64> {
        vec![0.5, 1.0, 2.0, 3.5]
    }
    fn default_lambdas() -> Vec<f64> {
        vec![0.1, 0.3, 0.5, 0.7, 0.9]
    }
    fn default_gammas() -> Vec<f64> {
        vec![0.5, 1.0, 2.0, 4.0]
    }

    pub fn models(&self) -> Result<Vec<ErrorModel>> {
        let mut out = Vec::new();
        for &sigma in &self.sigmas {
            match self.ensemble {
                TheoryKind::Spherical => {
                    for &lambda in &self.lambdas {
                        out.push(
                            ModelSpec {
                                ensemble: self.ensemble,
                                lambda,
                                beta: self.beta,
                                sigma,
                                density: None,
                            }
                            .error_model()?,
                        );
                    }
                }
                TheoryKind::Diagonal => {
                    let lambda = *self
                        .lambdas
                        .first()
                        .ok_or_else(|| Error::Config("lambdas is empty".into()))?;
                    for &gamma in &self.gammas {
                        let density = Some(SpectralDensity::PowerLaw { gamma });
                        out.push(
                            ModelSpec {
                                ensemble: self.ensemble,
                                lambda,
                                beta: self.beta,
                                sigma,
                                density,
                            }
                            .error_model()?,
                        );
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Config("basin table has no cells".into()));
        }
        Ok(out)
    }
}

impl Default for BasinSection {
    fn default() -> Self {
        Self {
            ensemble: TheoryKind::Spherical,
            beta: 1.0,
            sigmas: Self::default_sigmas(),
            lambdas: Self::default_lambdas(),
            gammas: Self::default_gammas(),
            estimators: default_estimators(),
            grid: LogGrid::default(),
            self_test: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealDataSection {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default = "RealDataSection::default_train_size")]
    pub train_size: usize,
    #[serde(default = "RealDataSection::default_n_splits")]
    pub n_splits: usize,
    #[serde(default = "RealDataSection::default_standardize")]
    pub standardize: bool,
    #[serde(default = "RealDataSection::default_cv")]
    pub cv: CvConfig,
}

impl RealDataSection {
    fn default_train_size() -> usize {
        300
    }
    fn default_n_splits() -> usize {
        200
    }
    fn default_standardize() -> bool {
        true
    }
    fn default_cv() -> CvConfig {
        CvConfig {
            n_datasets: Self::default_n_splits(),
            ..CvConfig::default()
        }
    }
}

impl Default for RealDataSection {
    fn default() -> Self {
        Self {
            path: None,
            target: None,
            train_size: Self::default_train_size(),
            n_splits: Self::default_n_splits(),
            standardize: true,
            cv: Self::default_cv(),
        }
    }
}

/// Top-level configuration file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub theory_curve: Option<TheoryCurveSection>,
    #[serde(default)]
    pub simulate: Option<SimulateSection>,
    #[serde(default)]
    pub cv_bench: Option<CvBenchSection>,
    #[serde(default)]
    pub rff_bench: Option<RffBenchSection>,
    #[serde(default)]
    pub basin: Option<BasinSection>,
    #[serde(default)]
    pub real_data: Option<RealDataSection>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        assert_eq!(
            ExperimentConfig::from_toml_str("").unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn parses_sections() {
        let text = r#"
            seed = 9
            format = "json"
            [theory_curve]
            ensemble = "diagonal"
            lambda = 0.3
            sigma = 0.5
            density = { kind = "power_law", gamma = 2.0 }
            alphas = [0.0, 1.0]
            [cv_bench]
            ensemble = { kind = "equicorrelated", n_obs = 100, n_feat = 50, rho = 0.5, sigma = 2.0, sparse = {} }
            cv = { n_datasets = 10, models = ["nuclear", "ridge"], grid = { lo = 1e-4, hi = 1e6, count = 15 } }
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.seed(), 9);
        assert_eq!(cfg.format(), Format::Json);
        let tc = cfg.theory_curve.unwrap();
        assert_eq!(tc.alpha_values().unwrap(), vec![0.0, 1.0]);
        assert_eq!(tc.model().error_model().unwrap().gamma(), Some(2.0));
        let cv = cfg.cv_bench.unwrap();
        assert_eq!(cv.cv.grid.count, 15);
        match cv.ensemble {
            EnsembleSpec::Equicorrelated { sparse, .. } => {
                assert_eq!(sparse, Some(SparseSpec::default()))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(ExperimentConfig::from_toml_str("sed = 3").is_err());
        assert!(ExperimentConfig::from_toml_str("[simulate]\nreplicate = 3").is_err());
        assert!(ExperimentConfig::from_toml_str("[cv_bench]\nensemble = { kind = \"spherical\", n_obs = 10, n_feat = 2, sigma = 1.0, rho = 0.1 }").is_err());
    }

    #[test]
    fn empty_alpha_list_is_an_error() {
        let spec = AlphaSpec {
            alphas: Some(vec![]),
            grid: None,
        };
        assert!(matches!(
            spec.resolve(LogGrid::default()),
            Err(Error::Config(_))
        ));
    }
}
