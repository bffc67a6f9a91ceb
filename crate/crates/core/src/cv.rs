//! K-fold cross-validation benchmarks.
//!
//! For every dataset each model picks `alpha` from a shared grid by k-fold
//! CV on the training set, is refit on all training rows, and is scored on
//! the test set. Reports collect the full error matrix, average errors, and
//! win probabilities.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{derive_seed, empirical_mse, mse, rng_from, Dataset, EnsembleConfig};
use crate::error::{Error, Result};
use crate::estimator::{FitOptions, SchattenIndex, SpectralSolver};
use crate::rff::{make_rff_dataset, RffConfig};
use crate::theory::curves::{fmt_full, log_grid};

/// Log-spaced candidate values of `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        Self {
            lo: 1e-4,
            hi: 1e6,
            count: 9,
        }
    }
}

impl AlphaGrid {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        let g = Self { lo, hi, count };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.lo < self.hi && self.hi.is_finite()) || self.count < 2 {
            return Err(Error::InvalidConfig(format!(
                "alpha grid needs 0 < lo < hi < inf and count >= 2, got lo={} hi={} count={}",
                self.lo, self.hi, self.count
            )));
        }
        Ok(())
    }

    /// Grid values in increasing order.
    pub fn points(&self) -> Vec<f64> {
        log_grid(self.lo, self.hi, self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    #[serde(default = "CvConfig::default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub grid: AlphaGrid,
    #[serde(default = "CvConfig::default_models")]
    pub models: Vec<SchattenIndex>,
    #[serde(default = "CvConfig::default_n_datasets")]
    pub n_datasets: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: Self::default_folds(),
            grid: AlphaGrid::default(),
            models: Self::default_models(),
            n_datasets: Self::default_n_datasets(),
            seed: 0,
        }
    }
}

impl CvConfig {
    fn default_folds() -> usize {
        3
    }
    fn default_models() -> Vec<SchattenIndex> {
        SchattenIndex::ALL.to_vec()
    }
    fn default_n_datasets() -> usize {
        100
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 folds, got {}",
                self.folds
            )));
        }
        if self.n_datasets == 0 {
            return Err(Error::InvalidConfig("n_datasets must be at least 1".into()));
        }
        if self.models.is_empty() {
            return Err(Error::InvalidConfig("model list is empty".into()));
        }
        let mut seen = self.models.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.models.len() {
            return Err(Error::InvalidConfig("model list has duplicates".into()));
        }
        self.grid.validate()
    }
}

/// Fold label of each of `n` rows: a seeded shuffle cut into contiguous
/// blocks whose sizes differ by at most one.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 || n < folds {
        return Err(Error::InsufficientData { n_obs: n, folds });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from(seed));
    let mut labels = vec![0; n];
    let (base, extra) = (n / folds, n % folds);
    let mut start = 0;
    for k in 0..folds {
        let len = base + usize::from(k < extra);
        for &i in &order[start..start + len] {
            labels[i] = k;
        }
        start += len;
    }
    Ok(labels)
}

fn select_rows(x: &DMatrix<f64>, y: &DVector<f64>, rows: &[usize]) -> (DMatrix<f64>, DVector<f64>) {
    (x.select_rows(rows), y.select_rows(rows))
}

/// Mean validation MSE over folds, for every model and every alpha:
/// `scores[m][a]`. Folds share one assignment across models.
pub fn cv_scores(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    models: &[SchattenIndex],
    alphas: &[f64],
    folds: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows but Y has {}",
            x.nrows(),
            y.len()
        )));
    }
    let labels = fold_assignment(x.nrows(), folds, seed)?;
    let mut scores = vec![vec![0.0; alphas.len()]; models.len()];
    for k in 0..folds {
        let train: Vec<usize> = (0..labels.len()).filter(|i| labels[*i] != k).collect();
        let valid: Vec<usize> = (0..labels.len()).filter(|i| labels[*i] == k).collect();
        let (xt, yt) = select_rows(x, y, &train);
        let (xv, yv) = select_rows(x, y, &valid);
        let solver = SpectralSolver::new(&xt, &yt)?;
        for (m, p) in models.iter().enumerate() {
            for (a, alpha) in alphas.iter().enumerate() {
                let beta = solver.coefficients(*p, *alpha, FitOptions::default())?;
                scores[m][a] += mse(&(&xv * beta), &yv)? / folds as f64;
            }
        }
    }
    Ok(scores)
}

/// Index of the smallest score; ties go to the earlier (smaller) alpha.
fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// CV choice of `alpha` from an explicit candidate list.
pub fn kfold_select_alpha_from(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    p: SchattenIndex,
    alphas: &[f64],
    folds: usize,
    seed: u64,
) -> Result<f64> {
    if alphas.is_empty() {
        return Err(Error::InvalidConfig("empty alpha grid".into()));
    }
    let scores = cv_scores(x, y, &[p], alphas, folds, seed)?;
    Ok(alphas[argmin_first(&scores[0])])
}

/// CV choice of `alpha` from `cfg.grid`, with folds seeded by `cfg.seed`.
pub fn kfold_select_alpha(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    p: SchattenIndex,
    cfg: &CvConfig,
) -> Result<f64> {
    cfg.grid.validate()?;
    kfold_select_alpha_from(x, y, p, &cfg.grid.points(), cfg.folds, cfg.seed)
}

/// Test MSE and selected alpha of every model on one dataset.
pub fn evaluate_dataset(
    dataset: &Dataset,
    models: &[SchattenIndex],
    alphas: &[f64],
    folds: usize,
    cv_seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let scores = cv_scores(&dataset.x_tr, &dataset.y_tr, models, alphas, folds, cv_seed)?;
    let solver = SpectralSolver::new(&dataset.x_tr, &dataset.y_tr)?;
    let mut errors = Vec::with_capacity(models.len());
    let mut chosen = Vec::with_capacity(models.len());
    for (m, p) in models.iter().enumerate() {
        let alpha = alphas[argmin_first(&scores[m])];
        let model = solver.fit(*p, alpha, FitOptions::default())?;
        errors.push(empirical_mse(&model, dataset)?);
        chosen.push(alpha);
    }
    Ok((errors, chosen))
}

/// Results of a CV benchmark. Matrices are indexed `[model][dataset]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub models: Vec<SchattenIndex>,
    pub n_datasets: usize,
    pub test_mse: Vec<Vec<f64>>,
    pub selected_alphas: Vec<Vec<f64>>,
    pub avg_error: Vec<f64>,
    /// Standard error of `avg_error`; `None` with a single dataset.
    pub se_error: Vec<Option<f64>>,
    pub win_count: Vec<usize>,
    pub win_prob: Vec<f64>,
    /// Mean over datasets of `mse_model / mse_ridge`, when Ridge is present.
    pub ratio_to_ridge: Option<Vec<f64>>,
    pub best_avg: SchattenIndex,
    pub best_mode: SchattenIndex,
    /// Free-form run settings (seed, grid, preprocessing).
    pub metadata: BTreeMap<String, String>,
}

impl BenchReport {
    /// Build a report from a test-error matrix `[model][dataset]`.
    pub fn from_matrix(
        models: Vec<SchattenIndex>,
        test_mse: Vec<Vec<f64>>,
        selected_alphas: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n_datasets = test_mse.first().map_or(0, Vec::len);
        if models.is_empty()
            || n_datasets == 0
            || test_mse.len() != models.len()
            || test_mse.iter().any(|r| r.len() != n_datasets)
            || selected_alphas.len() != models.len()
            || selected_alphas.iter().any(|r| r.len() != n_datasets)
        {
            return Err(Error::DimensionMismatch(
                "report matrices must be models x datasets and nonempty".into(),
            ));
        }
        let n = n_datasets as f64;
        let avg_error: Vec<f64> = test_mse.iter().map(|r| r.iter().sum::<f64>() / n).collect();
        let se_error = test_mse
            .iter()
            .zip(&avg_error)
            .map(|(r, m)| {
                (n_datasets > 1).then(|| {
                    (r.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
                })
            })
            .collect();
        let mut win_count = vec![0; models.len()];
        for j in 0..n_datasets {
            let col: Vec<f64> = test_mse.iter().map(|r| r[j]).collect();
            win_count[argmin_first(&col)] += 1;
        }
        let win_prob = win_count.iter().map(|c| *c as f64 / n).collect();
        let ratio_to_ridge = models
            .iter()
            .position(|p| *p == SchattenIndex::Frobenius)
            .map(|r| {
                test_mse
                    .iter()
                    .map(|row| {
                        row.iter()
                            .zip(&test_mse[r])
                            .map(|(v, b)| v / b)
                            .sum::<f64>()
                            / n
                    })
                    .collect()
            });
        let mut report = Self {
            best_avg: models[0],
            best_mode: models[0],
            models,
            n_datasets,
            test_mse,
            selected_alphas,
            avg_error,
            se_error,
            win_count,
            win_prob,
            ratio_to_ridge,
            metadata: BTreeMap::new(),
        };
        (report.best_avg, report.best_mode) = aggregate_wins(&report);
        Ok(report)
    }

    pub fn index_of(&self, p: SchattenIndex) -> Option<usize> {
        self.models.iter().position(|m| *m == p)
    }

    pub fn avg_of(&self, p: SchattenIndex) -> Option<f64> {
        self.index_of(p).map(|i| self.avg_error[i])
    }

    pub fn win_prob_of(&self, p: SchattenIndex) -> Option<f64> {
        self.index_of(p).map(|i| self.win_prob[i])
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// One summary row per model.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "model",
            "avg_error",
            "se_error",
            "win_count",
            "win_prob",
            "ratio_to_ridge",
            "best_avg",
            "best_mode",
        ])?;
        for (i, p) in self.models.iter().enumerate() {
            w.write_record([
                p.name().to_string(),
                fmt_full(self.avg_error[i]),
                self.se_error[i].map(fmt_full).unwrap_or_default(),
                self.win_count[i].to_string(),
                fmt_full(self.win_prob[i]),
                self.ratio_to_ridge
                    .as_ref()
                    .map(|r| fmt_full(r[i]))
                    .unwrap_or_default(),
                self.best_avg.name().to_string(),
                self.best_mode.name().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `(argmin of average error, most frequent winner)`. Ties in the average
/// go to the earlier model in the report; ties in win counts go to the
/// alphabetically first model name.
pub fn aggregate_wins(report: &BenchReport) -> (SchattenIndex, SchattenIndex) {
    let best_avg = report.models[argmin_first(&report.avg_error)];
    let mut best_mode = 0;
    for i in 1..report.models.len() {
        let (c, b) = (report.win_count[i], report.win_count[best_mode]);
        if c > b || (c == b && report.models[i].name() < report.models[best_mode].name()) {
            best_mode = i;
        }
    }
    (best_avg, report.models[best_mode])
}

/// Run the CV protocol on `cfg.n_datasets` datasets produced by `make`,
/// which receives the dataset index and its derived seed. Datasets run in
/// parallel; results are deterministic.
pub fn benchmark_datasets<F>(make: F, cfg: &CvConfig) -> Result<BenchReport>
where
    F: Fn(usize, u64) -> Result<Dataset> + Sync,
{
    cfg.validate()?;
    let alphas = cfg.grid.points();
    let per_dataset = (0..cfg.n_datasets)
        .into_par_iter()
        .map(|j| {
            let seed = derive_seed(cfg.seed, j as u64);
            let ds = make(j, seed)?;
            evaluate_dataset(
                &ds,
                &cfg.models,
                &alphas,
                cfg.folds,
                derive_seed(seed, u64::MAX),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let m = cfg.models.len();
    let mut test_mse = vec![Vec::with_capacity(cfg.n_datasets); m];
    let mut selected = vec![Vec::with_capacity(cfg.n_datasets); m];
    for (errors, chosen) in per_dataset {
        for i in 0..m {
            test_mse[i].push(errors[i]);
            selected[i].push(chosen[i]);
        }
    }
    let mut report = BenchReport::from_matrix(cfg.models.clone(), test_mse, selected)?;
    report.metadata.insert("seed".into(), cfg.seed.to_string());
    report
        .metadata
        .insert("folds".into(), cfg.folds.to_string());
    report.metadata.insert(
        "alpha_grid".into(),
        format!(
            "{}..{} ({} log-spaced)",
            cfg.grid.lo, cfg.grid.hi, cfg.grid.count
        ),
    );
    Ok(report)
}

/// CV benchmark on synthetic datasets from `ensemble`.
pub fn run_benchmark(ensemble: &EnsembleConfig, cfg: &CvConfig) -> Result<BenchReport> {
    ensemble.validate()?;
    benchmark_datasets(|_, seed| ensemble.sample(seed), cfg)
}

/// CV benchmark on random-Fourier-feature datasets. Only the Nuclear and
/// Ridge estimators are allowed, since the feature design is usually wider
/// than it is tall.
pub fn rff_benchmark(rff: &RffConfig, cfg: &CvConfig) -> Result<BenchReport> {
    rff.validate()?;
    if cfg.models.contains(&SchattenIndex::Spectral) {
        return Err(Error::InvalidConfig(
            "the random-feature benchmark supports nuclear and ridge only".into(),
        ));
    }
    let mut report = benchmark_datasets(|_, seed| make_rff_dataset(rff, seed), cfg)?;
    report
        .metadata
        .insert("bandwidth".into(), rff.bandwidth.to_string());
    report
        .metadata
        .insert("d_rbf".into(), rff.d_rbf.to_string());
    Ok(report)
}
