//! Implementations of the command-line subcommands.
//!
//! Each command renders its result to a string in the requested format so
//! that output is byte-identical for identical configuration and seed.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basin::{geometry_table, locate_min_and_curvature, LogGrid};
use crate::cv::{benchmark_datasets, rff_benchmark, run_benchmark, BenchReport, CvConfig};
use crate::ensembles::{
    derive_seed, empirical_mse, sample_diagonal, sample_spherical, DiagonalEnsembleConfig,
    SphericalGaussianConfig,
};
use crate::error::{Error, Result};
use crate::estimator::{FitOptions, SchattenIndex, SpectralSolver};
use crate::io::config::{ExperimentConfig, Format, SimulateSection, TheoryKind};
use crate::io::tabular::TabularDataset;
use crate::theory::curves::{fmt_full, TheoryCurve};

/// Rendered command output: the requested format plus, for benchmark
/// reports, the same report in the other format.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub format: Format,
    pub body: String,
    pub sibling: Option<(Format, String)>,
}

impl Rendered {
    fn single(format: Format, body: String) -> Self {
        Self {
            format,
            body,
            sibling: None,
        }
    }
}

fn to_utf8(buf: Vec<u8>) -> String {
    String::from_utf8(buf).expect("writers emit UTF-8")
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn effective_cv(cfg: &ExperimentConfig, cv: &CvConfig) -> CvConfig {
    let mut cv = cv.clone();
    if let Some(seed) = cfg.seed {
        cv.seed = seed;
    }
    cv
}

/// Theoretical error curves, one per estimator.
pub fn cmd_theory_curve(cfg: &ExperimentConfig) -> Result<Rendered> {
    let section = cfg.theory_curve.clone().unwrap_or_default();
    let model = section.model().error_model()?;
    let alphas = section.alpha_values()?;
    if section.estimators.is_empty() {
        return Err(Error::Config("estimator list is empty".into()));
    }
    let curves = section
        .estimators
        .par_iter()
        .map(|p| TheoryCurve::compute(&model, *p, &alphas))
        .collect::<Result<Vec<_>>>()?;
    let body = match cfg.format() {
        Format::Csv => {
            let mut buf = Vec::new();
            TheoryCurve::write_csv(&curves, &mut buf)?;
            to_utf8(buf)
        }
        Format::Json => json(&curves)?,
    };
    Ok(Rendered::single(cfg.format(), body))
}

/// Empirical average test error next to its theoretical prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub estimator: SchattenIndex,
    pub alpha: f64,
    pub empirical_mean: f64,
    /// Standard error of the mean; `None` with a single replicate.
    pub empirical_se: Option<f64>,
    pub theory: f64,
    pub replicates: usize,
}

/// Fit every estimator at every alpha on `replicates` synthetic datasets
/// and compare the average test error with the limiting prediction.
pub fn simulate_curves(section: &SimulateSection, seed: u64) -> Result<Vec<SimulationRow>> {
    if section.replicates == 0 {
        return Err(Error::Config("replicates must be at least 1".into()));
    }
    if section.estimators.is_empty() {
        return Err(Error::Config("estimator list is empty".into()));
    }
    let model = section.model().error_model()?;
    let alphas = section.alpha_values()?;
    let n_feat = section.n_feat();
    if n_feat == 0 || n_feat >= section.n_obs {
        return Err(Error::Config(format!(
            "lambda * n_obs must give 1 <= n_feat < n_obs, got {n_feat}"
        )));
    }
    let sample = |s: u64| match section.ensemble {
        TheoryKind::Spherical => {
            let c = SphericalGaussianConfig {
                n_obs: section.n_obs,
                n_feat,
                beta: section.beta,
                sigma: section.sigma,
            };
            sample_spherical(&c, section.n_test, s)
        }
        TheoryKind::Diagonal => {
            let c = DiagonalEnsembleConfig {
                n_obs: section.n_obs,
                n_feat,
                spectral_density: section.model().density_or_default(),
                noise_density: section.noise_density,
                beta: section.beta,
                sigma: section.sigma,
            };
            sample_diagonal(&c, s)
        }
    };
    let per_replicate = (0..section.replicates)
        .into_par_iter()
        .map(|r| {
            let ds = sample(derive_seed(seed, r as u64))?;
            let solver = SpectralSolver::new(&ds.x_tr, &ds.y_tr)?;
            let mut out = Vec::with_capacity(section.estimators.len() * alphas.len());
            for p in &section.estimators {
                for a in &alphas {
                    out.push(empirical_mse(
                        &solver.fit(*p, *a, FitOptions::default())?,
                        &ds,
                    )?);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let n = section.replicates as f64;
    let mut rows = Vec::new();
    for (i, p) in section.estimators.iter().enumerate() {
        for (k, a) in alphas.iter().enumerate() {
            let col = i * alphas.len() + k;
            let mean = per_replicate.iter().map(|r| r[col]).sum::<f64>() / n;
            let se = (section.replicates > 1).then(|| {
                let var = per_replicate
                    .iter()
                    .map(|r| (r[col] - mean).powi(2))
                    .sum::<f64>()
                    / (n - 1.0);
                (var / n).sqrt()
            });
            rows.push(SimulationRow {
                estimator: *p,
                alpha: *a,
                empirical_mean: mean,
                empirical_se: se,
                theory: model.error(*p, *a)?,
                replicates: section.replicates,
            });
        }
    }
    Ok(rows)
}

/// CSV columns `estimator,alpha,empirical_mean,empirical_se,theory,replicates`;
/// a missing standard error is written as `NaN`.
pub fn write_simulation_csv(rows: &[SimulationRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "estimator",
        "alpha",
        "empirical_mean",
        "empirical_se",
        "theory",
        "replicates",
    ])?;
    for r in rows {
        w.write_record([
            r.estimator.name().to_string(),
            fmt_full(r.alpha),
            fmt_full(r.empirical_mean),
            fmt_full(r.empirical_se.unwrap_or(f64::NAN)),
            fmt_full(r.theory),
            r.replicates.to_string(),
        ])?;
    }
    let buf = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(to_utf8(buf))
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Rendered> {
    let section = cfg.simulate.clone().unwrap_or_default();
    let rows = simulate_curves(&section, cfg.seed())?;
    let body = match cfg.format() {
        Format::Csv => write_simulation_csv(&rows)?,
        Format::Json => json(&rows)?,
    };
    Ok(Rendered::single(cfg.format(), body))
}

fn render_report(report: &BenchReport, format: Format) -> Result<Rendered> {
    let render = |f: Format| -> Result<String> {
        match f {
            Format::Json => json(report),
            Format::Csv => {
                let mut buf = Vec::new();
                report.write_summary_csv(&mut buf)?;
                Ok(to_utf8(buf))
            }
        }
    };
    Ok(Rendered {
        format,
        body: render(format)?,
        sibling: Some((format.other(), render(format.other())?)),
    })
}

pub fn cmd_cv_bench(cfg: &ExperimentConfig) -> Result<Rendered> {
    let section = cfg.cv_bench.clone().unwrap_or_default();
    let cv = effective_cv(cfg, &section.cv);
    let report = run_benchmark(&section.ensemble.to_config(), &cv)?;
    render_report(&report, cfg.format())
}

pub fn cmd_rff_bench(cfg: &ExperimentConfig) -> Result<Rendered> {
    let section = cfg.rff_bench.clone().unwrap_or_default();
    let cv = effective_cv(cfg, &section.cv);
    let report = rff_benchmark(&section.rff, &cv)?;
    render_report(&report, cfg.format())
}

/// Basin-geometry table: CSV in figure layout, JSON with every field.
pub fn cmd_basin(cfg: &ExperimentConfig) -> Result<Rendered> {
    let section = cfg.basin.clone().unwrap_or_default();
    if section.self_test {
        parabola_self_test(&section.grid)?;
    }
    let table = geometry_table(&section.models()?, &section.estimators, &section.grid)?;
    let body = match cfg.format() {
        Format::Csv => {
            let mut buf = Vec::new();
            table.write_layout_csv(&mut buf)?;
            to_utf8(buf)
        }
        Format::Json => json(&table)?,
    };
    Ok(Rendered::single(cfg.format(), body))
}

/// Check that the basin fit recovers a known parabola on `grid`.
pub fn parabola_self_test(grid: &LogGrid) -> Result<()> {
    let center = (grid.lo * grid.hi).sqrt();
    let g = locate_min_and_curvature(|a| Ok(0.5 + 0.5 * 3.0 * (a - center).powi(2)), grid)?;
    let step = grid
        .points()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    let curvature_ok = (g.curvature - 3.0).abs() <= 1e-6 * 3.0;
    let depth_ok = g.err_min - 0.5 <= 1.5 * step * step;
    if !(curvature_ok && depth_ok) {
        return Err(Error::Config(format!(
            "basin self-test failed: curvature {} (expected 3), minimum {} (expected 0.5)",
            g.curvature, g.err_min
        )));
    }
    Ok(())
}

/// CV benchmark on random train/test splits of a CSV file.
pub fn cmd_real_data(path: Option<&Path>, cfg: &ExperimentConfig) -> Result<Rendered> {
    let section = cfg.real_data.clone().unwrap_or_default();
    let path: PathBuf = path
        .map(Path::to_path_buf)
        .or(section.path.clone())
        .ok_or_else(|| Error::Config("no data file given (use --data or real_data.path)".into()))?;
    let target = section
        .target
        .clone()
        .ok_or_else(|| Error::Config("real_data.target is required".into()))?;
    let table = TabularDataset::from_path(&path, &target)?;
    if section.train_size == 0 || section.train_size >= table.n_rows() {
        return Err(Error::Config(format!(
            "train_size {} must be below the row count {}",
            section.train_size,
            table.n_rows()
        )));
    }
    let mut cv = effective_cv(cfg, &section.cv);
    cv.n_datasets = section.n_splits;
    let mut report = benchmark_datasets(
        |_, seed| table.split(section.train_size, section.standardize, seed),
        &cv,
    )?;
    report.metadata.insert("target".into(), target);
    report
        .metadata
        .insert("train_size".into(), section.train_size.to_string());
    report
        .metadata
        .insert("standardized".into(), section.standardize.to_string());
    report
        .metadata
        .insert("rows".into(), table.n_rows().to_string());
    render_report(&report, cfg.format())
}

/// Write `rendered` to `out` (and the sibling next to it, with the other
/// extension), or the primary body to stdout when `out` is `None`.
pub fn write_rendered(rendered: &Rendered, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let Some(out) = out else {
        print!("{}", rendered.body);
        return Ok(Vec::new());
    };
    std::fs::write(out, &rendered.body)?;
    let mut written = vec![out.to_path_buf()];
    if let Some((format, body)) = &rendered.sibling {
        let mut sibling = out.with_extension(format.extension());
        if sibling == out {
            sibling = out.with_extension(format!("{}.{}", format.extension(), format.extension()));
        }
        std::fs::write(&sibling, body)?;
        written.push(sibling);
    }
    Ok(written)
}
