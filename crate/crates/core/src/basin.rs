//! Depth and curvature of error-vs-alpha basins.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::rng_from;
use crate::error::{Error, Result};
use crate::estimator::SchattenIndex;
use crate::theory::curves::{fmt_full, log_grid, ErrorModel, TheoryEnsemble};

/// Half-width of the quadratic-fit window around the grid minimum.
pub const FIT_HALF_WINDOW: usize = 5;

/// Log-spaced grid of `count` points from `lo` to `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Default for LogGrid {
    fn default() -> Self {
        Self {
            lo: 1e-3,
            hi: 1e5,
            count: 500,
        }
    }
}

impl LogGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.lo < self.hi && self.hi.is_finite()) || self.count < 2 {
            return Err(Error::InvalidConfig(format!(
                "log grid needs 0 < lo < hi and count >= 2, got lo={} hi={} count={}",
                self.lo, self.hi, self.count
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        log_grid(self.lo, self.hi, self.count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasinGeometry {
    pub alpha_min: f64,
    pub err_min: f64,
    /// Second derivative of the error at the minimum.
    pub curvature: f64,
    /// `sqrt(max(curvature, 0))`.
    pub kappa: f64,
    /// The minimum sits within the fit half-window of a grid end, so the
    /// fit window is one-sided.
    pub edge: bool,
}

/// Evaluate `curve` on `grid` and measure its basin.
pub fn locate_min_and_curvature<F>(curve: F, grid: &LogGrid) -> Result<BasinGeometry>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    grid.validate()?;
    let alphas = grid.points();
    let errors = alphas
        .par_iter()
        .map(|a| curve(*a))
        .collect::<Result<Vec<_>>>()?;
    basin_from_samples(&alphas, &errors)
}

/// Basin of a sampled curve: grid argmin, then the least-squares fit
/// `err_i - err_min ≈ a (alpha_i - alpha_min) + b (alpha_i - alpha_min)^2`
/// over the points within [`FIT_HALF_WINDOW`] of the argmin; curvature `2b`.
pub fn basin_from_samples(alphas: &[f64], errors: &[f64]) -> Result<BasinGeometry> {
    if alphas.len() != errors.len() || alphas.is_empty() {
        return Err(Error::DimensionMismatch(
            "alphas and errors must be nonempty and of equal length".into(),
        ));
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite("error curve"));
    }
    let i0 = errors
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let lo = i0.saturating_sub(FIT_HALF_WINDOW);
    let hi = (i0 + FIT_HALF_WINDOW).min(alphas.len() - 1);
    let edge = i0 < FIT_HALF_WINDOW || i0 + FIT_HALF_WINDOW > alphas.len() - 1;

    let mut distinct: Vec<f64> = alphas[lo..=hi].to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::DegenerateFit(distinct.len()));
    }

    let (a0, e0) = (alphas[i0], errors[i0]);
    let (mut s2, mut s3, mut s4, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in lo..=hi {
        let dx = alphas[i] - a0;
        let dy = errors[i] - e0;
        s2 += dx * dx;
        s3 += dx * dx * dx;
        s4 += dx * dx * dx * dx;
        t1 += dx * dy;
        t2 += dx * dx * dy;
    }
    let det = s2 * s4 - s3 * s3;
    if !(det.abs() > 0.0) {
        return Err(Error::DegenerateFit(distinct.len()));
    }
    let b = (s2 * t2 - s3 * t1) / det;
    let curvature = 2.0 * b;
    Ok(BasinGeometry {
        alpha_min: a0,
        err_min: e0,
        curvature,
        kappa: curvature.max(0.0).sqrt(),
        edge,
    })
}

/// Expected minimum of `mu + kappa^2 x^2 / 2` over `n` points drawn
/// uniformly from `[-delta, delta]`: `mu + (kappa delta)^2 / ((n+1)(n+2))`.
pub fn expected_cv_minimum(mu: f64, kappa: f64, delta: f64, n: usize) -> Result<f64> {
    if n == 0 || !(delta > 0.0) {
        return Err(Error::InvalidArgument("need n >= 1 and delta > 0".into()));
    }
    let n = n as f64;
    Ok(mu + (kappa * delta).powi(2) / ((n + 1.0) * (n + 2.0)))
}

/// Monte Carlo estimate of [`expected_cv_minimum`]: mean and standard error
/// of `min_i (mu + kappa^2 X_i^2 / 2)` over `reps` replicates.
pub fn monte_carlo_parabola_min(
    mu: f64,
    kappa: f64,
    delta: f64,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n == 0 || reps < 2 || !(delta > 0.0) {
        return Err(Error::InvalidArgument(
            "need n >= 1, reps >= 2 and delta > 0".into(),
        ));
    }
    let mut rng = rng_from(seed);
    let half = 0.5 * kappa * kappa;
    let (mut mean, mut m2) = (0.0, 0.0);
    for k in 0..reps {
        let mut best = f64::INFINITY;
        for _ in 0..n {
            let x = delta * (2.0 * rng.random::<f64>() - 1.0);
            best = best.min(x * x);
        }
        let v = mu + half * best;
        // Welford update
        let delta_v = v - mean;
        mean += delta_v / (k + 1) as f64;
        m2 += delta_v * (v - mean);
    }
    let var = m2 / (reps - 1) as f64;
    Ok((mean, (var / reps as f64).sqrt()))
}

/// One cell of a basin-geometry table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryRow {
    pub sigma: f64,
    /// `"lambda"` for the spherical ensemble, `"gamma"` for the diagonal one.
    pub axis: String,
    pub value: f64,
    pub estimator: SchattenIndex,
    pub alpha_min: f64,
    pub err_min: f64,
    pub kappa: f64,
    /// Percent increase of the minimum error over Ridge.
    pub depth_pct: f64,
    /// Percent increase of `kappa` over Ridge.
    pub curvature_pct: f64,
    pub edge: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GeometryTable {
    pub rows: Vec<GeometryRow>,
}

fn axis_of(model: &ErrorModel) -> (String, f64) {
    match &model.ensemble {
        TheoryEnsemble::Spherical => ("lambda".into(), model.lambda),
        TheoryEnsemble::Diagonal(d) => ("gamma".into(), d.gamma().unwrap_or(f64::NAN)),
    }
}

fn percent_increase(v: f64, base: f64) -> f64 {
    if base == 0.0 {
        if v == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(v)
        }
    } else {
        100.0 * (v - base) / base
    }
}

/// Depth and curvature of each estimator's theoretical curve for every
/// model, as percent increases over Ridge on the same model.
pub fn geometry_table(
    models: &[ErrorModel],
    estimators: &[SchattenIndex],
    grid: &LogGrid,
) -> Result<GeometryTable> {
    grid.validate()?;
    let mut wanted: Vec<SchattenIndex> = vec![SchattenIndex::Frobenius];
    wanted.extend(
        estimators
            .iter()
            .copied()
            .filter(|p| *p != SchattenIndex::Frobenius),
    );
    let cells: Vec<(usize, SchattenIndex)> = (0..models.len())
        .flat_map(|m| wanted.iter().map(move |p| (m, *p)))
        .collect();
    let basins = cells
        .par_iter()
        .map(|(m, p)| locate_min_and_curvature(|a| models[*m].error(*p, a), grid))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (m, model) in models.iter().enumerate() {
        let base = &basins[m * wanted.len()];
        let (axis, value) = axis_of(model);
        for (k, p) in wanted.iter().enumerate() {
            if !estimators.contains(p) {
                continue;
            }
            let g = &basins[m * wanted.len() + k];
            rows.push(GeometryRow {
                sigma: model.sigma,
                axis: axis.clone(),
                value,
                estimator: *p,
                alpha_min: g.alpha_min,
                err_min: g.err_min,
                kappa: g.kappa,
                depth_pct: percent_increase(g.err_min, base.err_min),
                curvature_pct: percent_increase(g.kappa, base.kappa),
                edge: g.edge,
            });
        }
    }
    Ok(GeometryTable { rows })
}

impl GeometryTable {
    pub fn row(&self, sigma: f64, value: f64, p: SchattenIndex) -> Option<&GeometryRow> {
        self.rows
            .iter()
            .find(|r| r.sigma == sigma && r.value == value && r.estimator == p)
    }

    /// One row per cell and estimator.
    pub fn write_long_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "sigma",
            "axis",
            "value",
            "estimator",
            "alpha_min",
            "err_min",
            "kappa",
            "depth_pct",
            "curvature_pct",
            "edge",
        ])?;
        for r in &self.rows {
            w.write_record([
                fmt_full(r.sigma),
                r.axis.clone(),
                fmt_full(r.value),
                r.estimator.name().to_string(),
                fmt_full(r.alpha_min),
                fmt_full(r.err_min),
                fmt_full(r.kappa),
                fmt_full(r.depth_pct),
                fmt_full(r.curvature_pct),
                r.edge.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Figure-style layout: one block per estimator, rows `sigma`, columns the
    /// lambda/gamma values, entries `"depth%/curvature%"`.
    pub fn write_layout_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut values: Vec<f64> = self.rows.iter().map(|r| r.value).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let mut sigmas: Vec<f64> = self.rows.iter().map(|r| r.sigma).collect();
        sigmas.sort_by(f64::total_cmp);
        sigmas.dedup();
        let mut estimators: Vec<SchattenIndex> = Vec::new();
        for r in &self.rows {
            if !estimators.contains(&r.estimator) {
                estimators.push(r.estimator);
            }
        }
        let axis = self
            .rows
            .first()
            .map(|r| r.axis.clone())
            .unwrap_or_else(|| "lambda".into());
        let mut header = vec!["estimator".to_string(), format!("sigma\\{axis}")];
        header.extend(values.iter().map(|v| format!("{v}")));
        w.write_record(&header)?;
        for p in &estimators {
            for s in &sigmas {
                let mut rec = vec![p.name().to_string(), format!("{s}")];
                for v in &values {
                    rec.push(match self.row(*s, *v, *p) {
                        Some(r) => format!("{:.2}/{:.2}", r.depth_pct, r.curvature_pct),
                        None => String::new(),
                    });
                }
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid_through_one() -> LogGrid {
        LogGrid {
            lo: 1e-2,
            hi: 1e2,
            count: 401,
        }
    }

    #[test]
    fn recovers_exact_parabola() {
        let (mu, k2) = (0.7, 3.0);
        let g = locate_min_and_curvature(
            |a| Ok(mu + 0.5 * k2 * (a - 1.0).powi(2)),
            &grid_through_one(),
        )
        .unwrap();
        assert_relative_eq!(g.alpha_min, 1.0, max_relative = 1e-12);
        assert_relative_eq!(g.err_min, mu, max_relative = 1e-12);
        assert_relative_eq!(g.curvature, k2, max_relative = 1e-6);
        assert_relative_eq!(g.kappa, k2.sqrt(), max_relative = 1e-6);
        assert!(!g.edge);
    }

    #[test]
    fn offset_and_scale_behaviour() {
        let grid = grid_through_one();
        let f = |a: f64| (a.ln() - 0.3).powi(2) + 0.1 * a;
        let base = locate_min_and_curvature(|a| Ok(f(a)), &grid).unwrap();
        let shifted = locate_min_and_curvature(|a| Ok(f(a) + 5.0), &grid).unwrap();
        let scaled = locate_min_and_curvature(|a| Ok(4.0 * f(a)), &grid).unwrap();
        assert_relative_eq!(shifted.curvature, base.curvature, max_relative = 1e-8);
        assert_relative_eq!(scaled.curvature, 4.0 * base.curvature, max_relative = 1e-12);
    }

    #[test]
    fn edge_minimum_is_flagged() {
        let g = locate_min_and_curvature(|a| Ok((a - 1e-3).powi(2)), &LogGrid::default()).unwrap();
        assert!(g.edge);
        assert_eq!(g.alpha_min, 1e-3);
    }

    #[test]
    fn degenerate_window() {
        assert!(matches!(
            basin_from_samples(&[1.0, 2.0], &[1.0, 0.5]),
            Err(Error::DegenerateFit(2))
        ));
        assert!(matches!(
            basin_from_samples(&[1.0, 1.0, 1.0], &[1.0, 0.5, 0.7]),
            Err(Error::DegenerateFit(1))
        ));
    }

    #[test]
    fn rule_of_thumb_values() {
        assert_eq!(expected_cv_minimum(0.3, 0.0, 1.0, 4).unwrap(), 0.3);
        assert_relative_eq!(expected_cv_minimum(0.0, 1.0, 1.0, 1).unwrap(), 1.0 / 6.0);
        assert_relative_eq!(expected_cv_minimum(0.0, 2.0, 0.5, 3).unwrap(), 1.0 / 20.0);
        assert!(expected_cv_minimum(1.0, 5.0, 1.0, 1_000_000).unwrap() - 1.0 < 1e-10);
    }

    #[test]
    fn monte_carlo_agrees_with_rule() {
        let (m, se) = monte_carlo_parabola_min(0.2, 0.0, 1.0, 3, 1000, 1).unwrap();
        assert_eq!((m, se), (0.2, 0.0));
        let (m, se) = monte_carlo_parabola_min(0.0, 1.0, 1.0, 1, 200_000, 2).unwrap();
        assert!((m - 1.0 / 6.0).abs() < 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn ridge_row_is_zero_and_nuclear_is_flatter() {
        let models = vec![ErrorModel::spherical(0.5, 1.0, 1.0)];
        let t = geometry_table(&models, &SchattenIndex::ALL, &LogGrid::default()).unwrap();
        assert_eq!(t.rows.len(), 3);
        let ridge = t.row(1.0, 0.5, SchattenIndex::Frobenius).unwrap();
        assert_eq!((ridge.depth_pct, ridge.curvature_pct), (0.0, 0.0));
        assert!((ridge.alpha_min - 1.0).abs() < 0.04);
        let nuc = t.row(1.0, 0.5, SchattenIndex::Nuclear).unwrap();
        assert!(nuc.depth_pct > 0.0 && nuc.curvature_pct < 0.0);
        let mut buf = Vec::new();
        t.write_layout_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("estimator,sigma\\lambda,0.5"));
        assert!(text.contains("ridge,1,0.00/0.00"));
    }
}
