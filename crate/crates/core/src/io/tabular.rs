//! CSV ingestion and random train/test splits for real data.

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use crate::ensembles::{rng_from, Dataset};
use crate::error::{Error, Result};

/// Numeric table with one designated target column.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub features: DMatrix<f64>,
    pub target: DVector<f64>,
}

impl TabularDataset {
    pub fn from_path(path: &Path, target: &str) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(file, target)
    }

    /// Parse comma-separated UTF-8 text with a header row. Every cell must
    /// be a finite decimal number; row numbers in errors count the header
    /// as row 1.
    pub fn from_reader<R: Read>(input: R, target: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let t = header
            .iter()
            .position(|h| h == target)
            .ok_or_else(|| Error::MissingTarget(target.to_string()))?;
        let mut values: Vec<f64> = Vec::new();
        let mut targets: Vec<f64> = Vec::new();
        let mut rows = 0;
        for (i, record) in reader.records().enumerate() {
            let row = i + 2;
            let record = record?;
            if record.len() != header.len() {
                return Err(Error::Parse {
                    row,
                    column: String::new(),
                    message: format!("expected {} fields, found {}", header.len(), record.len()),
                });
            }
            for (j, cell) in record.iter().enumerate() {
                let v: f64 = cell
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        row,
                        column: header[j].clone(),
                        message: format!("`{cell}` is not a finite number"),
                    })?;
                if j == t {
                    targets.push(v);
                } else {
                    values.push(v);
                }
            }
            rows += 1;
        }
        let d = header.len() - 1;
        let feature_names = header
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != t)
            .map(|(_, h)| h.clone())
            .collect();
        Ok(Self {
            feature_names,
            target_name: target.to_string(),
            features: DMatrix::from_row_slice(rows, d, &values),
            target: DVector::from_vec(targets),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    /// Random split with `train_size` training rows and the rest for
    /// testing. With `standardize`, features are z-scored with train-split
    /// statistics (constant columns are only centered) and the target is
    /// centered by its train mean, which plays the role of an intercept.
    pub fn split(&self, train_size: usize, standardize: bool, seed: u64) -> Result<Dataset> {
        let n = self.n_rows();
        if train_size == 0 || train_size >= n {
            return Err(Error::InvalidConfig(format!(
                "train_size must lie in [1, {}), got {train_size}",
                n
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng_from(seed));
        let (tr, te) = order.split_at(train_size);
        let mut x_tr = self.features.select_rows(tr);
        let mut x_te = self.features.select_rows(te);
        let mut y_tr = self.target.select_rows(tr);
        let mut y_te = self.target.select_rows(te);
        if standardize {
            let m = train_size as f64;
            for j in 0..x_tr.ncols() {
                let mean = x_tr.column(j).sum() / m;
                let var = x_tr
                    .column(j)
                    .iter()
                    .map(|v| (v - mean).powi(2))
                    .sum::<f64>()
                    / m;
                let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
                x_tr.column_mut(j).apply(|v| *v = (*v - mean) / scale);
                x_te.column_mut(j).apply(|v| *v = (*v - mean) / scale);
            }
            let ym = y_tr.sum() / m;
            y_tr.add_scalar_mut(-ym);
            y_te.add_scalar_mut(-ym);
        }
        Ok(Dataset {
            x_tr,
            y_tr,
            x_te,
            y_te,
            beta0: None,
            seed,
        })
    }
}
