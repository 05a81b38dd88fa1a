//! Datasets, CSV ingestion and the simulation generators.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{dot, LinalgError, Matrix, RandomStream};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("parse error at row {row}, column {column} ({name}): {value:?} is not a number")]
    Parse {
        row: usize,
        column: usize,
        name: String,
        value: String,
    },
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error("response column {0:?} not found in header")]
    MissingResponse(String),
    #[error("label {value} at row {row} is not binary (expected -1/+1 or 0/1)")]
    Label { row: usize, value: f64 },
    #[error("column {0} is constant and cannot be scaled")]
    ConstantColumn(usize),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Binary,
}

/// Design matrix, response and task kind. No intercept column is ever added.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vec<f64>,
    task: Task,
    feature_names: Vec<String>,
}

fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<f64>, task: Task) -> Result<Self, DataError> {
        let names = default_names(x.cols());
        Self::with_names(x, y, task, names)
    }

    pub fn with_names(
        x: Matrix,
        y: Vec<f64>,
        task: Task,
        feature_names: Vec<String>,
    ) -> Result<Self, DataError> {
        if x.rows() == 0 || x.cols() == 0 {
            return Err(DataError::Invalid(format!(
                "need n >= 1 and p >= 1, got {}x{}",
                x.rows(),
                x.cols()
            )));
        }
        if y.len() != x.rows() {
            return Err(DataError::Invalid(format!(
                "{} rows but {} responses",
                x.rows(),
                y.len()
            )));
        }
        if feature_names.len() != x.cols() {
            return Err(DataError::Invalid("one name per feature required".into()));
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(DataError::Invalid(format!(
                "non-finite response at row {row}"
            )));
        }
        if task == Task::Binary {
            if let Some(row) = y.iter().position(|&v| v != 1.0 && v != -1.0) {
                return Err(DataError::Label { row, value: y[row] });
            }
        }
        Ok(Self {
            x,
            y,
            task,
            feature_names,
        })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    /// Fitted values `Xβ`.
    pub fn fit(&self, beta: &[f64]) -> Vec<f64> {
        self.x.matvec(beta)
    }

    /// Write as CSV: feature columns in order, then the response column `y`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push("y");
        w.write_record(&header)
            .map_err(|e| DataError::Csv(e.to_string()))?;
        for i in 0..self.n() {
            let mut rec: Vec<String> = self.x.row(i).iter().map(f64::to_string).collect();
            rec.push(self.y[i].to_string());
            w.write_record(&rec)
                .map_err(|e| DataError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| DataError::Csv(e.to_string()))
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), DataError> {
        let file = std::fs::File::create(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Outcome of [`load_csv`]: the dataset plus whether 0/1 labels were remapped.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: Dataset,
    pub labels_remapped: bool,
}

/// Parse a CSV with one header row and numeric cells.
///
/// Under [`Task::Binary`] responses must be ±1, or 0/1 which is remapped
/// (0 → −1) and reported through [`Loaded::labels_remapped`].
pub fn load_csv<R: Read>(source: R, response: &str, task: Task) -> Result<Loaded, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let resp_col = header
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| DataError::MissingResponse(response.to_owned()))?;
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != resp_col)
        .map(|(_, h)| h.clone())
        .collect();

    let mut xs = Vec::new();
    let mut y = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        // row numbers are 1-based and count the header as row 1
        let row = r + 2;
        let rec = rec.map_err(|e| DataError::Csv(e.to_string()))?;
        if rec.len() != header.len() {
            return Err(DataError::Csv(format!(
                "row {row} has {} cells, header has {}",
                rec.len(),
                header.len()
            )));
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| DataError::Parse {
                    row,
                    column: j + 1,
                    name: header[j].clone(),
                    value: cell.to_owned(),
                })?;
            if j == resp_col {
                y.push(v);
            } else {
                xs.push(v);
            }
        }
    }

    let mut labels_remapped = false;
    if task == Task::Binary {
        let zero_one = y.iter().all(|&v| v == 0.0 || v == 1.0);
        let has_zero = y.contains(&0.0);
        if zero_one && has_zero {
            y.iter_mut().for_each(|v| *v = 2.0 * *v - 1.0);
            labels_remapped = true;
        } else if let Some(i) = y.iter().position(|&v| v != 1.0 && v != -1.0) {
            return Err(DataError::Label {
                row: i + 2,
                value: y[i],
            });
        }
    }
    let x = Matrix::new(y.len(), names.len(), xs)?;
    Ok(Loaded {
        dataset: Dataset::with_names(x, y, task, names)?,
        labels_remapped,
    })
}

pub fn load_csv_path(path: &Path, response: &str, task: Task) -> Result<Loaded, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_csv(std::io::BufReader::new(file), response, task)
}

/// Linear signal on the first predictor plus a two-component normal mixture.
///
/// Standard deviations are given directly: a component written `N(0, 100)`
/// in mean/variance notation has `outlier_sd = 10`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminatedSimConfig {
    pub n: usize,
    pub p: usize,
    pub signal: f64,
    pub inlier_sd: f64,
    pub outlier_sd: f64,
    pub outlier_prob: f64,
    pub seed: u64,
}

impl Default for ContaminatedSimConfig {
    fn default() -> Self {
        Self {
            n: 100,
            p: 80,
            signal: 10.0,
            inlier_sd: 1.0,
            outlier_sd: 10.0,
            outlier_prob: 0.1,
            seed: 0,
        }
    }
}

impl ContaminatedSimConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.n == 0 || self.p == 0 {
            return Err(DataError::Config("n and p must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.outlier_prob) {
            return Err(DataError::Config(format!(
                "outlier_prob {} outside [0, 1]",
                self.outlier_prob
            )));
        }
        if !(self.inlier_sd > 0.0 && self.outlier_sd > 0.0) {
            return Err(DataError::Config("standard deviations must be > 0".into()));
        }
        if !self.signal.is_finite() {
            return Err(DataError::Config("signal must be finite".into()));
        }
        Ok(())
    }
}

/// Simulate `y_i = signal * x_i1 + e_i`, returning which rows drew the outlier component.
///
/// Per observation the draw order is: the `p` predictors, one uniform for the
/// mixture component (outlier when `u < outlier_prob`), then one normal.
pub fn simulate_contaminated_labeled(
    cfg: &ContaminatedSimConfig,
) -> Result<(Dataset, Vec<bool>), DataError> {
    cfg.validate()?;
    let mut rs = RandomStream::new(cfg.seed);
    let mut xs = Vec::with_capacity(cfg.n * cfg.p);
    let mut y = Vec::with_capacity(cfg.n);
    let mut outlier = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let start = xs.len();
        xs.extend(rs.gaussian_stream().take(cfg.p));
        let is_outlier = rs.uniform() < cfg.outlier_prob;
        let sd = if is_outlier {
            cfg.outlier_sd
        } else {
            cfg.inlier_sd
        };
        let noise = rs.normal(0.0, sd);
        y.push(cfg.signal * xs[start] + noise);
        outlier.push(is_outlier);
    }
    let x = Matrix::new(cfg.n, cfg.p, xs)?;
    Ok((Dataset::new(x, y, Task::Regression)?, outlier))
}

pub fn simulate_contaminated(cfg: &ContaminatedSimConfig) -> Result<Dataset, DataError> {
    simulate_contaminated_labeled(cfg).map(|(ds, _)| ds)
}

/// Logistic-model binary data with ±1 labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySimConfig {
    pub n: usize,
    pub true_beta: Vec<f64>,
    pub seed: u64,
}

impl BinarySimConfig {
    pub fn p(&self) -> usize {
        self.true_beta.len()
    }
}

/// Per observation: `p` normals, then one uniform; `y = +1` when
/// `u < 1 / (1 + exp(-xᵀβ))`.
pub fn simulate_binary(cfg: &BinarySimConfig) -> Result<Dataset, DataError> {
    let p = cfg.p();
    if cfg.n == 0 || p == 0 {
        return Err(DataError::Config("n and p must be positive".into()));
    }
    if cfg.true_beta.iter().any(|b| !b.is_finite()) {
        return Err(DataError::Config("true_beta must be finite".into()));
    }
    let mut rs = RandomStream::new(cfg.seed);
    let mut xs = Vec::with_capacity(cfg.n * p);
    let mut y = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let start = xs.len();
        xs.extend(rs.gaussian_stream().take(p));
        let eta = dot(&xs[start..], &cfg.true_beta);
        let prob = 1.0 / (1.0 + (-eta).exp());
        y.push(if rs.uniform() < prob { 1.0 } else { -1.0 });
    }
    let x = Matrix::new(cfg.n, p, xs)?;
    Dataset::new(x, y, Task::Binary)
}

/// Column means and scales applied by [`standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardization {
    /// Map coefficients fitted on the transformed design back to the original
    /// scale. Returns `(coefficients, offset)` so that
    /// `x_origᵀ coef + offset == x_stdᵀ beta`.
    pub fn original_coefficients(&self, beta: &[f64]) -> (Vec<f64>, f64) {
        let coef: Vec<f64> = beta.iter().zip(&self.scales).map(|(b, s)| b / s).collect();
        let offset = -dot(&coef, &self.means);
        (coef, offset)
    }
}

/// Center and/or scale every column to mean zero and unit sample standard
/// deviation (divisor `n - 1`).
pub fn standardize(
    ds: &Dataset,
    center: bool,
    scale: bool,
) -> Result<(Dataset, Standardization), DataError> {
    let (n, p) = (ds.n(), ds.p());
    let mut means = vec![0.0; p];
    let mut scales = vec![1.0; p];
    for j in 0..p {
        let col = ds.x.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        if center {
            means[j] = mean;
        }
        if scale {
            let ss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
            let sd = if n > 1 {
                (ss / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            if sd <= 0.0 || !sd.is_finite() {
                return Err(DataError::ConstantColumn(j));
            }
            scales[j] = sd;
        }
    }
    let mut x = ds.x.clone();
    for i in 0..n {
        for j in 0..p {
            x.set(i, j, (x.get(i, j) - means[j]) / scales[j]);
        }
    }
    let out = Dataset::with_names(x, ds.y.clone(), ds.task, ds.feature_names.clone())?;
    Ok((out, Standardization { means, scales }))
}
