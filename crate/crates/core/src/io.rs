//! JSON and CSV schemas for exact paths, grid paths and boosting traces.
//!
//! All three serialize to one [`PathFile`] layout: a header describing the
//! problem and a list of records, each carrying `beta` and its L1 norm. Exact
//! paths key records by `lambda` and store the outgoing segment direction;
//! grid paths use `event = "grid"`; traces key by `iteration`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boosting::{BoostConfig, BoostRecord, BoostTrace};
use crate::homotopy::{
    format_events, parse_events, Breakpoint, OracleTail, PiecewisePath, Termination,
};
use crate::loss::LossKind;
use crate::numerics::norm1;
use crate::oracle::GridPath;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid json in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("schema error: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Homotopy,
    Grid,
    Boost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Lambda,
    L1norm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathHeader {
    pub kind: PathKind,
    pub loss: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta: Option<f64>,
    pub n: usize,
    pub p: usize,
    pub feature_names: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub termination: Option<Termination>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tail: Option<OracleTail>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub thin: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stopped_at_stationary: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub loss_increases: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub clamped_evaluations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iteration: Option<usize>,
    pub l1_norm: f64,
    pub event: String,
    pub beta: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub direction: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kkt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coordinate: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub loss: Option<f64>,
}

impl PathRecord {
    fn new(beta: Vec<f64>, event: String) -> Self {
        Self {
            lambda: None,
            iteration: None,
            l1_norm: norm1(&beta),
            event,
            beta,
            direction: None,
            kkt: None,
            iterations: None,
            coordinate: None,
            loss: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFile {
    pub header: PathHeader,
    pub records: Vec<PathRecord>,
}

fn header(kind: PathKind, loss: LossKind, n: usize, p: usize, names: &[String]) -> PathHeader {
    PathHeader {
        kind,
        loss: loss.token().to_owned(),
        delta: loss.delta(),
        n,
        p,
        feature_names: names.to_vec(),
        termination: None,
        tail: None,
        epsilon: None,
        steps: None,
        thin: None,
        stopped_at_stationary: None,
        loss_increases: None,
        clamped_evaluations: None,
    }
}

impl From<&PiecewisePath> for PathFile {
    fn from(path: &PiecewisePath) -> Self {
        let mut h = header(
            PathKind::Homotopy,
            path.loss,
            path.n,
            path.p,
            &path.feature_names,
        );
        h.termination = Some(path.termination.clone());
        h.tail = path.tail.clone();
        let records = path
            .breakpoints
            .iter()
            .enumerate()
            .map(|(k, bp)| {
                let mut r = PathRecord::new(bp.beta.clone(), format_events(&bp.events));
                r.lambda = Some(bp.lambda);
                r.direction = path.directions.get(k).cloned();
                r
            })
            .collect();
        PathFile { header: h, records }
    }
}

impl From<&GridPath> for PathFile {
    fn from(grid: &GridPath) -> Self {
        let p = grid.betas.first().map_or(0, Vec::len);
        let names: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
        let n = 0;
        let h = header(PathKind::Grid, grid.loss, n, p, &names);
        let records = grid
            .lambdas
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let mut r = PathRecord::new(grid.betas[k].clone(), "grid".into());
                r.lambda = Some(*l);
                r.kkt = Some(grid.kkt[k]);
                r.iterations = Some(grid.iterations[k]);
                r
            })
            .collect();
        PathFile { header: h, records }
    }
}

impl PathFile {
    /// Grid file with the dataset's shape and feature names in the header.
    pub fn from_grid(grid: &GridPath, n: usize, names: &[String]) -> Self {
        let mut f = PathFile::from(grid);
        f.header.n = n;
        f.header.feature_names = names.to_vec();
        f
    }
}

impl From<&BoostTrace> for PathFile {
    fn from(tr: &BoostTrace) -> Self {
        let mut h = header(
            PathKind::Boost,
            tr.config.loss,
            tr.n,
            tr.p,
            &tr.feature_names,
        );
        h.epsilon = Some(tr.config.epsilon);
        h.steps = Some(tr.config.steps);
        h.thin = tr.config.thin;
        h.stopped_at_stationary = tr.stopped_at_stationary;
        h.loss_increases = Some(tr.loss_increases);
        h.clamped_evaluations = Some(tr.clamped_evaluations);
        let records = tr
            .records
            .iter()
            .map(|rec| {
                let event = match rec.coordinate {
                    Some(j) => format!("boost:{j}"),
                    None => "start".to_owned(),
                };
                let mut r = PathRecord::new(rec.beta.clone(), event);
                r.iteration = Some(rec.iteration);
                r.coordinate = rec.coordinate;
                r.loss = Some(rec.loss);
                r
            })
            .collect();
        PathFile { header: h, records }
    }
}

fn loss_of(h: &PathHeader) -> Result<LossKind, FileError> {
    LossKind::from_token(&h.loss, h.delta).map_err(|e| FileError::Schema(e.to_string()))
}

impl TryFrom<&PathFile> for PiecewisePath {
    type Error = FileError;

    fn try_from(f: &PathFile) -> Result<Self, Self::Error> {
        if f.header.kind != PathKind::Homotopy {
            return Err(FileError::Schema(format!(
                "expected a homotopy path, got {:?}",
                f.header.kind
            )));
        }
        let mut breakpoints = Vec::with_capacity(f.records.len());
        let mut directions = Vec::new();
        for (k, r) in f.records.iter().enumerate() {
            let lambda = r
                .lambda
                .ok_or_else(|| FileError::Schema(format!("record {k} has no lambda")))?;
            let events = parse_events(&r.event).map_err(FileError::Schema)?;
            if r.beta.len() != f.header.p {
                return Err(FileError::Schema(format!(
                    "record {k} has {} coefficients",
                    r.beta.len()
                )));
            }
            breakpoints.push(Breakpoint {
                lambda,
                beta: r.beta.clone(),
                events,
            });
            if let Some(d) = &r.direction {
                directions.push(d.clone());
            }
        }
        if breakpoints.is_empty() || directions.len() + 1 != breakpoints.len() {
            return Err(FileError::Schema("need one direction per segment".into()));
        }
        Ok(PiecewisePath {
            loss: loss_of(&f.header)?,
            n: f.header.n,
            p: f.header.p,
            feature_names: f.header.feature_names.clone(),
            breakpoints,
            directions,
            termination: f
                .header
                .termination
                .clone()
                .unwrap_or(Termination::Completed),
            tail: f.header.tail.clone(),
        })
    }
}

impl TryFrom<&PathFile> for GridPath {
    type Error = FileError;

    fn try_from(f: &PathFile) -> Result<Self, Self::Error> {
        if f.header.kind != PathKind::Grid {
            return Err(FileError::Schema(format!(
                "expected a grid path, got {:?}",
                f.header.kind
            )));
        }
        let missing = |what: &str, k: usize| FileError::Schema(format!("record {k} has no {what}"));
        let mut g = GridPath {
            loss: loss_of(&f.header)?,
            lambdas: Vec::new(),
            betas: Vec::new(),
            kkt: Vec::new(),
            iterations: Vec::new(),
        };
        for (k, r) in f.records.iter().enumerate() {
            g.lambdas
                .push(r.lambda.ok_or_else(|| missing("lambda", k))?);
            g.betas.push(r.beta.clone());
            g.kkt.push(r.kkt.ok_or_else(|| missing("kkt", k))?);
            g.iterations
                .push(r.iterations.ok_or_else(|| missing("iterations", k))?);
        }
        Ok(g)
    }
}

impl TryFrom<&PathFile> for BoostTrace {
    type Error = FileError;

    /// The raw move history is not serialized; loaded traces have empty `moves`.
    fn try_from(f: &PathFile) -> Result<Self, Self::Error> {
        let h = &f.header;
        if h.kind != PathKind::Boost {
            return Err(FileError::Schema(format!(
                "expected a boosting trace, got {:?}",
                h.kind
            )));
        }
        let epsilon = h
            .epsilon
            .ok_or_else(|| FileError::Schema("missing epsilon".into()))?;
        let steps = h
            .steps
            .ok_or_else(|| FileError::Schema("missing steps".into()))?;
        let records = f
            .records
            .iter()
            .enumerate()
            .map(|(k, r)| {
                Ok(BoostRecord {
                    iteration: r
                        .iteration
                        .ok_or_else(|| FileError::Schema(format!("record {k} has no iteration")))?,
                    beta: r.beta.clone(),
                    coordinate: r.coordinate,
                    loss: r.loss.unwrap_or(f64::NAN),
                })
            })
            .collect::<Result<Vec<_>, FileError>>()?;
        Ok(BoostTrace {
            config: BoostConfig {
                epsilon,
                steps,
                thin: h.thin,
                loss: loss_of(h)?,
            },
            n: h.n,
            p: h.p,
            feature_names: h.feature_names.clone(),
            records,
            moves: Vec::new(),
            stopped_at_stationary: h.stopped_at_stationary,
            loss_increases: h.loss_increases.unwrap_or(0),
            clamped_evaluations: h.clamped_evaluations.unwrap_or(0),
        })
    }
}

impl PathFile {
    /// `(axis value, β)` for every record.
    pub fn points(&self, axis: Axis) -> Result<Vec<(f64, Vec<f64>)>, FileError> {
        self.records
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let key = match axis {
                    Axis::Lambda => r.lambda.ok_or_else(|| {
                        FileError::Schema(format!(
                            "record {k} has no lambda (boosting traces only support l1norm)"
                        ))
                    })?,
                    Axis::L1norm => norm1(&r.beta),
                };
                Ok((key, r.beta.clone()))
            })
            .collect()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("path files always serialize")
    }

    pub fn save_json(&self, path: &Path) -> Result<(), FileError> {
        write_json(path, self)
    }

    pub fn load_json(path: &Path) -> Result<Self, FileError> {
        read_json(path)
    }

    /// CSV with columns `<axis>, event, beta_1..beta_p`, one row per record.
    pub fn write_csv<W: Write>(&self, out: W, axis: Axis) -> Result<(), FileError> {
        let schema = |e: csv::Error| FileError::Schema(e.to_string());
        let points = self.points(axis)?;
        let mut w = csv::Writer::from_writer(out);
        let mut head = vec![
            match axis {
                Axis::Lambda => "lambda".to_owned(),
                Axis::L1norm => "l1norm".to_owned(),
            },
            "event".to_owned(),
        ];
        head.extend((1..=self.header.p).map(|j| format!("beta_{j}")));
        w.write_record(&head).map_err(schema)?;
        for ((key, beta), rec) in points.iter().zip(&self.records) {
            let mut row = vec![key.to_string(), rec.event.clone()];
            row.extend(beta.iter().map(f64::to_string));
            w.write_record(&row).map_err(schema)?;
        }
        w.flush().map_err(|source| FileError::Io {
            path: "<csv>".into(),
            source,
        })
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FileError> {
    let io = |source| FileError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| FileError::Json {
        path: path.display().to_string(),
        source,
    })?;
    w.write_all(b"\n").map_err(io)?;
    w.flush().map_err(io)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, FileError> {
    let text = std::fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| FileError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// Write the data behind a coefficient-path plot.
pub fn emit_plot_data(
    file: &PathFile,
    format: Format,
    axis: Axis,
    out: &Path,
) -> Result<(), FileError> {
    match format {
        Format::Json => {
            // validate the axis even though JSON carries every key
            file.points(axis)?;
            file.save_json(out)
        }
        Format::Csv => {
            let f = File::create(out).map_err(|source| FileError::Io {
                path: out.display().to_string(),
                source,
            })?;
            file.write_csv(BufWriter::new(f), axis)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boosting::boost;
    use crate::data::{Dataset, Task};
    use crate::homotopy::lasso_path;
    use crate::numerics::Matrix;

    fn identity_ds() -> Dataset {
        Dataset::new(Matrix::identity(2), vec![3.0, 1.0], Task::Regression).unwrap()
    }

    #[test]
    fn path_json_round_trip() {
        let path = lasso_path(&identity_ds()).unwrap();
        let file = PathFile::from(&path);
        let text = file.to_json_string();
        let back: PathFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(PiecewisePath::try_from(&back).unwrap(), path);
    }

    #[test]
    fn csv_rows_and_norm_column() {
        let path = lasso_path(&identity_ds()).unwrap();
        let file = PathFile::from(&path);
        let mut buf = Vec::new();
        file.write_csv(&mut buf, Axis::L1norm).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        let head: Vec<String> = rdr.headers().unwrap().iter().map(str::to_owned).collect();
        assert_eq!(head, ["l1norm", "event", "beta_1", "beta_2"]);
        let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), path.len());
        for row in rows {
            let norm: f64 = row[0].parse().unwrap();
            let betas: f64 = (2..row.len())
                .map(|j| row[j].parse::<f64>().unwrap().abs())
                .sum();
            assert_eq!(norm, betas);
        }
    }

    #[test]
    fn trace_has_no_lambda_axis() {
        let tr = boost(&identity_ds(), &BoostConfig::new(LossKind::Squared, 0.1, 5)).unwrap();
        let file = PathFile::from(&tr);
        assert!(file.points(Axis::Lambda).is_err());
        assert_eq!(file.points(Axis::L1norm).unwrap().len(), tr.records.len());
        let back = BoostTrace::try_from(&file).unwrap();
        assert_eq!(back.records, tr.records);
        assert_eq!(back.config, tr.config);
    }

    #[test]
    fn wrong_kind_is_schema_error() {
        let tr = boost(&identity_ds(), &BoostConfig::new(LossKind::Squared, 0.1, 5)).unwrap();
        let file = PathFile::from(&tr);
        assert!(matches!(
            PiecewisePath::try_from(&file),
            Err(FileError::Schema(_))
        ));
    }
}
