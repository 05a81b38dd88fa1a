//! Generic ε-boosting: greedy coordinate descent with fixed step size.
//!
//! Starting from β = 0, each iteration picks the coordinate with the largest
//! absolute partial derivative of the total loss (lowest index on ties) and
//! moves it by ε against the sign of that derivative. With squared loss this
//! is forward stagewise regression; with exponential loss it is an AdaBoost
//! variant.
//!
//! A step of ε on coordinate `j` can only raise the loss once
//! `ε · κ · ‖x_j‖² / 2 ≥ |g_j|`, with `κ` the largest per-observation
//! curvature along the step (2 for squared loss). Runs report how many
//! iterations increased the loss in [`BoostTrace::loss_increases`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::loss::{gradient_at_fit, total_loss_at_fit, LossError, LossKind};
use crate::numerics::norm1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoostError {
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("non-finite loss or gradient at iteration {0}")]
    NonFinite(usize),
    #[error("invalid boosting config: {0}")]
    Config(String),
    #[error("norm {s} outside the recorded range [0, {max}]")]
    OutOfRange { s: f64, max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostConfig {
    pub epsilon: f64,
    pub steps: usize,
    /// Record every `thin` iterations; `None` means `max(1, steps / 1000)`.
    pub thin: Option<usize>,
    pub loss: LossKind,
}

impl BoostConfig {
    pub fn new(loss: LossKind, epsilon: f64, steps: usize) -> Self {
        Self {
            epsilon,
            steps,
            thin: None,
            loss,
        }
    }

    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = Some(thin);
        self
    }

    pub fn effective_thin(&self) -> usize {
        self.thin.unwrap_or((self.steps / 1000).max(1))
    }

    pub fn validate(&self) -> Result<(), BoostError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(BoostError::Config(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if self.thin == Some(0) {
            return Err(BoostError::Config("thin must be >= 1".into()));
        }
        Ok(())
    }
}

/// One raw coordinate move: `β_coordinate += sign · ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub coordinate: usize,
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostRecord {
    pub iteration: usize,
    pub beta: Vec<f64>,
    /// Coordinate moved at this iteration; `None` at t = 0.
    pub coordinate: Option<usize>,
    pub loss: f64,
}

impl BoostRecord {
    pub fn l1_norm(&self) -> f64 {
        norm1(&self.beta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostTrace {
    pub config: BoostConfig,
    pub n: usize,
    pub p: usize,
    pub feature_names: Vec<String>,
    pub records: Vec<BoostRecord>,
    /// Every raw iteration, in order.
    pub moves: Vec<Move>,
    /// Iteration at which the gradient was exactly zero, if any.
    pub stopped_at_stationary: Option<usize>,
    pub loss_increases: usize,
    pub clamped_evaluations: usize,
}

impl BoostTrace {
    pub fn final_beta(&self) -> &[f64] {
        &self
            .records
            .last()
            .expect("trace always records t = 0")
            .beta
    }

    pub fn max_norm(&self) -> f64 {
        self.records
            .iter()
            .map(BoostRecord::l1_norm)
            .fold(0.0, f64::max)
    }

    /// `(‖β‖₁, β)` for every record.
    pub fn norm_points(&self) -> Vec<(f64, Vec<f64>)> {
        self.records
            .iter()
            .map(|r| (r.l1_norm(), r.beta.clone()))
            .collect()
    }
}

fn argmax_abs(g: &[f64]) -> (usize, f64) {
    let mut best = (0, g[0]);
    for (j, v) in g.iter().enumerate().skip(1) {
        if v.abs() > best.1.abs() {
            best = (j, *v);
        }
    }
    best
}

/// Run `cfg.steps` iterations of ε-boosting from β = 0.
pub fn boost(ds: &Dataset, cfg: &BoostConfig) -> Result<BoostTrace, BoostError> {
    cfg.validate()?;
    cfg.loss.check_dataset(ds)?;
    let loss = cfg.loss;
    let thin = cfg.effective_thin();
    let p = ds.p();
    // β_j = counts_j · ε keeps every coordinate on the ε lattice
    let mut counts = vec![0i64; p];
    let beta_of =
        |counts: &[i64]| -> Vec<f64> { counts.iter().map(|c| *c as f64 * cfg.epsilon).collect() };

    let clamped = |fit: &[f64]| {
        ds.y()
            .iter()
            .zip(fit)
            .filter(|(y, f)| loss.is_clamped(**y, **f))
            .count()
    };

    let mut beta = beta_of(&counts);
    let mut fit = ds.fit(&beta);
    let mut current = total_loss_at_fit(ds, loss, &fit);
    let mut clamped_evaluations = clamped(&fit);
    let mut trace = BoostTrace {
        config: *cfg,
        n: ds.n(),
        p,
        feature_names: ds.feature_names().to_vec(),
        records: vec![BoostRecord {
            iteration: 0,
            beta: beta.clone(),
            coordinate: None,
            loss: current,
        }],
        moves: Vec::with_capacity(cfg.steps),
        stopped_at_stationary: None,
        loss_increases: 0,
        clamped_evaluations: 0,
    };

    for t in 1..=cfg.steps {
        let grad = gradient_at_fit(ds, loss, &fit);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(BoostError::NonFinite(t));
        }
        let (j, gj) = argmax_abs(&grad);
        if gj == 0.0 {
            trace.stopped_at_stationary = Some(t);
            break;
        }
        let sign: i8 = if gj > 0.0 { -1 } else { 1 };
        counts[j] += i64::from(sign);
        beta = beta_of(&counts);
        fit = ds.fit(&beta);
        let next = total_loss_at_fit(ds, loss, &fit);
        if !next.is_finite() {
            return Err(BoostError::NonFinite(t));
        }
        clamped_evaluations += clamped(&fit);
        if next > current {
            trace.loss_increases += 1;
        }
        current = next;
        trace.moves.push(Move {
            coordinate: j,
            sign,
        });
        if t % thin == 0 || t == cfg.steps {
            trace.records.push(BoostRecord {
                iteration: t,
                beta: beta.clone(),
                coordinate: Some(j),
                loss: current,
            });
        }
    }
    if trace.stopped_at_stationary.is_some() {
        let last = trace.records.last().map_or(0, |r| r.iteration);
        if last != trace.moves.len() {
            trace.records.push(BoostRecord {
                iteration: trace.moves.len(),
                beta: beta.clone(),
                coordinate: trace.moves.last().map(|m| m.coordinate),
                loss: current,
            });
        }
    }
    trace.clamped_evaluations = clamped_evaluations;
    Ok(trace)
}

/// Recorded iterate whose L1 norm is closest to `s` (earliest on ties).
pub fn trace_at_norm(trace: &BoostTrace, s: f64) -> Result<Vec<f64>, BoostError> {
    let max = trace.max_norm();
    if !(s >= 0.0 && s <= max) {
        return Err(BoostError::OutOfRange { s, max });
    }
    let mut best: Option<(f64, &BoostRecord)> = None;
    for r in &trace.records {
        let gap = (r.l1_norm() - s).abs();
        if best.is_none_or(|(g, _)| gap < g) {
            best = Some((gap, r));
        }
    }
    Ok(best.expect("at least one record").1.beta.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{simulate_binary, BinarySimConfig, Task};
    use crate::numerics::Matrix;

    fn identity_ds() -> Dataset {
        Dataset::new(Matrix::identity(2), vec![3.0, 1.0], Task::Regression).unwrap()
    }

    #[test]
    fn first_step_by_hand() {
        let tr = boost(&identity_ds(), &BoostConfig::new(LossKind::Squared, 0.1, 1)).unwrap();
        assert_eq!(tr.final_beta(), &[0.1, 0.0]);
        assert_eq!(
            tr.moves,
            vec![Move {
                coordinate: 0,
                sign: 1
            }]
        );
    }

    #[test]
    fn zero_steps_is_zero() {
        let tr = boost(&identity_ds(), &BoostConfig::new(LossKind::Squared, 0.1, 0)).unwrap();
        assert_eq!(tr.records.len(), 1);
        assert_eq!(tr.final_beta(), &[0.0, 0.0]);
    }

    #[test]
    fn forty_stagewise_steps_reach_least_squares() {
        let cfg = BoostConfig::new(LossKind::Squared, 0.1, 40).with_thin(1);
        let tr = boost(&identity_ds(), &cfg).unwrap();
        let b = tr.final_beta();
        assert!((b[0] - 3.0).abs() <= 0.1 + 1e-12, "{b:?}");
        assert!((b[1] - 1.0).abs() <= 0.1 + 1e-12, "{b:?}");
        assert_eq!(tr.loss_increases, 0);
        assert!(tr.records.windows(2).all(|w| w[1].loss <= w[0].loss));
    }

    #[test]
    fn stops_on_exact_zero_gradient() {
        // y = (0.5, 0.25) with ε = 0.25: after three steps the residual is zero
        let ds = Dataset::new(Matrix::identity(2), vec![0.5, 0.25], Task::Regression).unwrap();
        let tr = boost(&ds, &BoostConfig::new(LossKind::Squared, 0.25, 10)).unwrap();
        assert_eq!(tr.stopped_at_stationary, Some(4));
        assert_eq!(tr.moves.len(), 3);
        assert_eq!(tr.final_beta(), &[0.5, 0.25]);
    }

    #[test]
    fn margin_loss_needs_binary_labels() {
        let err = boost(
            &identity_ds(),
            &BoostConfig::new(LossKind::Exponential, 0.1, 5),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            BoostError::Loss(LossError::InvalidLabel { .. })
        ));
    }

    #[test]
    fn invalid_config() {
        assert!(boost(&identity_ds(), &BoostConfig::new(LossKind::Squared, 0.0, 5)).is_err());
        let cfg = BoostConfig::new(LossKind::Squared, 0.1, 5).with_thin(0);
        assert!(boost(&identity_ds(), &cfg).is_err());
    }

    #[test]
    fn default_thinning() {
        assert_eq!(
            BoostConfig::new(LossKind::Squared, 0.1, 7000).effective_thin(),
            7
        );
        assert_eq!(
            BoostConfig::new(LossKind::Squared, 0.1, 10).effective_thin(),
            1
        );
        let ds = simulate_binary(&BinarySimConfig {
            n: 50,
            true_beta: vec![1.0, -1.0],
            seed: 2,
        })
        .unwrap();
        let tr = boost(
            &ds,
            &BoostConfig::new(LossKind::BinomialDeviance, 0.01, 2500),
        )
        .unwrap();
        // t = 0, every second iteration, and the final one
        assert_eq!(tr.records.len(), 1 + 1250);
        assert_eq!(tr.records.last().unwrap().iteration, 2500);
    }

    #[test]
    fn trace_at_norm_examples() {
        let cfg = BoostConfig::new(LossKind::Squared, 0.1, 40).with_thin(1);
        let tr = boost(&identity_ds(), &cfg).unwrap();
        assert_eq!(trace_at_norm(&tr, 0.0).unwrap(), vec![0.0, 0.0]);
        let top = tr.max_norm();
        assert_eq!(trace_at_norm(&tr, top).unwrap(), tr.final_beta());
        for s in [0.35, 1.0, 2.55, 3.9] {
            let b = trace_at_norm(&tr, s).unwrap();
            assert!((norm1(&b) - s).abs() <= 0.1, "{s}");
        }
        assert!(matches!(
            trace_at_norm(&tr, top + 1.0),
            Err(BoostError::OutOfRange { .. })
        ));
        assert!(trace_at_norm(&tr, -0.1).is_err());
    }
}
