//! Exact piecewise-linear solution paths for the Lasso and the Huberized Lasso.
//!
//! Both problems minimise `Σ L(y_i, x_iᵀβ) + λ‖β‖₁` and share one event-driven
//! engine. Between breakpoints the active set `A`, the active signs `s_A` and
//! (for Huber) the set `Q` of observations in the quadratic zone are fixed,
//! so the direction `γ` solves
//!
//! ```text
//! 2 X_{Q,A}ᵀ X_{Q,A} γ_A = s_A
//! ```
//!
//! and `β(λ) = β(λ_k) + (λ_k − λ) γ` until the next event: a variable entering,
//! an active coefficient reaching zero, or (Huber) a residual crossing `±δ`.
//! The Lasso is the case where every observation stays quadratic.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, Task};
use crate::loss::{self, LossError, LossKind};
use crate::numerics::{Cholesky, PIVOT_TOL};
use crate::oracle::{self, OracleConfig};

pub use crate::loss::kkt_residual;

/// Events closer than this (times `max(1, λ_0)`) in λ are processed together.
pub const EVENT_TIE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("active set {indices:?} is collinear")]
    CollinearActiveSet { indices: Vec<usize> },
    #[error("event limit of {limit} exceeded")]
    StepLimitExceeded { limit: usize },
    #[error("path solvers need a regression dataset")]
    WrongTask,
    #[error("lambda {lambda} outside the path range [{min}, {max}]")]
    OutOfRange { lambda: f64, min: f64, max: f64 },
    #[error("only squared and huber losses have exact paths, got {0}")]
    UnsupportedLoss(String),
    #[error(transparent)]
    Loss(#[from] LossError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    Quadratic,
    Linear,
}

/// What happened at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathEvent {
    Entry(usize),
    Drop(usize),
    RegimeChange { obs: usize, into: Zone },
    Terminal,
}

impl fmt::Display for PathEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathEvent::Entry(j) => write!(f, "entry:{j}"),
            PathEvent::Drop(j) => write!(f, "drop:{j}"),
            PathEvent::RegimeChange { obs, into } => match into {
                Zone::Quadratic => write!(f, "regime:{obs}:quadratic"),
                Zone::Linear => write!(f, "regime:{obs}:linear"),
            },
            PathEvent::Terminal => f.write_str("terminal"),
        }
    }
}

impl FromStr for PathEvent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let index = |t: &str| t.parse::<usize>().map_err(|e| format!("{s:?}: {e}"));
        match parts.as_slice() {
            ["terminal"] => Ok(PathEvent::Terminal),
            ["entry", j] => Ok(PathEvent::Entry(index(j)?)),
            ["drop", j] => Ok(PathEvent::Drop(index(j)?)),
            ["regime", i, "quadratic"] => Ok(PathEvent::RegimeChange {
                obs: index(i)?,
                into: Zone::Quadratic,
            }),
            ["regime", i, "linear"] => Ok(PathEvent::RegimeChange {
                obs: index(i)?,
                into: Zone::Linear,
            }),
            _ => Err(format!("unknown path event {s:?}")),
        }
    }
}

/// Join events with `;`, the form used in serialized paths.
pub fn format_events(events: &[PathEvent]) -> String {
    events
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

pub fn parse_events(s: &str) -> Result<Vec<PathEvent>, String> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Breakpoint {
    pub lambda: f64,
    pub beta: Vec<f64>,
    pub events: Vec<PathEvent>,
}

/// Why the path stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    /// Reached λ = 0.
    Completed,
    /// The next entry would make the active set larger than `n`.
    RankLimit { lambda: f64 },
    /// The quadratic-zone rows give a singular restricted Hessian; the path is
    /// halted at the last valid breakpoint.
    DegenerateQuadraticZone {
        lambda: f64,
        active: usize,
        quadratic: usize,
    },
}

/// Solution at a small λ computed by the proximal-gradient oracle after a
/// degenerate halt. Not part of the piecewise-linear breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTail {
    pub lambda: f64,
    pub beta: Vec<f64>,
    pub kkt: f64,
    pub converged: bool,
}

/// Breakpoints `λ_0 > … > λ_m` with `β` at each and the direction of each
/// segment, stored as `dβ` per unit decrease of λ.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePath {
    pub loss: LossKind,
    pub n: usize,
    pub p: usize,
    pub feature_names: Vec<String>,
    pub breakpoints: Vec<Breakpoint>,
    /// `directions[k]` applies on `[λ_{k+1}, λ_k]`.
    pub directions: Vec<Vec<f64>>,
    pub termination: Termination,
    pub tail: Option<OracleTail>,
}

impl PiecewisePath {
    pub fn lambdas(&self) -> Vec<f64> {
        self.breakpoints.iter().map(|b| b.lambda).collect()
    }

    pub fn lambda_max(&self) -> f64 {
        self.breakpoints[0].lambda
    }

    pub fn lambda_min(&self) -> f64 {
        self.breakpoints.last().map_or(0.0, |b| b.lambda)
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breakpoints.is_empty()
    }

    /// Index `k` of the segment `[λ_{k+1}, λ_k]` containing λ.
    pub fn segment_of(&self, lambda: f64) -> Option<usize> {
        if self.directions.is_empty() {
            return None;
        }
        let k = self
            .breakpoints
            .partition_point(|b| b.lambda > lambda)
            .saturating_sub(1);
        Some(k.min(self.directions.len() - 1))
    }
}

/// Solution at an arbitrary λ in `[λ_m, λ_0]`.
///
/// Returns the stored β at breakpoints and `β(λ_k) − (λ − λ_k) γ_k` inside
/// segment `k`.
pub fn evaluate_path(path: &PiecewisePath, lambda: f64) -> Result<Vec<f64>, PathError> {
    let (lo, hi) = (path.lambda_min(), path.lambda_max());
    if !(lambda >= lo && lambda <= hi) {
        return Err(PathError::OutOfRange {
            lambda,
            min: lo,
            max: hi,
        });
    }
    if let Some(bp) = path.breakpoints.iter().find(|b| b.lambda == lambda) {
        return Ok(bp.beta.clone());
    }
    let k = path
        .segment_of(lambda)
        .expect("a lambda strictly inside the range lies in some segment");
    let bp = &path.breakpoints[k];
    let gamma = &path.directions[k];
    Ok(bp
        .beta
        .iter()
        .zip(gamma)
        .map(|(b, g)| b - (lambda - bp.lambda) * g)
        .collect())
}

/// Active set, its signs and the per-observation zone flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveState {
    pub active: Vec<usize>,
    pub signs: Vec<f64>,
    pub zones: Vec<Zone>,
}

impl ActiveState {
    fn quadratic_rows(&self) -> Vec<usize> {
        self.zones
            .iter()
            .enumerate()
            .filter(|(_, z)| **z == Zone::Quadratic)
            .map(|(i, _)| i)
            .collect()
    }

    fn contains(&self, j: usize) -> bool {
        self.active.contains(&j)
    }

    fn insert(&mut self, j: usize, sign: f64) {
        let pos = self.active.partition_point(|&a| a < j);
        self.active.insert(pos, j);
        self.signs.insert(pos, sign);
    }

    fn remove(&mut self, j: usize) {
        if let Some(pos) = self.active.iter().position(|&a| a == j) {
            self.active.remove(pos);
            self.signs.remove(pos);
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PathOptions {
    /// Override the `10·p + 100` event limit.
    pub max_events: Option<usize>,
    /// After a degenerate halt, solve at `1e-10·λ_0` with the oracle.
    pub oracle_tail: bool,
}

/// Lasso path `argmin ‖y − Xβ‖² + λ‖β‖₁` from `λ_0 = λ_max` down to 0.
pub fn lasso_path(ds: &Dataset) -> Result<PiecewisePath, PathError> {
    Engine::new(ds, None, &PathOptions::default())?.run()
}

/// Huberized Lasso path with knot `delta`.
pub fn huberized_lasso_path(ds: &Dataset, delta: f64) -> Result<PiecewisePath, PathError> {
    huberized_lasso_path_with(
        ds,
        delta,
        &PathOptions {
            oracle_tail: true,
            ..Default::default()
        },
    )
}

pub fn huberized_lasso_path_with(
    ds: &Dataset,
    delta: f64,
    opts: &PathOptions,
) -> Result<PiecewisePath, PathError> {
    LossKind::huber(delta)?;
    let path = Engine::new(ds, Some(delta), opts)?.run()?;
    Ok(path)
}

/// Dispatch on the loss: squared → [`lasso_path`], huber → [`huberized_lasso_path`].
pub fn exact_path(ds: &Dataset, loss: LossKind) -> Result<PiecewisePath, PathError> {
    match loss {
        LossKind::Squared => lasso_path(ds),
        LossKind::Huber { delta } => huberized_lasso_path(ds, delta),
        other => Err(PathError::UnsupportedLoss(other.to_string())),
    }
}

enum Direction {
    Ok(Vec<f64>),
    Singular,
}

struct Engine<'a> {
    ds: &'a Dataset,
    delta: Option<f64>,
    loss: LossKind,
    state: ActiveState,
    beta: Vec<f64>,
    lambda: f64,
    max_events: usize,
    oracle_tail: bool,
    tie_tol: f64,
}

impl<'a> Engine<'a> {
    fn new(ds: &'a Dataset, delta: Option<f64>, opts: &PathOptions) -> Result<Self, PathError> {
        if ds.task() != Task::Regression {
            return Err(PathError::WrongTask);
        }
        let loss = match delta {
            Some(d) => LossKind::Huber { delta: d },
            None => LossKind::Squared,
        };
        let zones = ds
            .y()
            .iter()
            .map(|y| match delta {
                Some(d) if y.abs() > d => Zone::Linear,
                _ => Zone::Quadratic,
            })
            .collect();
        Ok(Self {
            ds,
            delta,
            loss,
            state: ActiveState {
                active: Vec::new(),
                signs: Vec::new(),
                zones,
            },
            beta: vec![0.0; ds.p()],
            lambda: 0.0,
            max_events: opts.max_events.unwrap_or(10 * ds.p() + 100),
            oracle_tail: opts.oracle_tail,
            tie_tol: 0.0,
        })
    }

    fn residuals(&self) -> Vec<f64> {
        self.ds
            .y()
            .iter()
            .zip(self.ds.fit(&self.beta))
            .map(|(y, f)| y - f)
            .collect()
    }

    /// Negative loss gradient `c = Σ ψ(r_i) x_i` using the tracked zones.
    fn correlations(&self, r: &[f64]) -> Vec<f64> {
        let psi: Vec<f64> = r
            .iter()
            .zip(&self.state.zones)
            .map(|(ri, z)| match (z, self.delta) {
                (Zone::Linear, Some(d)) => 2.0 * d * ri.signum(),
                _ => 2.0 * ri,
            })
            .collect();
        self.ds.x().tr_matvec(&psi)
    }

    fn direction(&self) -> Direction {
        let q = self.state.quadratic_rows();
        let a = &self.state.active;
        if a.len() > q.len() {
            return Direction::Singular;
        }
        let mut h = self.ds.x().gram_subset(&q, a);
        let mut max_diag: f64 = 1.0;
        for i in 0..a.len() {
            let v = 2.0 * h.get(i, i);
            max_diag = max_diag.max(v);
            for j in 0..a.len() {
                h.set(i, j, 2.0 * h.get(i, j));
            }
        }
        match Cholesky::factor_with_tol(&h, PIVOT_TOL * max_diag) {
            Ok(ch) => {
                let g_a = ch.solve(&self.state.signs);
                let mut gamma = vec![0.0; self.ds.p()];
                for (k, &j) in a.iter().enumerate() {
                    gamma[j] = g_a[k];
                }
                Direction::Ok(gamma)
            }
            Err(_) => Direction::Singular,
        }
    }

    fn singular(&self) -> Result<Termination, PathError> {
        match self.delta {
            Some(_) => Ok(Termination::DegenerateQuadraticZone {
                lambda: self.lambda,
                active: self.state.active.len(),
                quadratic: self.state.quadratic_rows().len(),
            }),
            None if self.state.active.len() > self.ds.n() => Ok(Termination::RankLimit {
                lambda: self.lambda,
            }),
            None => Err(PathError::CollinearActiveSet {
                indices: self.state.active.clone(),
            }),
        }
    }

    fn run(mut self) -> Result<PiecewisePath, PathError> {
        let r = self.residuals();
        let c = self.correlations(&r);
        let lambda0 = c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        self.lambda = lambda0;
        self.tie_tol = EVENT_TIE_TOL * lambda0.max(1.0);

        let mut breakpoints = Vec::new();
        let mut directions = Vec::new();
        if lambda0 == 0.0 {
            breakpoints.push(Breakpoint {
                lambda: 0.0,
                beta: self.beta.clone(),
                events: vec![PathEvent::Terminal],
            });
            return Ok(self.finish(breakpoints, directions, Termination::Completed));
        }

        let mut events = Vec::new();
        for (j, cj) in c.iter().enumerate() {
            if cj.abs() >= lambda0 - self.tie_tol {
                self.state.insert(j, cj.signum());
                events.push(PathEvent::Entry(j));
            }
        }
        let mut processed = events.len();
        breakpoints.push(Breakpoint {
            lambda: lambda0,
            beta: self.beta.clone(),
            events,
        });

        // Items that changed state at the current breakpoint may not switch
        // back across the boundary they sit on until λ has moved: a dropped
        // variable keeps the sign it left with, an observation its residual sign.
        let mut barred_var: Vec<(usize, f64)> = Vec::new();
        let mut barred_obs: Vec<usize> = Vec::new();
        loop {
            if processed > self.max_events {
                return Err(PathError::StepLimitExceeded {
                    limit: self.max_events,
                });
            }
            let gamma = match self.direction() {
                Direction::Ok(g) => g,
                Direction::Singular => {
                    let term = self.singular()?;
                    return Ok(self.finish(breakpoints, directions, term));
                }
            };
            let r = self.residuals();
            let c = self.correlations(&r);
            let d = self.ds.fit(&gamma);

            // Candidate step lengths t = λ_k − λ for every event type.
            let mut cands: Vec<(f64, PathEvent)> = vec![(self.lambda, PathEvent::Terminal)];
            let mut dq = d.clone();
            for (v, z) in dq.iter_mut().zip(&self.state.zones) {
                if *z == Zone::Linear {
                    *v = 0.0;
                }
            }
            let slope = self.ds.x().tr_matvec(&dq);
            for j in 0..self.ds.p() {
                if self.state.contains(j) {
                    let (b, g) = (self.beta[j], gamma[j]);
                    if b != 0.0 && g != 0.0 {
                        let t = -b / g;
                        if t > 0.0 {
                            cands.push((t, PathEvent::Drop(j)));
                        }
                    }
                } else {
                    let left = barred_var.iter().find(|(b, _)| *b == j).map(|(_, s)| *s);
                    let a = 2.0 * slope[j];
                    let mut best = f64::INFINITY;
                    if 1.0 - a > 0.0 && left != Some(1.0) {
                        best = best.min((self.lambda - c[j]) / (1.0 - a));
                    }
                    if 1.0 + a > 0.0 && left != Some(-1.0) {
                        best = best.min((self.lambda + c[j]) / (1.0 + a));
                    }
                    if best.is_finite() {
                        cands.push((best.max(0.0), PathEvent::Entry(j)));
                    }
                }
            }
            if let Some(delta) = self.delta {
                for (i, (&ri, &di)) in r.iter().zip(&d).enumerate() {
                    if di == 0.0 {
                        continue;
                    }
                    let barred = barred_obs.contains(&i);
                    let hit = match self.state.zones[i] {
                        Zone::Quadratic if di > 0.0 => {
                            (!(barred && ri < 0.0)).then(|| ((ri + delta) / di, Zone::Linear))
                        }
                        Zone::Quadratic => {
                            (!(barred && ri > 0.0)).then(|| ((ri - delta) / di, Zone::Linear))
                        }
                        Zone::Linear if barred => None,
                        Zone::Linear if ri > 0.0 && di > 0.0 => {
                            Some(((ri - delta) / di, Zone::Quadratic))
                        }
                        Zone::Linear if ri < 0.0 && di < 0.0 => {
                            Some(((ri + delta) / di, Zone::Quadratic))
                        }
                        Zone::Linear => None,
                    };
                    if let Some((t, into)) = hit {
                        cands.push((t.max(0.0), PathEvent::RegimeChange { obs: i, into }));
                    }
                }
            }

            let t_min = cands
                .iter()
                .map(|(t, _)| *t)
                .fold(f64::INFINITY, f64::min)
                .min(self.lambda);
            let terminal = t_min >= self.lambda - self.tie_tol;
            let step = if terminal {
                self.lambda
            } else if t_min <= self.tie_tol {
                0.0
            } else {
                t_min
            };
            let mut due: Vec<PathEvent> = cands
                .iter()
                .filter(|(t, e)| *t <= t_min + self.tie_tol && *e != PathEvent::Terminal)
                .map(|(_, e)| *e)
                .collect();

            if step > 0.0 {
                for j in &self.state.active {
                    self.beta[*j] += step * gamma[*j];
                }
                self.lambda = if terminal { 0.0 } else { self.lambda - step };
                directions.push(gamma);
                barred_var.clear();
                barred_obs.clear();
            }

            if terminal {
                // Coefficients that reach zero exactly at λ = 0 are reported
                // as drops alongside the terminal event.
                due.retain(|e| matches!(e, PathEvent::Drop(_)));
                for e in &due {
                    if let PathEvent::Drop(j) = e {
                        self.beta[*j] = 0.0;
                    }
                }
                due.push(PathEvent::Terminal);
                self.record(&mut breakpoints, step, due);
                return Ok(self.finish(breakpoints, directions, Termination::Completed));
            }

            // Drops, then regime changes, then entries; each group in index order.
            due.sort_by_key(|e| match *e {
                PathEvent::Drop(j) => (0, j),
                PathEvent::RegimeChange { obs, .. } => (1, obs),
                PathEvent::Entry(j) => (2, j),
                PathEvent::Terminal => (3, 0),
            });
            let r_new = self.residuals();
            let mut applied = Vec::with_capacity(due.len());
            for e in &due {
                match *e {
                    PathEvent::Drop(j) => {
                        let pos = self.state.active.iter().position(|&a| a == j);
                        if let Some(pos) = pos {
                            barred_var.push((j, self.state.signs[pos]));
                        }
                        self.beta[j] = 0.0;
                        self.state.remove(j);
                    }
                    PathEvent::RegimeChange { obs, into } => {
                        self.state.zones[obs] = into;
                        barred_obs.push(obs);
                    }
                    PathEvent::Entry(_) | PathEvent::Terminal => {}
                }
            }
            // entry signs use the correlations after drops and regime changes
            let c_new = self.correlations(&r_new);
            for e in &due {
                if let PathEvent::Entry(j) = *e {
                    self.state.insert(j, c_new[j].signum());
                }
                applied.push(*e);
            }
            processed += applied.len();
            self.record(&mut breakpoints, step, applied);
        }
    }

    fn record(&self, breakpoints: &mut Vec<Breakpoint>, step: f64, events: Vec<PathEvent>) {
        if step > 0.0 {
            breakpoints.push(Breakpoint {
                lambda: self.lambda,
                beta: self.beta.clone(),
                events,
            });
        } else {
            let last = breakpoints.last_mut().expect("path has a first breakpoint");
            last.beta = self.beta.clone();
            last.events.extend(events);
        }
    }

    fn finish(
        &self,
        breakpoints: Vec<Breakpoint>,
        directions: Vec<Vec<f64>>,
        termination: Termination,
    ) -> PiecewisePath {
        let tail = match (&termination, self.oracle_tail) {
            (Termination::DegenerateQuadraticZone { .. }, true) => {
                let lambda = 1e-10 * breakpoints[0].lambda;
                let warm = breakpoints.last().map(|b| b.beta.clone());
                let (beta, converged) = match oracle::solve_l1(
                    self.ds,
                    self.loss,
                    lambda,
                    &OracleConfig::default(),
                    warm.as_deref(),
                ) {
                    Ok(sol) => (sol.beta, true),
                    Err(oracle::OracleError::MaxItersExceeded { best, .. }) => (best, false),
                    Err(_) => (warm.unwrap_or_default(), false),
                };
                let kkt = loss::kkt_residual(self.ds, self.loss, lambda, &beta).unwrap_or(f64::NAN);
                Some(OracleTail {
                    lambda,
                    beta,
                    kkt,
                    converged,
                })
            }
            _ => None,
        };
        PiecewisePath {
            loss: self.loss,
            n: self.ds.n(),
            p: self.ds.p(),
            feature_names: self.ds.feature_names().to_vec(),
            breakpoints,
            directions,
            termination,
            tail,
        }
    }
}

/// Largest KKT residual over all breakpoints, each scaled by `1 / (1 + λ)`.
pub fn max_scaled_kkt(ds: &Dataset, path: &PiecewisePath) -> Result<f64, PathError> {
    let mut worst: f64 = 0.0;
    for bp in &path.breakpoints {
        let k = kkt_residual(ds, path.loss, bp.lambda, &bp.beta)?;
        worst = worst.max(k / (1.0 + bp.lambda));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{max_abs_diff, Matrix};

    fn identity_ds() -> Dataset {
        Dataset::new(Matrix::identity(2), vec![3.0, 1.0], Task::Regression).unwrap()
    }

    #[test]
    fn orthonormal_soft_threshold() {
        let path = lasso_path(&identity_ds()).unwrap();
        assert_eq!(path.lambdas(), vec![6.0, 2.0, 0.0]);
        assert_eq!(path.breakpoints[0].beta, vec![0.0, 0.0]);
        assert!(max_abs_diff(&path.breakpoints[1].beta, &[2.0, 0.0]) < 1e-12);
        assert!(max_abs_diff(&path.breakpoints[2].beta, &[3.0, 1.0]) < 1e-12);
        assert_eq!(path.breakpoints[0].events, vec![PathEvent::Entry(0)]);
        assert_eq!(path.breakpoints[1].events, vec![PathEvent::Entry(1)]);
        assert_eq!(path.breakpoints[2].events, vec![PathEvent::Terminal]);
        assert_eq!(path.termination, Termination::Completed);
    }

    #[test]
    fn evaluate_identity_path() {
        let path = lasso_path(&identity_ds()).unwrap();
        let b = evaluate_path(&path, 1.0).unwrap();
        assert!(max_abs_diff(&b, &[2.5, 0.5]) < 1e-12);
        for bp in &path.breakpoints {
            assert_eq!(evaluate_path(&path, bp.lambda).unwrap(), bp.beta);
        }
        let mid = evaluate_path(&path, 4.0).unwrap();
        let expect: Vec<f64> = path.breakpoints[0]
            .beta
            .iter()
            .zip(&path.breakpoints[1].beta)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        assert!(max_abs_diff(&mid, &expect) < 1e-12);
        assert!(matches!(
            evaluate_path(&path, 6.5),
            Err(PathError::OutOfRange { .. })
        ));
        assert!(evaluate_path(&path, -1.0).is_err());
    }

    #[test]
    fn zero_response_single_breakpoint() {
        let ds = Dataset::new(Matrix::identity(3), vec![0.0; 3], Task::Regression).unwrap();
        let path = lasso_path(&ds).unwrap();
        assert_eq!(path.len(), 1);
        assert_eq!(path.breakpoints[0].beta, vec![0.0; 3]);
        assert!(path.directions.is_empty());
        assert_eq!(evaluate_path(&path, 0.0).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn duplicated_columns_are_collinear() {
        let x = Matrix::from_rows(&[
            vec![1.0, 1.0, 0.3],
            vec![2.0, 2.0, -1.0],
            vec![-1.0, -1.0, 0.5],
            vec![0.5, 0.5, 2.0],
        ])
        .unwrap();
        let ds = Dataset::new(x, vec![1.0, 2.0, -0.5, 0.3], Task::Regression).unwrap();
        match lasso_path(&ds) {
            Err(PathError::CollinearActiveSet { indices }) => {
                assert!(indices.contains(&0) && indices.contains(&1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn binary_dataset_rejected() {
        let ds = Dataset::new(Matrix::identity(2), vec![1.0, -1.0], Task::Binary).unwrap();
        assert_eq!(lasso_path(&ds).unwrap_err(), PathError::WrongTask);
    }

    #[test]
    fn huber_one_dimensional_knot() {
        // Single observation y = 3 starts in the linear zone: the gradient is
        // the constant -2δ = -2 until the residual reaches the knot, so the
        // restricted Hessian is empty right at λ_0 = 2.
        let x = Matrix::new(1, 1, vec![1.0]).unwrap();
        let ds = Dataset::new(x, vec![3.0], Task::Regression).unwrap();
        let path = huberized_lasso_path(&ds, 1.0).unwrap();
        assert_eq!(path.lambda_max(), 2.0);
        assert_eq!(path.breakpoints[0].events, vec![PathEvent::Entry(0)]);
        assert_eq!(
            path.termination,
            Termination::DegenerateQuadraticZone {
                lambda: 2.0,
                active: 1,
                quadratic: 0
            }
        );
        // the unpenalized end of the path is the interpolating fit
        let tail = path.tail.expect("degenerate halt carries an oracle tail");
        assert!((tail.beta[0] - 3.0).abs() < 1e-6, "{:?}", tail.beta);
    }

    #[test]
    fn huber_one_dimensional_inside_knot() {
        // y = 0.5 is quadratic throughout: β(λ) = 0.5 − λ/2 from λ_0 = 1.
        let x = Matrix::new(1, 1, vec![1.0]).unwrap();
        let ds = Dataset::new(x, vec![0.5], Task::Regression).unwrap();
        let path = huberized_lasso_path(&ds, 1.0).unwrap();
        assert_eq!(path.lambdas(), vec![1.0, 0.0]);
        assert!((path.breakpoints[1].beta[0] - 0.5).abs() < 1e-15);
        assert!((path.directions[0][0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn huber_regime_change_two_observations() {
        // x = (1, 1), y = (0, 3), δ = 1. Obs 0 starts quadratic, obs 1 linear.
        // λ_0 = |2·0 + 2·1| = 2; direction 2·1·γ = 1 → γ = 1/2 while only obs 0
        // is quadratic. Obs 0 residual −β reaches −1 at β = 1 (λ = 0), and obs 1
        // residual 3 − β reaches 1 at β = 2, so the path ends at λ = 0, β = 1.
        let x = Matrix::new(2, 1, vec![1.0, 1.0]).unwrap();
        let ds = Dataset::new(x, vec![0.0, 3.0], Task::Regression).unwrap();
        let path = huberized_lasso_path(&ds, 1.0).unwrap();
        assert_eq!(path.lambda_max(), 2.0);
        let last = path.breakpoints.last().unwrap();
        assert_eq!(last.lambda, 0.0);
        assert!((last.beta[0] - 1.0).abs() < 1e-12);
        assert!(last.events.contains(&PathEvent::Terminal));
    }

    #[test]
    fn event_strings_round_trip() {
        let evs = vec![
            PathEvent::Drop(3),
            PathEvent::RegimeChange {
                obs: 7,
                into: Zone::Linear,
            },
            PathEvent::Entry(0),
            PathEvent::Terminal,
        ];
        let s = format_events(&evs);
        assert_eq!(s, "drop:3;regime:7:linear;entry:0;terminal");
        assert_eq!(parse_events(&s).unwrap(), evs);
        assert!(parse_events("bogus:1").is_err());
    }
}
