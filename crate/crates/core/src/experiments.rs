//! Path comparison metrics and two experiments: robust
//! Huberized Lasso vs Lasso on contaminated data, and ε-boosting vs the exact
//! L1-penalized logistic path.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boosting::{boost, BoostConfig, BoostError};
use crate::data::{
    simulate_binary, simulate_contaminated, BinarySimConfig, ContaminatedSimConfig, DataError,
};
use crate::homotopy::{
    huberized_lasso_path_with, lasso_path, PathError, PathOptions, PiecewisePath, Termination,
};
use crate::io::Axis;
use crate::loss::{lambda_max, LossError, LossKind};
use crate::numerics::{norm1, norm2};
use crate::oracle::{log_grid, solve_grid, OracleConfig, OracleError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("the two paths share no overlapping range on the comparison axis")]
    EmptyOverlap,
    #[error("comparison needs nonempty point lists of equal dimension")]
    BadPoints,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Boost(#[from] BoostError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Loss(#[from] LossError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub matched: usize,
    /// Largest per-coordinate discrepancy over all matched points.
    pub sup: f64,
    /// Mean over matched points of the per-point sup-norm discrepancy.
    pub mean: f64,
    pub axis: Axis,
    pub per_coordinate_max: Vec<f64>,
}

/// Compare two coefficient paths keyed on a common axis.
///
/// Each point of `a` whose key falls inside the key range of `b` is paired
/// with `b` linearly interpolated at that key (an exact key match uses the
/// first such `b` point).
pub fn compare_points(
    a: &[(f64, Vec<f64>)],
    b: &[(f64, Vec<f64>)],
    axis: Axis,
) -> Result<DiscrepancyReport, ExperimentError> {
    let p = a
        .first()
        .map(|x| x.1.len())
        .ok_or(ExperimentError::BadPoints)?;
    if b.is_empty()
        || a.iter()
            .chain(b)
            .any(|x| x.1.len() != p || !x.0.is_finite())
    {
        return Err(ExperimentError::BadPoints);
    }
    let mut sorted: Vec<&(f64, Vec<f64>)> = b.iter().collect();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let (lo, hi) = (sorted[0].0, sorted[sorted.len() - 1].0);

    let mut per_coord = vec![0.0_f64; p];
    let mut matched = 0;
    let mut total = 0.0;
    for (key, beta) in a {
        if *key < lo || *key > hi {
            continue;
        }
        let idx = sorted.partition_point(|x| x.0 < *key);
        let target: Vec<f64> = if sorted[idx].0 == *key {
            sorted[idx].1.clone()
        } else {
            let (k0, b0) = (sorted[idx - 1].0, &sorted[idx - 1].1);
            let (k1, b1) = (sorted[idx].0, &sorted[idx].1);
            let w = (key - k0) / (k1 - k0);
            b0.iter().zip(b1).map(|(u, v)| u + w * (v - u)).collect()
        };
        let mut point_sup: f64 = 0.0;
        for (j, (x, y)) in beta.iter().zip(&target).enumerate() {
            let d = (x - y).abs();
            per_coord[j] = per_coord[j].max(d);
            point_sup = point_sup.max(d);
        }
        total += point_sup;
        matched += 1;
    }
    if matched == 0 {
        return Err(ExperimentError::EmptyOverlap);
    }
    Ok(DiscrepancyReport {
        matched,
        sup: per_coord.iter().copied().fold(0.0, f64::max),
        mean: total / matched as f64,
        axis,
        per_coordinate_max: per_coord,
    })
}

/// [`compare_points`] on the L1-norm axis.
pub fn compare_by_norm(
    a: &[(f64, Vec<f64>)],
    b: &[(f64, Vec<f64>)],
) -> Result<DiscrepancyReport, ExperimentError> {
    compare_points(a, b, Axis::L1norm)
}

/// Attach L1 norms to a list of coefficient vectors.
pub fn with_norms<'a, I: IntoIterator<Item = &'a Vec<f64>>>(betas: I) -> Vec<(f64, Vec<f64>)> {
    betas.into_iter().map(|b| (norm1(b), b.clone())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport<C, R, A> {
    pub experiment: String,
    pub config: C,
    pub per_seed: Vec<R>,
    pub aggregate: A,
    pub verdicts: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HuberLassoConfig {
    pub n: usize,
    pub p: usize,
    pub signal: f64,
    pub inlier_sd: f64,
    pub outlier_sd: f64,
    pub outlier_prob: f64,
    pub delta: f64,
    pub seeds: Vec<u64>,
    /// Verdict threshold on the fraction of seeds won by the Huberized Lasso.
    pub min_win_rate: f64,
    /// Verdict threshold on the median of `|β̂_1 − signal|` for the Huberized Lasso.
    pub max_median_error: f64,
}

impl Default for HuberLassoConfig {
    fn default() -> Self {
        Self {
            n: 100,
            p: 80,
            signal: 10.0,
            inlier_sd: 1.0,
            outlier_sd: 10.0,
            outlier_prob: 0.1,
            delta: 1.0,
            seeds: (1..=20).collect(),
            min_win_rate: 0.8,
            max_median_error: 1.5,
        }
    }
}

impl HuberLassoConfig {
    fn sim(&self, seed: u64) -> ContaminatedSimConfig {
        ContaminatedSimConfig {
            n: self.n,
            p: self.p,
            signal: self.signal,
            inlier_sd: self.inlier_sd,
            outlier_sd: self.outlier_sd,
            outlier_prob: self.outlier_prob,
            seed,
        }
    }
}

/// The breakpoint of a path closest to the true coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleChoice {
    pub lambda: f64,
    pub beta1: f64,
    pub error: f64,
    pub nonzero: usize,
    pub breakpoints: usize,
    pub termination: Termination,
}

pub fn oracle_breakpoint(path: &PiecewisePath, truth: &[f64]) -> OracleChoice {
    let (bp, error) = path
        .breakpoints
        .iter()
        .map(|bp| {
            let d: Vec<f64> = bp.beta.iter().zip(truth).map(|(b, t)| b - t).collect();
            (bp, norm2(&d))
        })
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("paths have at least one breakpoint");
    OracleChoice {
        lambda: bp.lambda,
        beta1: bp.beta[0],
        error,
        nonzero: bp.beta.iter().filter(|b| **b != 0.0).count(),
        breakpoints: path.len(),
        termination: path.termination.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    Huber,
    Lasso,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuberLassoSeed {
    pub seed: u64,
    pub huber: Option<OracleChoice>,
    pub lasso: Option<OracleChoice>,
    pub winner: Option<Winner>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuberLassoAggregate {
    pub seeds: usize,
    pub completed: usize,
    pub huber_wins: usize,
    pub win_rate: f64,
    pub huber_median_beta1_error: f64,
    pub lasso_median_beta1_error: f64,
    pub huber_median_error: f64,
    pub lasso_median_error: f64,
}

pub type HuberLassoReport = ExperimentReport<HuberLassoConfig, HuberLassoSeed, HuberLassoAggregate>;

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn huber_lasso_seed(cfg: &HuberLassoConfig, seed: u64) -> HuberLassoSeed {
    let mut row = HuberLassoSeed {
        seed,
        huber: None,
        lasso: None,
        winner: None,
        errors: Vec::new(),
    };
    let ds = match simulate_contaminated(&cfg.sim(seed)) {
        Ok(ds) => ds,
        Err(e) => {
            row.errors.push(format!("simulate: {e}"));
            return row;
        }
    };
    let mut truth = vec![0.0; cfg.p];
    truth[0] = cfg.signal;
    match huberized_lasso_path_with(&ds, cfg.delta, &PathOptions::default()) {
        Ok(path) => row.huber = Some(oracle_breakpoint(&path, &truth)),
        Err(e) => row.errors.push(format!("huber: {e}")),
    }
    match lasso_path(&ds) {
        Ok(path) => row.lasso = Some(oracle_breakpoint(&path, &truth)),
        Err(e) => row.errors.push(format!("lasso: {e}")),
    }
    if let (Some(h), Some(l)) = (&row.huber, &row.lasso) {
        row.winner = Some(if h.error < l.error {
            Winner::Huber
        } else if l.error < h.error {
            Winner::Lasso
        } else {
            Winner::Tie
        });
    }
    row
}

/// Per seed: simulate the contaminated design, compute both exact paths and
/// compare them at their oracle breakpoints. Failing seeds are reported, not fatal.
pub fn run_huber_vs_lasso(cfg: &HuberLassoConfig) -> HuberLassoReport {
    let per_seed: Vec<HuberLassoSeed> = cfg
        .seeds
        .par_iter()
        .map(|&seed| huber_lasso_seed(cfg, seed))
        .collect();
    let completed = per_seed.iter().filter(|r| r.winner.is_some()).count();
    let huber_wins = per_seed
        .iter()
        .filter(|r| r.winner == Some(Winner::Huber))
        .count();
    let collect = |f: &dyn Fn(&HuberLassoSeed) -> Option<f64>| {
        per_seed.iter().filter_map(f).collect::<Vec<_>>()
    };
    let signal = cfg.signal;
    let aggregate = HuberLassoAggregate {
        seeds: per_seed.len(),
        completed,
        huber_wins,
        win_rate: if per_seed.is_empty() {
            0.0
        } else {
            huber_wins as f64 / per_seed.len() as f64
        },
        huber_median_beta1_error: median(collect(&|r| {
            r.huber.as_ref().map(|c| (c.beta1 - signal).abs())
        })),
        lasso_median_beta1_error: median(collect(&|r| {
            r.lasso.as_ref().map(|c| (c.beta1 - signal).abs())
        })),
        huber_median_error: median(collect(&|r| r.huber.as_ref().map(|c| c.error))),
        lasso_median_error: median(collect(&|r| r.lasso.as_ref().map(|c| c.error))),
    };
    let mut verdicts = BTreeMap::new();
    verdicts.insert(
        "huber_win_rate".to_owned(),
        aggregate.win_rate >= cfg.min_win_rate,
    );
    verdicts.insert(
        "huber_median_beta1_error".to_owned(),
        aggregate.huber_median_beta1_error <= cfg.max_median_error,
    );
    ExperimentReport {
        experiment: "huber-lasso".into(),
        config: cfg.clone(),
        per_seed,
        aggregate,
        verdicts,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostEquivConfig {
    pub n: usize,
    pub true_beta: Vec<f64>,
    pub seeds: Vec<u64>,
    pub epsilon: f64,
    pub steps: usize,
    /// Boosting record interval for the comparison; `None` keeps every
    /// iterate so that interpolation between records adds no error.
    pub thin: Option<usize>,
    pub grid_points: usize,
    /// Smallest grid λ as a fraction of λ_max.
    pub grid_floor: f64,
    pub oracle: OracleConfig,
    /// Also run with ε/2 and 2T and check that the discrepancy shrinks.
    pub check_refinement: bool,
}

impl Default for BoostEquivConfig {
    fn default() -> Self {
        Self {
            n: 300,
            true_beta: vec![1.5, -1.0, 0.75, 0.5, 0.0],
            seeds: vec![7],
            epsilon: 0.003,
            steps: 7000,
            thin: None,
            grid_points: 100,
            grid_floor: 1e-3,
            oracle: OracleConfig::default(),
            check_refinement: true,
        }
    }
}

impl BoostEquivConfig {
    /// `max(0.05, 10ε)`
    pub fn bound(&self) -> f64 {
        0.05_f64.max(10.0 * self.epsilon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostEquivSeed {
    pub seed: u64,
    pub lambda_max: f64,
    pub grid_max_norm: f64,
    pub boost_max_norm: f64,
    pub discrepancy: DiscrepancyReport,
    pub refined: Option<DiscrepancyReport>,
    pub loss_increases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostEquivAggregate {
    pub seeds: usize,
    pub max_sup: f64,
    pub mean_sup: f64,
    pub bound: f64,
    pub max_refined_sup: Option<f64>,
}

pub type BoostEquivReport = ExperimentReport<BoostEquivConfig, BoostEquivSeed, BoostEquivAggregate>;

fn boost_vs_grid(
    ds: &crate::data::Dataset,
    grid: &[(f64, Vec<f64>)],
    epsilon: f64,
    steps: usize,
    thin: Option<usize>,
) -> Result<(DiscrepancyReport, f64, usize), ExperimentError> {
    let mut bcfg = BoostConfig::new(LossKind::BinomialDeviance, epsilon, steps);
    bcfg.thin = Some(thin.unwrap_or(1));
    let trace = boost(ds, &bcfg)?;
    let report = compare_by_norm(grid, &trace.norm_points())?;
    Ok((report, trace.max_norm(), trace.loss_increases))
}

fn boost_equiv_seed(cfg: &BoostEquivConfig, seed: u64) -> Result<BoostEquivSeed, ExperimentError> {
    let ds = simulate_binary(&BinarySimConfig {
        n: cfg.n,
        true_beta: cfg.true_beta.clone(),
        seed,
    })?;
    let loss = LossKind::BinomialDeviance;
    let lmax = lambda_max(&ds, loss)?;
    let lambdas = log_grid(lmax, lmax * cfg.grid_floor, cfg.grid_points);
    let grid = solve_grid(&ds, loss, &lambdas, &cfg.oracle)?;
    let grid_points = with_norms(&grid.betas);
    let grid_max_norm = grid_points.iter().map(|x| x.0).fold(0.0, f64::max);

    let (discrepancy, boost_max_norm, loss_increases) =
        boost_vs_grid(&ds, &grid_points, cfg.epsilon, cfg.steps, cfg.thin)?;
    let refined = if cfg.check_refinement {
        let thin = cfg.thin.map(|t| 2 * t);
        Some(boost_vs_grid(&ds, &grid_points, cfg.epsilon / 2.0, cfg.steps * 2, thin)?.0)
    } else {
        None
    };
    Ok(BoostEquivSeed {
        seed,
        lambda_max: lmax,
        grid_max_norm,
        boost_max_norm,
        discrepancy,
        refined,
        loss_increases,
    })
}

/// Per seed: simulate logistic data, run ε-boosting with binomial deviance and
/// the oracle on a log λ grid, and compare the two paths by L1 norm.
pub fn run_boost_equivalence(cfg: &BoostEquivConfig) -> Result<BoostEquivReport, ExperimentError> {
    let per_seed: Vec<BoostEquivSeed> = cfg
        .seeds
        .par_iter()
        .map(|&seed| boost_equiv_seed(cfg, seed))
        .collect::<Result<_, _>>()?;
    let sups: Vec<f64> = per_seed.iter().map(|r| r.discrepancy.sup).collect();
    let refined: Vec<f64> = per_seed
        .iter()
        .filter_map(|r| r.refined.as_ref().map(|d| d.sup))
        .collect();
    let aggregate = BoostEquivAggregate {
        seeds: per_seed.len(),
        max_sup: sups.iter().copied().fold(0.0, f64::max),
        mean_sup: sups.iter().sum::<f64>() / sups.len().max(1) as f64,
        bound: cfg.bound(),
        max_refined_sup: (!refined.is_empty()).then(|| refined.iter().copied().fold(0.0, f64::max)),
    };
    let mut verdicts = BTreeMap::new();
    verdicts.insert(
        "sup_within_bound".to_owned(),
        aggregate.max_sup <= aggregate.bound,
    );
    if cfg.check_refinement {
        let shrinks = per_seed.iter().all(|r| {
            r.refined
                .as_ref()
                .is_some_and(|d| d.sup < r.discrepancy.sup)
        });
        verdicts.insert("refinement_shrinks".to_owned(), shrinks);
    }
    Ok(ExperimentReport {
        experiment: "boost-equiv".into(),
        config: cfg.clone(),
        per_seed,
        aggregate,
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, slope: &[f64]) -> Vec<(f64, Vec<f64>)> {
        (0..n)
            .map(|k| {
                let s = k as f64 / (n - 1) as f64;
                let beta: Vec<f64> = slope.iter().map(|m| m * s).collect();
                (norm1(&beta), beta)
            })
            .collect()
    }

    #[test]
    fn identical_lists_have_zero_discrepancy() {
        let a = line(20, &[1.0, -2.0, 0.5]);
        let r = compare_by_norm(&a, &a).unwrap();
        assert_eq!(r.sup, 0.0);
        assert_eq!(r.matched, 20);
    }

    #[test]
    fn constructed_displacement() {
        let a = line(20, &[1.0, -2.0, 0.5]);
        let c = 0.125;
        let b: Vec<(f64, Vec<f64>)> = a
            .iter()
            .map(|(s, beta)| {
                let mut beta = beta.clone();
                beta[1] += c;
                (*s, beta)
            })
            .collect();
        let r = compare_by_norm(&a, &b).unwrap();
        assert_eq!(r.sup, c);
        assert_eq!(r.per_coordinate_max, vec![0.0, c, 0.0]);
        assert!(r.sup >= r.mean && r.mean >= 0.0);
    }

    #[test]
    fn interpolates_between_neighbours() {
        let b = vec![(0.0, vec![0.0]), (2.0, vec![2.0])];
        let a = vec![(1.0, vec![1.0]), (0.5, vec![0.75])];
        let r = compare_by_norm(&a, &b).unwrap();
        assert_eq!(r.matched, 2);
        assert_eq!(r.sup, 0.25);
    }

    #[test]
    fn disjoint_ranges() {
        let a = vec![(5.0, vec![5.0])];
        let b = vec![(0.0, vec![0.0]), (1.0, vec![1.0])];
        assert!(matches!(
            compare_by_norm(&a, &b),
            Err(ExperimentError::EmptyOverlap)
        ));
        assert!(matches!(
            compare_by_norm(&[], &b),
            Err(ExperimentError::BadPoints)
        ));
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(vec![]).is_nan());
    }
}
