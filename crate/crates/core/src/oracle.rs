//! Fixed-λ proximal-gradient solver for `Σ L(y_i, x_iᵀβ) + λ‖β‖₁`.
//!
//! Plain ISTA with backtracking: a gradient step on the smooth loss followed
//! by soft-thresholding at `λ·step`. It shares no active-set logic with the
//! homotopy engine, which makes it usable as an independent check of exact
//! paths. Convergence is declared on the KKT residual.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::loss::{
    gradient_at_fit, kkt_residual_from_gradient, total_loss_at_fit, LossError, LossKind,
};
use crate::numerics::{dot, norm1};

/// Relative slack for floating-point noise in the backtracking and
/// objective-decrease tests.
const ROUNDING_SLACK: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("no convergence after {iterations} iterations (kkt residual {kkt:e})")]
    MaxItersExceeded {
        best: Vec<f64>,
        kkt: f64,
        iterations: usize,
    },
    #[error("non-finite objective at iteration {0}")]
    NonFinite(usize),
    #[error("the oracle needs a differentiable loss, got {0}")]
    UnsupportedLoss(String),
    #[error("invalid lambda {0}")]
    InvalidLambda(f64),
    #[error("lambda grid must be strictly decreasing and nonnegative")]
    InvalidGrid,
    #[error("bad lambda spec {spec:?}: {reason}")]
    InvalidSpec { spec: String, reason: String },
    #[error("at lambda {lambda}: {source}")]
    AtLambda {
        lambda: f64,
        #[source]
        source: Box<OracleError>,
    },
    #[error(transparent)]
    Loss(#[from] LossError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub max_iters: usize,
    pub kkt_tol: f64,
    pub shrink: f64,
    /// Initial step; `None` uses `1 / L̂` from a power-iteration estimate.
    pub initial_step: Option<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            kkt_tol: 1e-8,
            shrink: 0.5,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub beta: Vec<f64>,
    pub kkt: f64,
    pub iterations: usize,
    /// Accepted iterations whose objective exceeded the previous one. Zero
    /// unless rounding defeats the backtracking test.
    pub objective_increases: usize,
}

#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Upper bound on the per-observation curvature used for the default step.
fn curvature_bound(ds: &Dataset, loss: LossKind, fit: &[f64]) -> f64 {
    match loss {
        LossKind::Squared | LossKind::Huber { .. } => 2.0,
        LossKind::BinomialDeviance => 0.25,
        // not a global bound; backtracking takes over
        LossKind::Exponential => ds
            .y()
            .iter()
            .zip(fit)
            .map(|(y, f)| loss.second_deriv(*y, *f))
            .fold(0.0, f64::max),
        LossKind::Hinge => 0.0,
    }
}

pub fn solve_l1(
    ds: &Dataset,
    loss: LossKind,
    lambda: f64,
    cfg: &OracleConfig,
    warm_start: Option<&[f64]>,
) -> Result<OracleSolution, OracleError> {
    if !loss.is_differentiable() {
        return Err(OracleError::UnsupportedLoss(loss.to_string()));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(OracleError::InvalidLambda(lambda));
    }
    loss.check_dataset(ds)?;
    let p = ds.p();
    let mut beta = match warm_start {
        Some(w) if w.len() == p => w.to_vec(),
        Some(w) => {
            return Err(LossError::DimensionMismatch {
                expected: p,
                got: w.len(),
            }
            .into())
        }
        None => vec![0.0; p],
    };
    let mut fit = ds.fit(&beta);
    let mut smooth = total_loss_at_fit(ds, loss, &fit);
    let mut grad = gradient_at_fit(ds, loss, &fit);

    let mut step = match cfg.initial_step {
        Some(s) => s,
        None => {
            let op = ds.x().operator_norm_estimate(50);
            let bound = curvature_bound(ds, loss, &fit) * op * op;
            if bound > 0.0 {
                1.0 / bound
            } else {
                1.0
            }
        }
    };

    let mut best = beta.clone();
    let mut best_kkt = f64::INFINITY;
    let mut increases = 0;
    for iter in 0..cfg.max_iters {
        let kkt = kkt_residual_from_gradient(&grad, lambda, &beta);
        if kkt < best_kkt {
            best_kkt = kkt;
            best.clone_from(&beta);
        }
        if kkt <= cfg.kkt_tol {
            return Ok(OracleSolution {
                beta,
                kkt,
                iterations: iter,
                objective_increases: increases,
            });
        }
        let objective = smooth + lambda * norm1(&beta);
        loop {
            let cand: Vec<f64> = beta
                .iter()
                .zip(&grad)
                .map(|(b, g)| soft_threshold(b - step * g, step * lambda))
                .collect();
            let diff: Vec<f64> = cand.iter().zip(&beta).map(|(c, b)| c - b).collect();
            let cand_fit = ds.fit(&cand);
            let cand_smooth = total_loss_at_fit(ds, loss, &cand_fit);
            if !cand_smooth.is_finite() {
                step *= cfg.shrink;
                if step < 1e-300 {
                    return Err(OracleError::NonFinite(iter));
                }
                continue;
            }
            let model = smooth + dot(&grad, &diff) + dot(&diff, &diff) / (2.0 * step);
            // rounding slack: near the optimum both sides agree to a few ulps
            let slack = ROUNDING_SLACK * (1.0 + smooth.abs());
            if cand_smooth <= model + slack || diff.iter().all(|d| *d == 0.0) {
                if cand_smooth + lambda * norm1(&cand) > objective + slack {
                    increases += 1;
                }
                beta = cand;
                fit = cand_fit;
                smooth = cand_smooth;
                grad = gradient_at_fit(ds, loss, &fit);
                break;
            }
            step *= cfg.shrink;
            if step < 1e-300 {
                return Err(OracleError::MaxItersExceeded {
                    best,
                    kkt: best_kkt,
                    iterations: iter,
                });
            }
        }
    }
    let kkt = kkt_residual_from_gradient(&grad, lambda, &beta);
    if kkt <= cfg.kkt_tol {
        return Ok(OracleSolution {
            beta,
            kkt,
            iterations: cfg.max_iters,
            objective_increases: increases,
        });
    }
    if kkt < best_kkt {
        best = beta;
        best_kkt = kkt;
    }
    Err(OracleError::MaxItersExceeded {
        best,
        kkt: best_kkt,
        iterations: cfg.max_iters,
    })
}

/// Warm-started solutions over a decreasing λ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub loss: LossKind,
    pub lambdas: Vec<f64>,
    pub betas: Vec<Vec<f64>>,
    pub kkt: Vec<f64>,
    pub iterations: Vec<usize>,
}

pub fn solve_grid(
    ds: &Dataset,
    loss: LossKind,
    lambdas: &[f64],
    cfg: &OracleConfig,
) -> Result<GridPath, OracleError> {
    if lambdas.is_empty()
        || lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite()))
        || lambdas.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(OracleError::InvalidGrid);
    }
    let mut out = GridPath {
        loss,
        lambdas: lambdas.to_vec(),
        betas: Vec::with_capacity(lambdas.len()),
        kkt: Vec::with_capacity(lambdas.len()),
        iterations: Vec::with_capacity(lambdas.len()),
    };
    let mut warm: Option<Vec<f64>> = None;
    for &lambda in lambdas {
        let sol = solve_l1(ds, loss, lambda, cfg, warm.as_deref()).map_err(|e| {
            OracleError::AtLambda {
                lambda,
                source: Box::new(e),
            }
        })?;
        warm = Some(sol.beta.clone());
        out.betas.push(sol.beta);
        out.kkt.push(sol.kkt);
        out.iterations.push(sol.iterations);
    }
    Ok(out)
}

/// `count` log-spaced values from `start` down to `stop` (both included).
pub fn log_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let (a, b) = (start.ln(), stop.ln());
            (0..count)
                .map(|k| {
                    if k == 0 {
                        start
                    } else if k == count - 1 {
                        stop
                    } else {
                        (a + (b - a) * k as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Parse a λ grid: `log:START:STOP:COUNT` or a comma list such as `4,2,1`.
///
/// `START` and `STOP` may be the word `max`, standing for `lambda_max`.
pub fn parse_lambda_spec(spec: &str, lambda_max: f64) -> Result<Vec<f64>, OracleError> {
    let bad = |reason: &str| OracleError::InvalidSpec {
        spec: spec.to_owned(),
        reason: reason.to_owned(),
    };
    let value = |t: &str| -> Result<f64, OracleError> {
        match t.trim() {
            "max" => Ok(lambda_max),
            other => other
                .parse::<f64>()
                .map_err(|_| bad(&format!("{other:?} is not a number"))),
        }
    };
    let grid = if let Some(rest) = spec.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [start, stop, count] = parts.as_slice() else {
            return Err(bad("expected log:START:STOP:COUNT"));
        };
        let (start, stop) = (value(start)?, value(stop)?);
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| bad("COUNT must be a positive integer"))?;
        if count == 0 {
            return Err(bad("COUNT must be a positive integer"));
        }
        if !(start > 0.0 && stop > 0.0 && start.is_finite() && stop.is_finite()) {
            return Err(bad("log grid endpoints must be positive"));
        }
        log_grid(start, stop, count)
    } else {
        spec.split(',').map(value).collect::<Result<Vec<_>, _>>()?
    };
    if grid.is_empty()
        || grid.iter().any(|l| !(*l >= 0.0 && l.is_finite()))
        || grid.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(bad("values must be nonnegative and strictly decreasing"));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{simulate_binary, BinarySimConfig, Task};
    use crate::loss::{kkt_residual, lambda_max};
    use crate::numerics::{least_squares, max_abs_diff, Matrix, RandomStream};

    fn random_regression(seed: u64, n: usize, p: usize) -> Dataset {
        let mut rs = RandomStream::new(seed);
        let x = Matrix::new(n, p, rs.gaussian_stream().take(n * p).collect()).unwrap();
        let beta: Vec<f64> = (0..p)
            .map(|j| if j < 3 { 2.0 - j as f64 } else { 0.0 })
            .collect();
        let y: Vec<f64> = x
            .matvec(&beta)
            .iter()
            .map(|f| f + rs.standard_normal())
            .collect();
        Dataset::new(x, y, Task::Regression).unwrap()
    }

    #[test]
    fn zero_above_lambda_max() {
        let ds = random_regression(1, 30, 6);
        for loss in [LossKind::Squared, LossKind::Huber { delta: 1.0 }] {
            let lmax = lambda_max(&ds, loss).unwrap();
            let sol = solve_l1(&ds, loss, lmax * 1.01, &OracleConfig::default(), None).unwrap();
            assert!(sol.beta.iter().all(|b| b.abs() <= 1e-8));
        }
    }

    #[test]
    fn lambda_zero_matches_least_squares() {
        let ds = random_regression(2, 30, 6);
        let sol = solve_l1(&ds, LossKind::Squared, 0.0, &OracleConfig::default(), None).unwrap();
        let ls = least_squares(ds.x(), ds.y()).unwrap();
        assert!(max_abs_diff(&sol.beta, &ls) < 1e-6);
    }

    #[test]
    fn orthonormal_closed_form() {
        // columns of a scaled Hadamard-like orthonormal design
        let s = 0.5;
        let x = Matrix::from_rows(&[
            vec![s, s, s],
            vec![s, -s, s],
            vec![s, s, -s],
            vec![s, -s, -s],
        ])
        .unwrap();
        let y = vec![3.0, -1.0, 2.0, 0.5];
        let ds = Dataset::new(x.clone(), y.clone(), Task::Regression).unwrap();
        let c = x.tr_matvec(&y);
        for lambda in [0.0, 0.5, 1.7, 4.0] {
            let sol = solve_l1(
                &ds,
                LossKind::Squared,
                lambda,
                &OracleConfig::default(),
                None,
            )
            .unwrap();
            let expect: Vec<f64> = c
                .iter()
                .map(|cj| soft_threshold(*cj, lambda / 2.0))
                .collect();
            assert!(max_abs_diff(&sol.beta, &expect) < 1e-8, "{lambda}");
        }
    }

    #[test]
    fn kkt_met_for_every_differentiable_loss() {
        let reg = random_regression(3, 40, 5);
        let bin = simulate_binary(&BinarySimConfig {
            n: 80,
            true_beta: vec![1.0, -0.5, 0.0, 0.25],
            seed: 3,
        })
        .unwrap();
        let cfg = OracleConfig::default();
        for (ds, loss) in [
            (&reg, LossKind::Squared),
            (&reg, LossKind::Huber { delta: 0.8 }),
            (&bin, LossKind::Exponential),
            (&bin, LossKind::BinomialDeviance),
        ] {
            let lmax = lambda_max(ds, loss).unwrap();
            for frac in [0.5, 0.1, 0.01] {
                let sol = solve_l1(ds, loss, lmax * frac, &cfg, None).unwrap();
                assert!(sol.kkt <= cfg.kkt_tol);
                assert_eq!(sol.objective_increases, 0, "{loss}");
                let check = kkt_residual(ds, loss, lmax * frac, &sol.beta).unwrap();
                assert!(check <= cfg.kkt_tol);
            }
        }
    }

    #[test]
    fn hinge_is_rejected() {
        let bin = simulate_binary(&BinarySimConfig {
            n: 10,
            true_beta: vec![1.0],
            seed: 1,
        })
        .unwrap();
        assert!(matches!(
            solve_l1(&bin, LossKind::Hinge, 1.0, &OracleConfig::default(), None),
            Err(OracleError::UnsupportedLoss(_))
        ));
    }

    #[test]
    fn max_iters_reports_best_iterate() {
        let ds = random_regression(4, 30, 6);
        let cfg = OracleConfig {
            max_iters: 2,
            ..Default::default()
        };
        match solve_l1(&ds, LossKind::Squared, 0.0, &cfg, None) {
            Err(OracleError::MaxItersExceeded {
                best, iterations, ..
            }) => {
                assert_eq!(best.len(), 6);
                assert_eq!(iterations, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_examples() {
        let ds = random_regression(5, 30, 6);
        let cfg = OracleConfig::default();
        let lmax = lambda_max(&ds, LossKind::Squared).unwrap();
        let g = solve_grid(&ds, LossKind::Squared, &[lmax * 1.1, lmax * 1.05], &cfg).unwrap();
        assert!(g.betas.iter().flatten().all(|b| *b == 0.0));

        let single = solve_grid(&ds, LossKind::Squared, &[lmax * 0.3], &cfg).unwrap();
        let direct = solve_l1(&ds, LossKind::Squared, lmax * 0.3, &cfg, None).unwrap();
        assert_eq!(single.betas[0], direct.beta);

        assert!(matches!(
            solve_grid(&ds, LossKind::Squared, &[1.0, 2.0], &cfg),
            Err(OracleError::InvalidGrid)
        ));
        assert!(solve_grid(&ds, LossKind::Squared, &[1.0, -1.0], &cfg).is_err());
    }

    #[test]
    fn grid_continuity_under_refinement() {
        let ds = random_regression(6, 30, 6);
        let cfg = OracleConfig::default();
        let lmax = lambda_max(&ds, LossKind::Squared).unwrap();
        let mut prev = f64::INFINITY;
        for count in [6, 11, 21, 41] {
            let lambdas: Vec<f64> = (0..count)
                .map(|k| lmax * (0.9 - 0.8 * k as f64 / (count - 1) as f64))
                .collect();
            let g = solve_grid(&ds, LossKind::Squared, &lambdas, &cfg).unwrap();
            let jump = g
                .betas
                .windows(2)
                .map(|w| max_abs_diff(&w[0], &w[1]))
                .fold(0.0, f64::max);
            assert!(jump < prev, "{count}: {jump} !< {prev}");
            prev = jump;
        }
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(10.0, 0.01, 100);
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 10.0);
        assert_eq!(g[99], 0.01);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn lambda_spec_forms() {
        assert_eq!(
            parse_lambda_spec("4,2,1", 9.0).unwrap(),
            vec![4.0, 2.0, 1.0]
        );
        assert_eq!(parse_lambda_spec("max,0", 9.0).unwrap(), vec![9.0, 0.0]);
        let g = parse_lambda_spec("log:100:1:3", 9.0).unwrap();
        assert_eq!(g[0], 100.0);
        assert!((g[1] - 10.0).abs() < 1e-12);
        assert_eq!(g[2], 1.0);
        assert_eq!(
            parse_lambda_spec("log:max:0.09:2", 9.0).unwrap(),
            vec![9.0, 0.09]
        );
    }

    #[test]
    fn lambda_spec_rejects_garbage() {
        for spec in [
            "",
            "1,2",
            "log:1:0:3",
            "log:1:2",
            "log:4:1:0",
            "a,b",
            "3,-1",
        ] {
            assert!(
                matches!(
                    parse_lambda_spec(spec, 1.0),
                    Err(OracleError::InvalidSpec { .. })
                ),
                "{spec}"
            );
        }
    }
}
