//! Per-observation losses in the fit `f = xᵀβ`, the L1 penalty, and the
//! dataset-level quantities built from them (gradient, objective, KKT).
//!
//! Losses are sums over observations, never means, and no intercept is fitted.

use std::fmt;

use thiserror::Error;

use crate::data::{Dataset, Task};
use crate::numerics::norm1;

/// Exponent arguments are clamped to `[-EXP_CLAMP, EXP_CLAMP]`.
pub const EXP_CLAMP: f64 = 500.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("{loss} loss needs labels in {{-1, +1}}; row {row} has {value}")]
    InvalidLabel {
        loss: &'static str,
        row: usize,
        value: f64,
    },
    #[error("dimension mismatch: beta has length {got}, dataset has p = {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("huber loss needs delta > 0, got {0}")]
    InvalidDelta(f64),
    #[error("unknown loss {0:?} (expected squared, huber, hinge, exp or logistic)")]
    UnknownLoss(String),
    #[error("huber loss requires --delta")]
    MissingDelta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    Squared,
    /// Quadratic for `|y - f| <= delta`, linear beyond.
    Huber {
        delta: f64,
    },
    Hinge,
    Exponential,
    BinomialDeviance,
}

#[inline]
fn clamped_exp(z: f64) -> f64 {
    z.clamp(-EXP_CLAMP, EXP_CLAMP).exp()
}

impl LossKind {
    pub fn huber(delta: f64) -> Result<Self, LossError> {
        if delta > 0.0 && delta.is_finite() {
            Ok(LossKind::Huber { delta })
        } else {
            Err(LossError::InvalidDelta(delta))
        }
    }

    /// Parse a CLI token: `squared`, `huber`, `hinge`, `exp` or `logistic`.
    pub fn from_token(token: &str, delta: Option<f64>) -> Result<Self, LossError> {
        match token {
            "squared" => Ok(LossKind::Squared),
            "huber" => LossKind::huber(delta.ok_or(LossError::MissingDelta)?),
            "hinge" => Ok(LossKind::Hinge),
            "exp" => Ok(LossKind::Exponential),
            "logistic" => Ok(LossKind::BinomialDeviance),
            other => Err(LossError::UnknownLoss(other.to_owned())),
        }
    }

    pub fn token(&self) -> &'static str {
        match self {
            LossKind::Squared => "squared",
            LossKind::Huber { .. } => "huber",
            LossKind::Hinge => "hinge",
            LossKind::Exponential => "exp",
            LossKind::BinomialDeviance => "logistic",
        }
    }

    pub fn delta(&self) -> Option<f64> {
        match self {
            LossKind::Huber { delta } => Some(*delta),
            _ => None,
        }
    }

    /// Margin losses take ±1 labels.
    pub fn requires_binary(&self) -> bool {
        matches!(
            self,
            LossKind::Hinge | LossKind::Exponential | LossKind::BinomialDeviance
        )
    }

    pub fn is_differentiable(&self) -> bool {
        !matches!(self, LossKind::Hinge)
    }

    pub fn check_label(&self, row: usize, y: f64) -> Result<(), LossError> {
        if self.requires_binary() && y != 1.0 && y != -1.0 {
            return Err(LossError::InvalidLabel {
                loss: self.token(),
                row,
                value: y,
            });
        }
        Ok(())
    }

    pub fn check_dataset(&self, ds: &Dataset) -> Result<(), LossError> {
        if self.requires_binary() && ds.task() == Task::Binary {
            return Ok(());
        }
        ds.y()
            .iter()
            .enumerate()
            .try_for_each(|(i, &y)| self.check_label(i, y))
    }

    pub fn value(&self, y: f64, f: f64) -> f64 {
        match *self {
            LossKind::Squared => (y - f) * (y - f),
            LossKind::Huber { delta } => {
                let a = (y - f).abs();
                if a <= delta {
                    a * a
                } else {
                    delta * delta + 2.0 * delta * (a - delta)
                }
            }
            LossKind::Hinge => (1.0 - y * f).max(0.0),
            LossKind::Exponential => clamped_exp(-y * f),
            LossKind::BinomialDeviance => {
                // log(1 + e^z) with z = -yf, evaluated without overflow
                let z = -y * f;
                z.max(0.0) + (-z.abs()).exp().ln_1p()
            }
        }
    }

    /// Derivative in `f`. Huber's knot takes the quadratic-branch value and
    /// the hinge kink at margin 1 takes 0.
    pub fn deriv(&self, y: f64, f: f64) -> f64 {
        match *self {
            LossKind::Squared => -2.0 * (y - f),
            LossKind::Huber { delta } => {
                let r = y - f;
                if r.abs() <= delta {
                    -2.0 * r
                } else {
                    -2.0 * delta * r.signum()
                }
            }
            LossKind::Hinge => {
                if y * f < 1.0 {
                    -y
                } else {
                    0.0
                }
            }
            LossKind::Exponential => -y * clamped_exp(-y * f),
            LossKind::BinomialDeviance => {
                let m = y * f;
                // sigmoid(-m)
                let s = if m >= 0.0 {
                    let e = (-m).exp();
                    e / (1.0 + e)
                } else {
                    1.0 / (1.0 + m.exp())
                };
                -y * s
            }
        }
    }

    pub fn second_deriv(&self, y: f64, f: f64) -> f64 {
        match *self {
            LossKind::Squared => 2.0,
            LossKind::Huber { delta } => {
                if (y - f).abs() <= delta {
                    2.0
                } else {
                    0.0
                }
            }
            LossKind::Hinge => 0.0,
            LossKind::Exponential => clamped_exp(-y * f),
            LossKind::BinomialDeviance => {
                let e = (-(y * f).abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
        }
    }

    /// Fit values `f` where the loss for label `y` is not twice differentiable.
    pub fn kinks(&self, y: f64) -> Vec<f64> {
        match *self {
            LossKind::Huber { delta } => vec![y - delta, y + delta],
            LossKind::Hinge => vec![y],
            _ => Vec::new(),
        }
    }

    /// True when evaluating at `(y, f)` hit the exponent clamp.
    pub fn is_clamped(&self, y: f64, f: f64) -> bool {
        matches!(self, LossKind::Exponential) && (y * f).abs() > EXP_CLAMP
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossKind::Huber { delta } => write!(f, "huber(delta={delta})"),
            other => f.write_str(other.token()),
        }
    }
}

/// Checked per-observation loss value.
pub fn loss_value(loss: LossKind, y: f64, f: f64) -> Result<f64, LossError> {
    loss.check_label(0, y)?;
    Ok(loss.value(y, f))
}

pub fn loss_deriv(loss: LossKind, y: f64, f: f64) -> Result<f64, LossError> {
    loss.check_label(0, y)?;
    Ok(loss.deriv(y, f))
}

pub fn loss_second_deriv(loss: LossKind, y: f64, f: f64) -> Result<f64, LossError> {
    loss.check_label(0, y)?;
    Ok(loss.second_deriv(y, f))
}

/// The penalty `J`. Only the L1 norm is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenaltyKind {
    #[default]
    L1,
}

impl PenaltyKind {
    pub fn value(&self, beta: &[f64]) -> f64 {
        norm1(beta)
    }

    /// `sign(β_j)` on nonzero coordinates, 0 elsewhere.
    pub fn subgradient(&self, beta: &[f64]) -> Vec<f64> {
        beta.iter()
            .map(|b| if *b == 0.0 { 0.0 } else { b.signum() })
            .collect()
    }

    /// Curvature is zero away from the kinks at `β_j = 0`.
    pub fn curvature(&self, beta: &[f64]) -> Vec<f64> {
        vec![0.0; beta.len()]
    }
}

fn check_len(ds: &Dataset, beta: &[f64]) -> Result<(), LossError> {
    if beta.len() != ds.p() {
        return Err(LossError::DimensionMismatch {
            expected: ds.p(),
            got: beta.len(),
        });
    }
    Ok(())
}

/// `Σ_i L(y_i, x_iᵀβ)`
pub fn total_loss(ds: &Dataset, loss: LossKind, beta: &[f64]) -> Result<f64, LossError> {
    check_len(ds, beta)?;
    loss.check_dataset(ds)?;
    Ok(total_loss_at_fit(ds, loss, &ds.fit(beta)))
}

pub(crate) fn total_loss_at_fit(ds: &Dataset, loss: LossKind, fit: &[f64]) -> f64 {
    ds.y()
        .iter()
        .zip(fit)
        .map(|(y, f)| loss.value(*y, *f))
        .sum()
}

pub(crate) fn gradient_at_fit(ds: &Dataset, loss: LossKind, fit: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = ds
        .y()
        .iter()
        .zip(fit)
        .map(|(y, f)| loss.deriv(*y, *f))
        .collect();
    ds.x().tr_matvec(&d)
}

/// Gradient of the total loss in β: `Σ_i L'(y_i, x_iᵀβ) x_i`.
pub fn gradient_beta(ds: &Dataset, loss: LossKind, beta: &[f64]) -> Result<Vec<f64>, LossError> {
    check_len(ds, beta)?;
    loss.check_dataset(ds)?;
    Ok(gradient_at_fit(ds, loss, &ds.fit(beta)))
}

/// Total loss plus `λ‖β‖₁`.
pub fn objective(
    ds: &Dataset,
    loss: LossKind,
    lambda: f64,
    beta: &[f64],
) -> Result<f64, LossError> {
    Ok(total_loss(ds, loss, beta)? + lambda * PenaltyKind::L1.value(beta))
}

/// Smallest λ at which β = 0 is optimal: `max_j |∂L/∂β_j (0)|`.
pub fn lambda_max(ds: &Dataset, loss: LossKind) -> Result<f64, LossError> {
    let g = gradient_beta(ds, loss, &vec![0.0; ds.p()])?;
    Ok(g.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Largest violation of the L1 stationarity conditions given the gradient.
pub fn kkt_residual_from_gradient(gradient: &[f64], lambda: f64, beta: &[f64]) -> f64 {
    gradient
        .iter()
        .zip(beta)
        .map(|(g, b)| {
            if *b != 0.0 {
                (g + lambda * b.signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// `max_j` of `|g_j + λ sign(β_j)|` for nonzero β_j and `max(0, |g_j| − λ)` otherwise.
pub fn kkt_residual(
    ds: &Dataset,
    loss: LossKind,
    lambda: f64,
    beta: &[f64],
) -> Result<f64, LossError> {
    let g = gradient_beta(ds, loss, beta)?;
    Ok(kkt_residual_from_gradient(&g, lambda, beta))
}
