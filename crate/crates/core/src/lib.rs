//! Regularization paths for L1-penalized convex problems.
//!
//! * [`homotopy`]: exact piecewise-linear paths for the Lasso and the
//!   Huberized Lasso.
//! * [`boosting`]: generic ε-boosting (greedy fixed-step coordinate descent).
//! * [`oracle`]: a fixed-λ proximal-gradient solver used to check paths and to
//!   trace paths for losses without an exact homotopy (logistic, exponential).
//! * [`experiments`]: path comparison and the robustness / boosting
//!   equivalence experiments.

pub mod boosting;
pub mod data;
pub mod experiments;
pub mod homotopy;
pub mod io;
pub mod loss;
pub mod numerics;
pub mod oracle;

pub use boosting::{boost, trace_at_norm, BoostConfig, BoostTrace};
pub use data::{Dataset, Task};
pub use homotopy::{evaluate_path, huberized_lasso_path, kkt_residual, lasso_path, PiecewisePath};
pub use loss::{LossKind, PenaltyKind};
pub use numerics::{Matrix, RandomStream};
pub use oracle::{parse_lambda_spec, solve_grid, solve_l1, GridPath, OracleConfig};
