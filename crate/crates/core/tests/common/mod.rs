#![allow(dead_code)]

use regpath::data::{Dataset, Task};
use regpath::numerics::{Matrix, RandomStream};
use regpath::oracle::OracleConfig;

/// Gaussian design with a sparse linear signal and unit noise.
pub fn regression_problem(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rs = RandomStream::new(seed);
    let xs: Vec<f64> = rs.gaussian_stream().take(n * p).collect();
    let x = Matrix::new(n, p, xs).unwrap();
    let truth: Vec<f64> = (0..p)
        .map(|j| if j < 3 { 2.0 - j as f64 } else { 0.0 })
        .collect();
    let y: Vec<f64> = x
        .matvec(&truth)
        .into_iter()
        .map(|f| f + rs.standard_normal())
        .collect();
    Dataset::new(x, y, Task::Regression).unwrap()
}

pub fn tight_oracle() -> OracleConfig {
    OracleConfig {
        max_iters: 2_000_000,
        kkt_tol: 1e-11,
        ..OracleConfig::default()
    }
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
