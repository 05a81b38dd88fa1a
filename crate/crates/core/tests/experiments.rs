use regpath::data::{simulate_contaminated, ContaminatedSimConfig};
use regpath::experiments::{
    run_boost_equivalence, run_huber_vs_lasso, BoostEquivConfig, HuberLassoConfig, Winner,
};
use regpath::homotopy::lasso_path;
use regpath::oracle::{log_grid, solve_grid};
use regpath::LossKind;

mod common;

#[test]
fn clean_data_both_methods_recover_the_signal() {
    let cfg = HuberLassoConfig {
        outlier_prob: 0.0,
        seeds: vec![1, 2, 3],
        ..HuberLassoConfig::default()
    };
    let report = run_huber_vs_lasso(&cfg);
    for row in &report.per_seed {
        assert!(row.errors.is_empty(), "{:?}", row.errors);
        for c in [row.huber.as_ref().unwrap(), row.lasso.as_ref().unwrap()] {
            assert!(
                (c.beta1 - 10.0).abs() <= 0.5,
                "seed {}: {}",
                row.seed,
                c.beta1
            );
        }
    }
}

#[test]
fn wide_knot_on_clean_data_ties_the_lasso() {
    let cfg = HuberLassoConfig {
        n: 40,
        p: 10,
        outlier_prob: 0.0,
        delta: 1e6,
        seeds: vec![4, 5],
        ..HuberLassoConfig::default()
    };
    let report = run_huber_vs_lasso(&cfg);
    for row in &report.per_seed {
        assert_eq!(
            row.huber.as_ref().unwrap().error,
            row.lasso.as_ref().unwrap().error
        );
        assert_eq!(row.winner, Some(Winner::Tie));
    }
    assert_eq!(
        report.aggregate.huber_median_error,
        report.aggregate.lasso_median_error
    );
}

#[test]
fn huber_lasso_report_is_deterministic_and_recomputable() {
    let cfg = HuberLassoConfig {
        n: 50,
        p: 20,
        seeds: vec![3, 1, 2],
        ..HuberLassoConfig::default()
    };
    let a = run_huber_vs_lasso(&cfg);
    let b = run_huber_vs_lasso(&cfg);
    assert_eq!(a, b);
    assert_eq!(
        a.per_seed.iter().map(|r| r.seed).collect::<Vec<_>>(),
        vec![3, 1, 2]
    );
    let wins = a
        .per_seed
        .iter()
        .filter(|r| r.winner == Some(Winner::Huber))
        .count();
    assert_eq!(a.aggregate.huber_wins, wins);
    assert_eq!(a.aggregate.win_rate, wins as f64 / 3.0);
}

#[test]
fn null_signal_keeps_both_paths_near_zero() {
    let cfg = BoostEquivConfig {
        n: 200,
        true_beta: vec![0.0; 4],
        epsilon: 0.002,
        steps: 20,
        check_refinement: false,
        ..BoostEquivConfig::default()
    };
    let report = run_boost_equivalence(&cfg).unwrap();
    let seed = &report.per_seed[0];
    assert!(seed.boost_max_norm <= 20.0 * 0.002 + 1e-12);
    assert!(
        seed.discrepancy.sup <= 5.0 * cfg.epsilon,
        "{}",
        seed.discrepancy.sup
    );
    assert_eq!(report, run_boost_equivalence(&cfg).unwrap());
}

#[test]
fn lasso_breakpoints_agree_with_a_dense_oracle_grid() {
    let ds = common::regression_problem(30, 10, 77);
    let path = lasso_path(&ds).unwrap();
    let lams = log_grid(path.lambda_max(), path.lambda_max() * 1e-3, 50);
    let grid = solve_grid(&ds, LossKind::Squared, &lams, &common::tight_oracle()).unwrap();
    for (lam, beta) in lams.iter().zip(&grid.betas) {
        let exact = regpath::evaluate_path(&path, *lam).unwrap();
        assert!(common::sup_diff(&exact, beta) <= 1e-4, "λ={lam}");
    }
}

#[test]
fn contaminated_design_has_the_documented_shape() {
    let ds = simulate_contaminated(&ContaminatedSimConfig {
        seed: 1,
        ..Default::default()
    })
    .unwrap();
    assert_eq!((ds.n(), ds.p()), (100, 80));
}
