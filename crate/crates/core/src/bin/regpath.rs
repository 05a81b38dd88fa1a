use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use regpath::boosting::{boost, BoostConfig, BoostError};
use regpath::data::{
    load_csv_path, simulate_binary, simulate_contaminated, BinarySimConfig, ContaminatedSimConfig,
    DataError, Dataset, Task,
};
use regpath::experiments::{
    compare_points, run_boost_equivalence, run_huber_vs_lasso, BoostEquivConfig, ExperimentError,
    HuberLassoConfig,
};
use regpath::homotopy::{exact_path, PathError};
use regpath::io::{emit_plot_data, read_json, write_json, Axis, FileError, Format, PathFile};
use regpath::loss::{kkt_residual, lambda_max, LossError, LossKind};
use regpath::numerics::LinalgError;
use regpath::oracle::{parse_lambda_spec, solve_grid, OracleConfig, OracleError};

const LOSSES: [&str; 5] = ["squared", "huber", "hinge", "exp", "logistic"];

#[derive(Parser)]
#[command(
    name = "regpath",
    version,
    about = "Regularization paths, ε-boosting and path comparison"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a simulated dataset as CSV.
    #[command(subcommand)]
    Simulate(Simulate),
    /// Exact Lasso or Huberized Lasso path.
    Path(PathArgs),
    /// ε-boosting trace.
    Boost(BoostArgs),
    /// Oracle solutions on a λ grid.
    Grid(GridArgs),
    /// Compare two saved paths.
    Compare(CompareArgs),
    /// Run one of the built-in experiments.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Subcommand)]
enum Simulate {
    /// Linear signal on x1 with normal-mixture noise.
    Contaminated {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 80)]
        p: usize,
        #[arg(long, default_value_t = 10.0)]
        signal: f64,
        #[arg(long, default_value_t = 1.0)]
        inlier_sd: f64,
        #[arg(long, default_value_t = 10.0)]
        outlier_sd: f64,
        #[arg(long, default_value_t = 0.1)]
        outlier_prob: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Logistic-model ±1 labels.
    Binary {
        #[arg(long, default_value_t = 300)]
        n: usize,
        /// Comma-separated true coefficients.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "1.5,-1,0.75,0.5,0"
        )]
        true_beta: Vec<f64>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the response column.
    #[arg(long, default_value = "y")]
    response: String,
}

#[derive(Args)]
struct PathArgs {
    #[arg(long, value_parser = ["squared", "huber"])]
    loss: String,
    #[arg(long)]
    delta: Option<f64>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Key column for CSV output.
    #[arg(long, value_enum, default_value = "lambda")]
    axis: Axis,
}

#[derive(Args)]
struct BoostArgs {
    #[arg(long, value_parser = LOSSES)]
    loss: String,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    steps: usize,
    /// Record every K-th iterate (default: about 1000 records).
    #[arg(long)]
    thin: Option<usize>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, value_parser = LOSSES)]
    loss: String,
    #[arg(long)]
    delta: Option<f64>,
    /// `log:START:STOP:COUNT` or a decreasing comma list; `max` stands for λ_max.
    #[arg(long)]
    lambdas: String,
    #[arg(long)]
    kkt_tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, value_enum, default_value = "lambda")]
    axis: Axis,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, value_enum, default_value = "l1norm")]
    axis: Axis,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Experiment {
    /// Huberized Lasso vs Lasso on contaminated data.
    HuberLasso {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// ε-boosting vs the L1-penalized logistic path.
    BoostEquiv {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    module: &'static str,
    message: String,
}

impl Failure {
    fn usage(module: &'static str, message: impl ToString) -> Self {
        Self {
            code: 2,
            module,
            message: message.to_string(),
        }
    }

    fn numerical(module: &'static str, message: impl ToString) -> Self {
        Self {
            code: 3,
            module,
            message: message.to_string(),
        }
    }

    fn io(module: &'static str, message: impl ToString) -> Self {
        Self {
            code: 4,
            module,
            message: message.to_string(),
        }
    }
}

impl From<LossError> for Failure {
    fn from(e: LossError) -> Self {
        Failure::usage("loss", e)
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io { .. } => Failure::io("data", e),
            DataError::Linalg(
                LinalgError::NotPositiveDefinite { .. } | LinalgError::RankDeficient { .. },
            ) => Failure::numerical("data", e),
            _ => Failure::usage("data", e),
        }
    }
}

impl From<PathError> for Failure {
    fn from(e: PathError) -> Self {
        match e {
            PathError::CollinearActiveSet { .. } | PathError::StepLimitExceeded { .. } => {
                Failure::numerical("homotopy", e)
            }
            _ => Failure::usage("homotopy", e),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        let numerical = match &e {
            OracleError::AtLambda { source, .. } => {
                matches!(
                    **source,
                    OracleError::MaxItersExceeded { .. } | OracleError::NonFinite(_)
                )
            }
            OracleError::MaxItersExceeded { .. } | OracleError::NonFinite(_) => true,
            _ => false,
        };
        if numerical {
            Failure::numerical("oracle", e)
        } else {
            Failure::usage("oracle", e)
        }
    }
}

impl From<BoostError> for Failure {
    fn from(e: BoostError) -> Self {
        match e {
            BoostError::NonFinite(_) => Failure::numerical("boosting", e),
            _ => Failure::usage("boosting", e),
        }
    }
}

impl From<FileError> for Failure {
    fn from(e: FileError) -> Self {
        match e {
            FileError::Io { .. } => Failure::io("io", e),
            _ => Failure::usage("io", e),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Data(e) => e.into(),
            ExperimentError::Path(e) => e.into(),
            ExperimentError::Boost(e) => e.into(),
            ExperimentError::Oracle(e) => e.into(),
            ExperimentError::Loss(e) => e.into(),
            other => Failure::usage("experiments", other),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error [{}]: {}", f.module, f.message);
            ExitCode::from(f.code)
        }
    }
}

fn loss_from(token: &str, delta: Option<f64>) -> Result<LossKind, Failure> {
    Ok(LossKind::from_token(token, delta)?)
}

fn load(args: &DataArgs, loss: LossKind) -> Result<Dataset, Failure> {
    let task = if loss.requires_binary() {
        Task::Binary
    } else {
        Task::Regression
    };
    let loaded = load_csv_path(&args.data, &args.response, task)?;
    if loaded.labels_remapped {
        eprintln!("note: 0/1 labels remapped to -1/+1");
    }
    Ok(loaded.dataset)
}

fn save(file: &PathFile, format: Format, axis: Axis, out: &Path) -> Result<(), Failure> {
    Ok(emit_plot_data(file, format, axis, out)?)
}

fn run(command: Command) -> Result<String, Failure> {
    match command {
        Command::Simulate(sim) => simulate(sim),
        Command::Path(args) => path(args),
        Command::Boost(args) => run_boost(args),
        Command::Grid(args) => grid(args),
        Command::Compare(args) => compare(args),
        Command::Experiment(exp) => experiment(exp),
    }
}

fn simulate(sim: Simulate) -> Result<String, Failure> {
    let (ds, out) = match sim {
        Simulate::Contaminated {
            n,
            p,
            signal,
            inlier_sd,
            outlier_sd,
            outlier_prob,
            seed,
            out,
        } => {
            let cfg = ContaminatedSimConfig {
                n,
                p,
                signal,
                inlier_sd,
                outlier_sd,
                outlier_prob,
                seed,
            };
            (simulate_contaminated(&cfg)?, out)
        }
        Simulate::Binary {
            n,
            true_beta,
            seed,
            out,
        } => (
            simulate_binary(&BinarySimConfig { n, true_beta, seed })?,
            out,
        ),
    };
    ds.save_csv(&out)?;
    Ok(format!(
        "simulated n={} p={} -> {}",
        ds.n(),
        ds.p(),
        out.display()
    ))
}

fn path(args: PathArgs) -> Result<String, Failure> {
    let loss = loss_from(&args.loss, args.delta)?;
    let ds = load(&args.data, loss)?;
    let path = exact_path(&ds, loss)?;
    let mut kkt_max: f64 = 0.0;
    for bp in &path.breakpoints {
        let r = kkt_residual(&ds, loss, bp.lambda, &bp.beta)?;
        kkt_max = kkt_max.max(r / (1.0 + bp.lambda));
    }
    save(&PathFile::from(&path), args.format, args.axis, &args.out)?;
    Ok(format!(
        "{} path: {} breakpoints, lambda {} -> {}, termination {}, max scaled kkt {:.3e}",
        loss,
        path.len(),
        path.lambda_max(),
        path.lambda_min(),
        serde_json::to_string(&path.termination).unwrap_or_default(),
        kkt_max
    ))
}

fn run_boost(args: BoostArgs) -> Result<String, Failure> {
    let loss = loss_from(&args.loss, args.delta)?;
    let ds = load(&args.data, loss)?;
    let mut cfg = BoostConfig::new(loss, args.epsilon, args.steps);
    cfg.thin = args.thin;
    let trace = boost(&ds, &cfg)?;
    save(
        &PathFile::from(&trace),
        args.format,
        Axis::L1norm,
        &args.out,
    )?;
    let stop = match trace.stopped_at_stationary {
        Some(t) => format!(", stationary at iteration {t}"),
        None => String::new(),
    };
    Ok(format!(
        "{} boosting: {} iterations, {} records, final l1 norm {}{}",
        loss,
        trace.moves.len(),
        trace.records.len(),
        trace.max_norm(),
        stop
    ))
}

fn grid(args: GridArgs) -> Result<String, Failure> {
    let loss = loss_from(&args.loss, args.delta)?;
    let ds = load(&args.data, loss)?;
    let lmax = lambda_max(&ds, loss)?;
    let lambdas = parse_lambda_spec(&args.lambdas, lmax)?;
    let mut cfg = OracleConfig::default();
    if let Some(t) = args.kkt_tol {
        cfg.kkt_tol = t;
    }
    if let Some(m) = args.max_iters {
        cfg.max_iters = m;
    }
    let grid = solve_grid(&ds, loss, &lambdas, &cfg)?;
    let kkt_max = grid.kkt.iter().copied().fold(0.0, f64::max);
    save(
        &PathFile::from_grid(&grid, ds.n(), ds.feature_names()),
        args.format,
        args.axis,
        &args.out,
    )?;
    Ok(format!(
        "{} grid: {} lambdas, max kkt {:.3e}",
        loss,
        grid.lambdas.len(),
        kkt_max
    ))
}

fn compare(args: CompareArgs) -> Result<String, Failure> {
    let a = PathFile::load_json(&args.a)?;
    let b = PathFile::load_json(&args.b)?;
    if a.header.p != b.header.p {
        return Err(Failure::usage(
            "experiments",
            format!(
                "paths have different widths ({} vs {})",
                a.header.p, b.header.p
            ),
        ));
    }
    let report = compare_points(&a.points(args.axis)?, &b.points(args.axis)?, args.axis)?;
    write_json(&args.out, &report)?;
    Ok(format!(
        "compared {} points: sup discrepancy {:.6e}, mean {:.6e}",
        report.matched, report.sup, report.mean
    ))
}

fn verdict_line(verdicts: &std::collections::BTreeMap<String, bool>) -> String {
    verdicts
        .iter()
        .map(|(k, v)| format!("{k}={}", if *v { "pass" } else { "fail" }))
        .collect::<Vec<_>>()
        .join(" ")
}

fn experiment(exp: Experiment) -> Result<String, Failure> {
    match exp {
        Experiment::HuberLasso { config, out } => {
            let cfg: HuberLassoConfig = match config {
                Some(path) => read_json(&path)?,
                None => HuberLassoConfig::default(),
            };
            let report = run_huber_vs_lasso(&cfg);
            write_json(&out, &report)?;
            let a = &report.aggregate;
            Ok(format!(
                "huber-lasso: {}/{} seeds completed, huber win rate {:.2}, huber median |b1-signal| {:.3}, lasso {:.3}; {}",
                a.completed,
                a.seeds,
                a.win_rate,
                a.huber_median_beta1_error,
                a.lasso_median_beta1_error,
                verdict_line(&report.verdicts)
            ))
        }
        Experiment::BoostEquiv { config, out } => {
            let cfg: BoostEquivConfig = match config {
                Some(path) => read_json(&path)?,
                None => BoostEquivConfig::default(),
            };
            let report = run_boost_equivalence(&cfg)?;
            write_json(&out, &report)?;
            let a = &report.aggregate;
            let refined = a
                .max_refined_sup
                .map(|r| format!(", refined {r:.4e}"))
                .unwrap_or_default();
            Ok(format!(
                "boost-equiv: sup discrepancy {:.4e} (bound {}){}; {}",
                a.max_sup,
                a.bound,
                refined,
                verdict_line(&report.verdicts)
            ))
        }
    }
}
