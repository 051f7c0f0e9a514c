//! Command-line front end: synthetic data generation, error maps, error
//! curves and hyperparameter selection reports.

mod output;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use rmt_ensemble::data::{file_sha256, generate_synthetic, load_csv, save_csv, CovarianceKind, CsvOptions, SyntheticSpec};
use rmt_ensemble::estimate::{estimate_model, EstimationConfig};
use rmt_ensemble::selection::{
    benchmark, empirical_error_map, evaluate_pairs, theoretical_error_map, BenchmarkConfig, EvalProtocol, SearchGrid,
};
use rmt_ensemble::{data::stratified_split, rng, Dataset, EnsembleConfig, Error, ErrorCategory, MixtureModel, Predictor};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "rmt-ensemble", version, about = "Bagged LSSVM ensembles: error maps, curves and (m, λ) selection")]
struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Directory that receives output files.
    #[arg(long, global = true, default_value = ".", value_name = "DIR")]
    out_dir: PathBuf,

    /// Progress messages on stderr.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic two-class Gaussian dataset and print its SHA-256.
    Gen {
        #[command(flatten)]
        synth: SyntheticArgs,
        /// File name inside the output directory.
        #[arg(long, default_value = "synthetic.csv")]
        output: String,
    },
    /// Empirical and theoretical error over the (m, λ) grid.
    Map {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Leave theoretical cells with d·m/n at or above this empty.
        #[arg(long, value_name = "R")]
        max_ratio: Option<f64>,
        /// Write |m| × |λ| matrices instead of long format.
        #[arg(long)]
        matrix: bool,
    },
    /// Empirical and theoretical error against m at a single λ.
    Curve {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1)]
        m_min: usize,
        #[arg(long, default_value_t = 50)]
        m_max: usize,
        #[command(flatten)]
        eval: EvalArgs,
        /// Leave theoretical values with d·m/n at or above this empty.
        #[arg(long, value_name = "R")]
        max_ratio: Option<f64>,
    },
    /// Select (m, λ) from the predicted error and compare against grid and
    /// random search on a held-out split.
    Select {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Validation splits for the baselines and held-out repetitions.
        #[arg(long, default_value_t = 10)]
        reps: usize,
        /// Train share of each validation split.
        #[arg(long, default_value_t = 0.8)]
        split_fraction: f64,
        /// Share of the data held out for the final comparison.
        #[arg(long, default_value_t = 0.2)]
        holdout_fraction: f64,
        /// Random search budget [default: grid size].
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, default_value_t = 100)]
        bootstrap_reps: usize,
        /// Fixed covariance shrinkage in [0, 1] instead of Ledoit-Wolf.
        #[arg(long)]
        shrinkage: Option<f64>,
        /// Theoretical cells with d·m/n at or above this are not selectable.
        #[arg(long, default_value_t = 1.0, value_name = "R")]
        max_ratio: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CovArg {
    Identity,
    Toeplitz,
}

#[derive(Args, Debug)]
struct SyntheticArgs {
    /// Feature dimension [default: 100].
    #[arg(long)]
    d: Option<usize>,
    /// Samples per class [default: 1000].
    #[arg(long)]
    n_per_class: Option<usize>,
    /// Class means are ∓mu_scale·e₁ [default: 0.9].
    #[arg(long)]
    mu_scale: Option<f64>,
    /// Covariance structure [default: identity].
    #[arg(long, value_enum)]
    cov: Option<CovArg>,
    /// Toeplitz decay, Σᵢⱼ = rho^|i−j| [default: 0.5].
    #[arg(long)]
    rho: Option<f64>,
}

impl SyntheticArgs {
    fn any_set(&self) -> bool {
        self.d.is_some() || self.n_per_class.is_some() || self.mu_scale.is_some() || self.cov.is_some() || self.rho.is_some()
    }

    fn spec(&self, seed: u64) -> Result<SyntheticSpec, Error> {
        let covariance = match self.cov.unwrap_or(CovArg::Identity) {
            CovArg::Identity => {
                if self.rho.is_some() {
                    return Err(Error::InvalidConfig("--rho requires --cov toeplitz".into()));
                }
                CovarianceKind::Identity
            }
            CovArg::Toeplitz => CovarianceKind::Toeplitz {
                rho: self.rho.unwrap_or(0.5),
            },
        };
        let spec = SyntheticSpec::new(self.d.unwrap_or(100), self.n_per_class.unwrap_or(1000), covariance, seed)?
            .with_mu_scale(self.mu_scale.unwrap_or(0.9));
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Debug)]
struct SourceArgs {
    /// Read samples from a headed CSV file.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Generate a synthetic dataset from --seed.
    #[arg(long)]
    synthetic: bool,
    #[command(flatten)]
    synth: SyntheticArgs,
    /// Name of the label column [default: label].
    #[arg(long)]
    label_column: Option<String>,
    /// Label value of the positive class [default: 1].
    #[arg(long, allow_hyphen_values = true)]
    positive_label: Option<String>,
    /// Label value of the negative class [default: -1].
    #[arg(long, allow_hyphen_values = true)]
    negative_label: Option<String>,
    /// Scale every feature to zero mean and unit variance.
    #[arg(long)]
    standardize: bool,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, default_value_t = 1)]
    m_min: usize,
    #[arg(long, default_value_t = 50)]
    m_max: usize,
    #[arg(long, default_value_t = 1e-4)]
    lambda_min: f64,
    #[arg(long, default_value_t = 10.0)]
    lambda_max: f64,
    /// Log-spaced λ values.
    #[arg(long, default_value_t = 40)]
    lambda_points: usize,
}

impl GridArgs {
    fn grid(&self) -> Result<SearchGrid, Error> {
        SearchGrid::from_ranges(self.m_min, self.m_max, self.lambda_min, self.lambda_max, self.lambda_points)
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Repeated train/test splits.
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Train share of each split.
    #[arg(long, default_value_t = 0.5)]
    train_fraction: f64,
    /// Bootstrap resamples when the model is estimated from a CSV file.
    #[arg(long, default_value_t = 100)]
    bootstrap_reps: usize,
}

/// Data plus the mixture model the theory is evaluated at: the generating
/// model for synthetic data, a plug-in estimate for files.
struct Source {
    data: Dataset,
    model: MixtureModel,
}

fn load_source(args: &SourceArgs, seed: u64, bootstrap_reps: usize, verbose: u8) -> Result<Source, Error> {
    match (&args.csv, args.synthetic) {
        (Some(_), true) => Err(Error::InvalidConfig("--csv and --synthetic are mutually exclusive".into())),
        (None, false) => Err(Error::InvalidConfig("one of --csv or --synthetic is required".into())),
        (None, true) => {
            if args.label_column.is_some()
                || args.positive_label.is_some()
                || args.negative_label.is_some()
                || args.standardize
            {
                return Err(Error::InvalidConfig("CSV flags need --csv".into()));
            }
            let spec = args.synth.spec(seed)?;
            let data = generate_synthetic(&spec)?;
            if verbose > 0 {
                eprintln!("generated {} samples in dimension {}", data.n(), data.d());
            }
            Ok(Source {
                model: spec.model()?,
                data,
            })
        }
        (Some(path), false) => {
            if args.synth.any_set() {
                return Err(Error::InvalidConfig("synthetic shape flags need --synthetic".into()));
            }
            let defaults = CsvOptions::default();
            let opts = CsvOptions {
                label_column: args.label_column.clone().unwrap_or(defaults.label_column),
                positive_label: args.positive_label.clone().unwrap_or(defaults.positive_label),
                negative_label: args.negative_label.clone().unwrap_or(defaults.negative_label),
                standardize: args.standardize,
            };
            let loaded = load_csv(path, &opts).map_err(|e| match e {
                Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
                other => other,
            })?;
            if !loaded.constant_features.is_empty() {
                eprintln!(
                    "warning: constant features left unscaled: {}",
                    loaded.constant_features.join(", ")
                );
            }
            let data = loaded.dataset;
            let cfg = EstimationConfig {
                bootstrap_reps,
                seed: rng::derive_seed(seed, "bootstrap", &[]),
                shrinkage_override: None,
            };
            let model = estimate_model(&data, &cfg)?.model;
            if verbose > 0 {
                eprintln!("loaded {} samples in dimension {} from {}", data.n(), data.d(), path.display());
            }
            Ok(Source { data, model })
        }
    }
}

/// Training-set size produced by the protocol's stratified splits.
fn train_size(data: &Dataset, fraction: f64) -> Result<usize, Error> {
    Ok(stratified_split(data, fraction, 0)?.0.n())
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::InvalidConfig("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&cli.out_dir)?;
    let out = |name: &str| cli.out_dir.join(name);
    let seed = cli.seed;
    let verbose = cli.verbose;

    match &cli.command {
        Command::Gen { synth, output } => {
            let spec = synth.spec(seed)?;
            let data = generate_synthetic(&spec)?;
            let path = out(output);
            save_csv(&data, &path, None, "label")?;
            println!("{}  {}", file_sha256(&path)?, path.display());
        }
        Command::Map {
            source,
            grid,
            eval,
            max_ratio,
            matrix,
        } => {
            let src = load_source(source, seed, eval.bootstrap_reps, verbose)?;
            let grid = grid.grid()?;
            let protocol = EvalProtocol::new(eval.reps, eval.train_fraction, seed);
            let n_train = train_size(&src.data, eval.train_fraction)?;
            if verbose > 0 {
                eprintln!("{} cells, {} repetitions, {} training samples", grid.len(), eval.reps, n_train);
            }
            let empirical = empirical_error_map(&src.data, &grid, &protocol)?;
            let theory = theoretical_error_map(&src.model, n_train, &grid, *max_ratio)?;
            let written = if *matrix {
                let means = empirical.means();
                let stds = empirical.cells.iter().map(|c| c.map(|s| s.std)).collect::<Vec<_>>();
                vec![
                    output::write(&out("empirical_map.csv"), &output::matrix(&grid, &means.errors))?,
                    output::write(&out("empirical_map_std.csv"), &output::matrix(&grid, &stds))?,
                    output::write(&out("theoretical_map.csv"), &output::matrix(&grid, &theory.errors))?,
                ]
            } else {
                let stds: Vec<Option<f64>> = empirical.cells.iter().map(|c| c.map(|s| s.std)).collect();
                let none = vec![None; grid.len()];
                vec![
                    output::write(&out("empirical_map.csv"), &output::long(&grid, &empirical.means().errors, &stds))?,
                    output::write(&out("theoretical_map.csv"), &output::long(&grid, &theory.errors, &none))?,
                ]
            };
            for p in written {
                println!("{}", p.display());
            }
        }
        Command::Curve {
            source,
            lambda,
            m_min,
            m_max,
            eval,
            max_ratio,
        } => {
            if *m_min == 0 || m_max < m_min {
                return Err(Error::InvalidConfig(format!("need 1 <= m-min <= m-max, got {m_min}..{m_max}")));
            }
            if !(*lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
            }
            let src = load_source(source, seed, eval.bootstrap_reps, verbose)?;
            let protocol = EvalProtocol::new(eval.reps, eval.train_fraction, seed);
            let n_train = train_size(&src.data, eval.train_fraction)?;
            let pairs: Vec<(usize, f64)> = (*m_min..=*m_max).map(|m| (m, *lambda)).collect();
            let empirical = evaluate_pairs(&src.data, &pairs, &protocol)?;
            let predictor = Predictor::new(src.model.clone());
            let theory: Vec<Option<f64>> = pairs
                .iter()
                .map(|&(m, l)| {
                    let cfg = EnsembleConfig::new(n_train, src.data.d(), m, l).ok()?;
                    if max_ratio.is_some_and(|r| cfg.ratio() >= r) {
                        return None;
                    }
                    predictor.predict(&cfg).ok().map(|p| p.error)
                })
                .collect();
            if empirical.iter().all(Option::is_none) && theory.iter().all(Option::is_none) {
                return Err(Error::InfeasibleGrid);
            }
            let path = output::write(&out("curve.csv"), &output::curve(&pairs, &empirical, &theory))?;
            println!("{}", path.display());
        }
        Command::Select {
            source,
            grid,
            reps,
            split_fraction,
            holdout_fraction,
            budget,
            bootstrap_reps,
            shrinkage,
            max_ratio,
        } => {
            let src = load_source(source, seed, *bootstrap_reps, verbose)?;
            let grid = grid.grid()?;
            let cfg = BenchmarkConfig {
                seed,
                reps: *reps,
                split_fraction: *split_fraction,
                holdout_fraction: *holdout_fraction,
                budget: *budget,
                bootstrap_reps: *bootstrap_reps,
                shrinkage_override: *shrinkage,
                max_ratio: Some(*max_ratio),
            };
            let report = benchmark(&src.data, &grid, &cfg)?;
            if verbose > 0 {
                eprintln!(
                    "selected m = {}, lambda = {} (predicted error {:.4})",
                    report.best_m, report.best_lambda, report.best_predicted_error
                );
            }
            let path = output::write(&out("selection_report.json"), &(report.to_json()? + "\n"))?;
            println!("{}", path.display());
            println!("digest {}", report.digest());
        }
    }
    Ok(())
}

fn category_name(c: ErrorCategory) -> (&'static str, u8) {
    match c {
        ErrorCategory::Usage => ("usage", 2),
        ErrorCategory::Data => ("data", 3),
        ErrorCategory::Numerical => ("numerical", 4),
    }
}

fn fail(category: ErrorCategory, message: String) -> ExitCode {
    let (name, code) = category_name(category);
    let body = serde_json::json!({
        "error": { "category": name, "exit_code": code, "message": message }
    });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                eprint!("{e}");
            }
            let text = e.to_string();
            let text = text.trim().trim_start_matches("error: ");
            return fail(ErrorCategory::Usage, text.to_string());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.category(), e.to_string()),
    }
}
