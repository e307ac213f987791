//! `pvcast`: spatial capacity-factor estimation and daily generation
//! forecasting over a normalized geospatial data cube.

mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliResult;

#[derive(Parser)]
#[command(
    name = "pvcast",
    version,
    about = "Photovoltaic production estimation: data cube, kriging, regressor committees, covariance/correlation estimate, hybrid forecasting"
)]
struct Cli {
    /// Seed for every stochastic path.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker thread cap (0 = library default). Results do not depend on
    /// this.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output directory; falls back to $PVCAST_OUTPUT_DIR, then ./out.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the normalized data cube from source tables.
    Cube {
        #[command(subcommand)]
        command: CubeCommand,
    },
    /// Ordinary kriging of plant capacity factor onto a grid.
    Krige(KrigeArgs),
    /// Mean-vote committee over the cube columns.
    Ensemble {
        #[command(subcommand)]
        command: EnsembleCommand,
    },
    /// Covariance/correlation production estimate.
    Covcor {
        #[command(subcommand)]
        command: CovcorCommand,
    },
    /// Hybrid ARIMA + dual-MLP daily generation forecasting.
    Forecast {
        #[command(subcommand)]
        command: ForecastCommand,
    },
    /// Emit synthetic fixtures.
    Synth(SynthArgs),
}

#[derive(Subcommand)]
enum CubeCommand {
    /// Join sources onto a query grid and normalize.
    Build(CubeBuildArgs),
}

#[derive(Args)]
struct CubeBuildArgs {
    #[arg(long)]
    atlas: Option<PathBuf>,
    #[arg(long)]
    stations: Option<PathBuf>,
    #[arg(long)]
    pvgis: Option<PathBuf>,
    #[arg(long)]
    plants: Option<PathBuf>,
    /// lat,lon CSV of query locations.
    #[arg(long)]
    grid: PathBuf,
    /// Neighbors averaged per query location.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Fold PVGIS monthly means into a cube column instead of keeping
    /// them evaluation-only.
    #[arg(long, default_value_t = false)]
    include_pvgis: bool,
}

#[derive(Args)]
struct KrigeArgs {
    /// Plant samples (lat,lon,capacity_factor).
    #[arg(long)]
    samples: PathBuf,
    /// lat,lon CSV of prediction locations.
    #[arg(long)]
    grid: PathBuf,
    /// Distance bins for the empirical semivariogram.
    #[arg(long, default_value_t = 12)]
    n_bins: usize,
    /// Also render raster.png (requires a regular lattice grid).
    #[arg(long, default_value_t = false)]
    heatmap: bool,
}

#[derive(Subcommand)]
enum EnsembleCommand {
    /// Genetic search over committee membership and hyperparameters.
    Optimize(EnsembleOptimizeArgs),
    /// Predict with a stored committee.
    Predict(EnsemblePredictArgs),
}

#[derive(Args)]
struct EnsembleOptimizeArgs {
    /// Cube CSV from `cube build`.
    #[arg(long)]
    cube: PathBuf,
    /// Target field (lat,lon,value), e.g. the kriged raster.
    #[arg(long)]
    target: PathBuf,
    #[arg(long, default_value_t = 30)]
    pop: usize,
    #[arg(long, default_value_t = 10)]
    gens: usize,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0.8)]
    crossover_rate: f64,
    #[arg(long, default_value_t = 0.2)]
    mutation_rate: f64,
    #[arg(long, default_value_t = 1)]
    elites: usize,
    /// Comma-separated kinds (default: the full pool).
    #[arg(long)]
    pool: Option<String>,
    /// Write per-generation checkpoint JSONs.
    #[arg(long, default_value_t = false)]
    checkpoints: bool,
}

#[derive(Args)]
struct EnsemblePredictArgs {
    /// committee.json from `ensemble optimize`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    cube: PathBuf,
}

#[derive(Subcommand)]
enum CovcorCommand {
    /// Build the a/b weight rows from the cube.
    Weights(CovcorWeightsArgs),
    /// Evaluate E = a·X² + b·X at every cube row.
    Estimate(CovcorEstimateArgs),
    /// Compare two fields by MSE/MAE.
    Evaluate(CovcorEvaluateArgs),
}

#[derive(Args)]
struct CovcorWeightsArgs {
    #[arg(long)]
    cube: PathBuf,
    #[arg(long, default_value = "direct_normal")]
    target: String,
    /// Comma-separated variables forced to a negative influence
    /// (default: avg_max_temp,avg_rel_humidity,total_precipitation,
    /// skipping any not present; explicit names must exist).
    #[arg(long)]
    flip: Option<String>,
    /// Flip only the correlation entries, leaving covariance signs alone.
    #[arg(long, default_value_t = false)]
    flip_correlation_only: bool,
}

#[derive(Args)]
struct CovcorEstimateArgs {
    #[arg(long)]
    cube: PathBuf,
    /// weights.json from `covcor weights`.
    #[arg(long)]
    weights: PathBuf,
    #[arg(long, default_value_t = false)]
    heatmap: bool,
}

#[derive(Args)]
struct CovcorEvaluateArgs {
    /// Estimate field CSV (lat,lon,value).
    #[arg(long)]
    estimate: PathBuf,
    /// Reference field CSV (lat,lon,value).
    #[arg(long)]
    reference: PathBuf,
    /// Compare raw values instead of min-max rescaling each field first.
    #[arg(long, default_value_t = false)]
    no_rescale: bool,
}

#[derive(Subcommand)]
enum ForecastCommand {
    /// Fit the hybrid forecaster with genetic search.
    Fit(ForecastFitArgs),
    /// Forecast from a stored hybrid model.
    Predict(ForecastPredictArgs),
}

#[derive(Args)]
struct ForecastFitArgs {
    /// Series CSV: date,generation[,exog...].
    #[arg(long)]
    series: PathBuf,
    /// Comma-separated exogenous column names (default: none).
    #[arg(long)]
    exog: Option<String>,
    /// Non-seasonal order p,d,q.
    #[arg(long, default_value = "1,1,1")]
    order: String,
    /// Seasonal order P,D,Q,s.
    #[arg(long)]
    seasonal: Option<String>,
    /// Grid-search p,q over {0,1,2} on the training span first.
    #[arg(long, default_value_t = false)]
    auto_order: bool,
    #[arg(long, default_value_t = 10)]
    pop: usize,
    #[arg(long, default_value_t = 5)]
    gens: usize,
    /// Score genomes on the last 20% of the training span instead of the
    /// test span.
    #[arg(long, default_value_t = false)]
    validation_fitness: bool,
    #[arg(long, default_value_t = 200)]
    mlp_epochs: usize,
    #[arg(long, default_value_t = 20)]
    lag_max: usize,
    #[arg(long, default_value_t = 128)]
    hidden_max: usize,
    /// Write per-generation checkpoint JSONs.
    #[arg(long, default_value_t = false)]
    checkpoints: bool,
}

#[derive(Args)]
struct ForecastPredictArgs {
    /// hybrid_model.json from `forecast fit`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    horizon: usize,
    /// Future exogenous rows (CSV with the model's exog columns), needed
    /// when the horizon runs past the stored series.
    #[arg(long)]
    exog_future: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    /// Size parameter: grid points, series length, sample count.
    #[arg(long, default_value_t = 64)]
    n: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    /// atlas/stations/pvgis/plants/grid/reference files over a lattice.
    LinearMap,
    /// Sin-contaminated AR(1) daily series.
    ArSin,
    /// Line with 30% gross outliers.
    OutlierLine,
    /// Sample field for kriging.
    VariogramField,
}

fn output_dir(cli: &Cli) -> PathBuf {
    cli.output_dir
        .clone()
        .or_else(|| std::env::var_os("PVCAST_OUTPUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run(cli: Cli) -> CliResult<()> {
    let out = output_dir(&cli);
    let seed = cli.seed;
    match cli.command {
        Command::Cube {
            command: CubeCommand::Build(args),
        } => commands::cube::build(args, &out),
        Command::Krige(args) => commands::krige::run(args, &out),
        Command::Ensemble {
            command: EnsembleCommand::Optimize(args),
        } => commands::ensemble::optimize(args, seed, &out),
        Command::Ensemble {
            command: EnsembleCommand::Predict(args),
        } => commands::ensemble::predict(args, &out),
        Command::Covcor {
            command: CovcorCommand::Weights(args),
        } => commands::covcor::weights(args, &out),
        Command::Covcor {
            command: CovcorCommand::Estimate(args),
        } => commands::covcor::estimate(args, &out),
        Command::Covcor {
            command: CovcorCommand::Evaluate(args),
        } => commands::covcor::evaluate(args, &out),
        Command::Forecast {
            command: ForecastCommand::Fit(args),
        } => commands::forecast::fit(args, seed, &out),
        Command::Forecast {
            command: ForecastCommand::Predict(args),
        } => commands::forecast::predict(args, &out),
        Command::Synth(args) => commands::synth::run(args, seed, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    let threads = cli.threads;
    match pvcast_core::run_with_threads(threads, move || run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
