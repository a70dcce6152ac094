use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kasam::experiments::{run_study, ExperimentId, ExperimentSpec, ModelKind, sample_grid};
use kasam::models::Densities;
use kasam::stratify::{fit_sine, StratifyConfig};
use kasam::{io, properties};

#[derive(Parser)]
#[command(name = "kasam-lab", version, about = "Spline additive models and continual-learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-trial two-task study and write its artifacts.
    Run(RunArgs),
    /// Fit a zero-initialised spline to a few sine samples and dump the curve.
    StratifyDemo(StratifyArgs),
    /// Check the basis and gradient properties on random points.
    Properties(PropertiesArgs),
    /// Sample a checkpointed two-input model on a grid and write a PGM.
    Gridsample(GridArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_parser = parse_experiment)]
    experiment: ExperimentId,
    /// Comma-separated subset of sam, ann, kasam, kasam-pr.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind,
          default_value = "sam,ann,kasam,kasam-pr")]
    models: Vec<ModelKind>,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Trial t uses seed + t.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "KASAM_LAB_OUT")]
    out: PathBuf,
    /// Residual weight of KASAM.
    #[arg(long)]
    lambda: Option<f64>,
    /// Probability of a Task 2 point in the rehearsal mix.
    #[arg(long)]
    rho: Option<f64>,
    /// Comma-separated basis densities for every spline stack.
    #[arg(long, value_delimiter = ',')]
    densities: Option<Vec<usize>>,
    #[arg(long)]
    task1_epochs: Option<usize>,
    #[arg(long)]
    task2_epochs: Option<usize>,
    /// Standard deviation of the target noise.
    #[arg(long)]
    noise_std: Option<f64>,
    /// Points per dataset.
    #[arg(long)]
    points: Option<usize>,
    /// Interference grid resolution.
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Args)]
struct StratifyArgs {
    #[arg(long, default_value_t = 32)]
    density: usize,
    #[arg(long, default_value_t = 10)]
    points: usize,
    #[arg(long, default_value_t = 2000)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Curve samples written to the CSV.
    #[arg(long, default_value_t = 1001)]
    samples: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PropertiesArgs {
    #[arg(long, default_value_t = 10_000)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value_t = 256)]
    resolution: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_experiment(s: &str) -> Result<ExperimentId, String> {
    s.parse().map_err(|e: kasam::Error| e.to_string())
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: kasam::Error| e.to_string())
}

fn run(args: RunArgs) -> kasam::Result<()> {
    let mut spec = ExperimentSpec::new(args.experiment);
    if let Some(d) = args.densities {
        spec = spec.with_densities(Densities::new(d)?);
    }
    if let Some(l) = args.lambda {
        spec.kasam.lambda = l;
    }
    if let Some(r) = args.rho {
        spec.rho = r;
    }
    if let Some(e) = args.task1_epochs {
        spec.task1_epochs = e;
    }
    if let Some(e) = args.task2_epochs {
        spec.task2_epochs = e;
    }
    if let Some(n) = args.noise_std {
        spec.noise_std = n;
    }
    if let Some(p) = args.points {
        spec.n_points = p;
    }
    if let Some(r) = args.resolution {
        spec.grid_resolution = r;
    }
    let study = run_study(&spec, &args.models, args.trials as usize, args.seed)?;
    let written = io::write_study(&study, &args.out)?;
    println!(
        "experiment {} | {} trial(s) | base seed {}",
        spec.id, args.trials, args.seed
    );
    println!("{:<10} {:>22} {:>22}", "model", "task1 MAE (std)", "task2 MAE (std)");
    for m in &study.summary.models {
        println!(
            "{:<10} {:>13.4} ({:.4}) {:>13.4} ({:.4})",
            m.model.name(),
            m.task1_mae_mean,
            m.task1_mae_std,
            m.task2_mae_mean,
            m.task2_mae_std
        );
    }
    println!("wrote {} files to {}", written.len(), args.out.display());
    Ok(())
}

fn stratify(args: StratifyArgs) -> kasam::Result<()> {
    let fit = fit_sine(&StratifyConfig {
        density: args.density,
        points: args.points,
        epochs: args.epochs,
        seed: args.seed,
        ..StratifyConfig::default()
    })?;
    io::write_curve_csv(&fit.curve(args.samples), &args.out)?;
    println!(
        "K = {}, {} samples, train MAE {:.6}, {} of {} coefficients untouched",
        args.density,
        args.points,
        fit.train_mae,
        fit.untouched().len(),
        args.density
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn check_properties(args: PropertiesArgs) -> bool {
    let reports = properties::run_all(args.points, args.seed);
    for r in &reports {
        println!("{r}");
    }
    reports.iter().all(|r| r.passed)
}

fn gridsample(args: GridArgs) -> kasam::Result<()> {
    let model = io::load_checkpoint(&args.checkpoint)?;
    let grid = sample_grid(&model, args.resolution)?;
    io::write_grid_pgm(&grid, &args.out)?;
    println!(
        "{} model, range [{:.6}, {:.6}], wrote {} and {}",
        model.kind_name(),
        grid.min(),
        grid.max(),
        args.out.display(),
        io::sidecar_path(&args.out).display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::StratifyDemo(a) => stratify(a),
        Command::Gridsample(a) => gridsample(a),
        Command::Properties(a) => {
            return if check_properties(a) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
