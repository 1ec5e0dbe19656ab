use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use annealfe::experiments::{run_experiment, ExperimentConfig, ExperimentKind, ExperimentOutput};
use annealfe::{estimators, BipartiteModel, Error, KernelSpec, Method, RunConfig, Schedule};

#[derive(Parser)]
#[command(name = "annealfe", version, about = "Free-energy estimation for bipartite MRFs with AIS and mAIS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean APE versus inverse temperature
    ApeVsTemperature(ExperimentArgs),
    /// True and estimated free energies per (1/T, K)
    FreeEnergyTable(ExperimentArgs),
    /// Distribution of ln r over layer ratios
    LnrDistribution(ExperimentArgs),
    /// Mean APE versus number of annealing steps
    ApeVsK(ExperimentArgs),
    /// Exact certification suite (alias: theorem-certify)
    #[command(alias = "theorem-certify")]
    Certify(ExperimentArgs),
    /// One-off estimate for a model file
    Estimate(EstimateArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides output_path from the config
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the seed from the config
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ais,
    Mais,
    MaisV,
    MaisH,
    Auto,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ais => Method::Ais,
            MethodArg::Mais | MethodArg::MaisV => Method::MaisV,
            MethodArg::MaisH => Method::MaisH,
            MethodArg::Auto => Method::Auto,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    BlockedGibbs,
    MhAugmented,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
    #[arg(long = "K", alias = "k")]
    k: usize,
    #[arg(long = "N", alias = "n")]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "blocked-gibbs")]
    kernel: KernelArg,
    #[arg(long, default_value_t = 1)]
    mh_sweeps: u32,
    /// Include per-sequence log weights in the JSON output
    #[arg(long)]
    weights: bool,
    #[arg(long)]
    workers: Option<usize>,
}

enum Failure {
    Lib(Error),
    CertifyFailed(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Json(_) => 2,
        Error::Capacity { .. } => 3,
        _ => 1,
    }
}

fn with_workers<T>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Error>
where
    T: Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn run_experiment_command(kind: ExperimentKind, args: &ExperimentArgs) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if cfg.experiment != kind {
        return Err(Error::Config(format!(
            "subcommand expects a {} config but {} has experiment {}",
            kind.as_str(),
            args.config.display(),
            cfg.experiment.as_str()
        ))
        .into());
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out_dir = args.out.clone().unwrap_or_else(|| cfg.output_path.clone());
    let output = with_workers(args.workers, || run_experiment(&cfg))??;
    for path in output.write_to(&out_dir)? {
        println!("wrote {}", path.display());
    }
    if let ExperimentOutput::Certify(report) = &output {
        let failed = report.failures().count();
        println!(
            "{} checks, {} failed, {} skipped",
            report.checks.len(),
            failed,
            report.skipped.len()
        );
        for f in report.failures() {
            eprintln!("FAIL {} {} deviation={:e}", f.check, f.instance_descriptor, f.max_deviation);
        }
        if failed > 0 {
            return Err(Failure::CertifyFailed(failed));
        }
    }
    Ok(())
}

fn run_estimate(args: &EstimateArgs) -> Result<(), Failure> {
    let model = BipartiteModel::load_json(Path::new(&args.model))?;
    let kernel = match args.kernel {
        KernelArg::BlockedGibbs => KernelSpec::blocked_gibbs(),
        KernelArg::MhAugmented => KernelSpec::mh_augmented(args.mh_sweeps),
    };
    let schedule = Schedule::linear(args.k)?;
    let config = RunConfig::new(args.n, args.method.into(), kernel, args.seed);
    let result = with_workers(args.workers, || estimators::estimate(&model, &schedule, &config))??;
    println!("{}", result.to_json(args.weights)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::ApeVsTemperature(a) => run_experiment_command(ExperimentKind::ApeVsTemperature, a),
        Command::FreeEnergyTable(a) => run_experiment_command(ExperimentKind::FreeEnergyTable, a),
        Command::LnrDistribution(a) => run_experiment_command(ExperimentKind::LnrDistribution, a),
        Command::ApeVsK(a) => run_experiment_command(ExperimentKind::ApeVsK, a),
        Command::Certify(a) => run_experiment_command(ExperimentKind::TheoremCertify, a),
        Command::Estimate(a) => run_estimate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::CertifyFailed(n)) => {
            eprintln!("error: {n} certification checks failed");
            ExitCode::from(4)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
