use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ope_bench::bench::{
    emit_report, load_report, run_experiment_with, write_report, Experiment, ExperimentConfig, ReportFormat,
    RunOptions, SimulatedEstimates,
};
use ope_bench::dataset::{generate_logged_dataset, load_dataset, save_dataset};
use ope_bench::estimators::{run_all_estimators, OracleModel};
use ope_bench::mdp::NamedPolicy;
use ope_bench::OpeError;

const EXIT_USAGE: u8 = 1;
const EXIT_ESTIMATOR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "ope-bench",
    version,
    about = "Off-policy evaluation benchmark on synthetic MDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a logged dataset under the config's behavior policy.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Dataset destination (JSONL).
        #[arg(long)]
        out: PathBuf,
        /// Also write the candidate suite (behavior last) as JSON.
        #[arg(long)]
        policies_out: Option<PathBuf>,
    },
    /// Run every estimator on a saved dataset.
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
        /// JSON array of `{id, policy}` objects.
        #[arg(long)]
        policies: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Estimate table destination (CSV); stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a multi-seed experiment and write `report.json` into `--out`.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run seeds on a single thread.
        #[arg(long)]
        serial: bool,
    },
    /// Re-emit a benchmark report as JSON or tidy CSV.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "json")]
        format: String,
        /// Destination file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(OpeError),
    Estimator(String),
}

impl<E: Into<OpeError>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.into())
    }
}

fn load_config(path: &Path) -> Result<(ExperimentConfig, RunOptions), OpeError> {
    let config = ExperimentConfig::load(path)?;
    let opts = RunOptions {
        parallel: true,
        base_dir: path.parent().map(Path::to_path_buf),
    };
    Ok((config, opts))
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            config,
            seed,
            out,
            policies_out,
        } => {
            let (config, opts) = load_config(&config)?;
            let exp = Experiment::prepare(&config, &opts)?;
            let ds = generate_logged_dataset(
                &exp.env,
                &exp.behavior,
                config.n_trajectories,
                &exp.dataset_stream(seed),
            )?;
            save_dataset(&ds, &out)?;
            if let Some(path) = policies_out {
                let mut w = BufWriter::new(File::create(path)?);
                serde_json::to_writer_pretty(&mut w, &exp.candidates)?;
                w.flush()?;
            }
            log::info!("wrote {} trajectories to {}", ds.len(), out.display());
        }
        Command::Evaluate {
            dataset,
            policies,
            config,
            out,
        } => {
            let (config, opts) = load_config(&config)?;
            let ds = load_dataset(&dataset)?;
            let text = std::fs::read_to_string(&policies)?;
            let candidates: Vec<NamedPolicy> = serde_json::from_str(&text)?;
            let exp = Experiment::prepare(&config, &opts)?;
            let oracle = OracleModel {
                mdp: &exp.mdp,
                behavior: &exp.behavior.policy,
            };
            let table = run_all_estimators(&ds, &candidates, &config.estimators, Some(oracle))
                .map_err(|e| Failure::Estimator(e.to_string()))?;
            table.write_csv(output(out.as_deref())?)?;
        }
        Command::Benchmark { config, out, serial } => {
            let (config, mut opts) = load_config(&config)?;
            opts.parallel = !serial;
            let report = run_experiment_with(&config, &SimulatedEstimates, &opts)?;
            std::fs::create_dir_all(&out)?;
            emit_report(&report, "json", out.join("report.json"))?;
            if !report.is_complete() {
                return Err(Failure::Estimator(format!(
                    "{} of {} seeds failed: {:?}; partial report written",
                    report.failed_seeds.len(),
                    report.seeds.len(),
                    report.failed_seeds
                )));
            }
        }
        Command::Report { input, format, out } => {
            let format: ReportFormat = format.parse()?;
            let path = if input.is_dir() {
                input.join("report.json")
            } else {
                input
            };
            let report = load_report(path)?;
            write_report(&report, format, output(out.as_deref())?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Estimator(msg)) => {
            eprintln!("estimator failure: {msg}");
            ExitCode::from(EXIT_ESTIMATOR)
        }
    }
}
