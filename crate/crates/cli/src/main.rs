use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use multibid_core::augmented::Prediction;
use multibid_core::centroid::{CentroidConfig, SamplerConfig};
use multibid_core::harness::bench::{bench_sweep, sized_centroid_config, write_csv, BenchGrid};
use multibid_core::harness::generate::{generate, perturbed_prediction, GenConfig, Mode, Style};
use multibid_core::harness::report::{solve, Algorithm, SolveOptions};
use multibid_core::reference::solve_reference;
use multibid_core::{BidVector, Error, Instance};

#[derive(Parser)]
#[command(name = "multibid", version, about = "Query-efficient bid optimization across ad platforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance as JSON.
    Gen {
        #[arg(long)]
        platforms: usize,
        #[arg(long)]
        bids: usize,
        #[arg(long, env = "MULTIBID_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Strict)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = StyleArg::Slack)]
        budget_style: StyleArg,
        #[arg(long, value_enum, default_value_t = StyleArg::Binding)]
        ros_style: StyleArg,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance and print a JSON report.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_parser = parse_algorithm)]
        algo: Algorithm,
        /// JSON array of m bids, or `auto:ETA` to perturb the reference optimum by up to ETA.
        #[arg(long)]
        prediction: Option<String>,
        /// Centroid iterations; sized from the instance when omitted.
        #[arg(long)]
        iters: Option<usize>,
        /// Hit-and-run samples per centroid estimate (burn-in is half this).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, env = "MULTIBID_SEED", default_value_t = 0)]
        seed: u64,
        /// Write the query ledger as JSON lines.
        #[arg(long)]
        ledger: Option<PathBuf>,
    },
    /// Run a benchmark grid and write CSV rows.
    Bench {
        /// For example `m=1,2,4;n=8,32;algo=mom,bmom;eta=0,4,16`.
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, env = "MULTIBID_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate an instance file and print its reference solution.
    Verify { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strict,
    Smooth,
}

#[derive(Clone, Copy, ValueEnum)]
enum StyleArg {
    Slack,
    Binding,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Strict => Mode::Strict,
            ModeArg::Smooth => Mode::Smooth,
        }
    }
}

impl From<StyleArg> for Style {
    fn from(s: StyleArg) -> Self {
        match s {
            StyleArg::Slack => Style::Slack,
            StyleArg::Binding => Style::Binding,
        }
    }
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn read_instance(path: &Path) -> Result<Instance, Error> {
    let text = fs::read_to_string(path)?;
    Instance::from_json(&text)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn prediction_for(spec: &str, instance: &Instance, seed: u64) -> Result<(Prediction, Option<f64>), Error> {
    if let Some(eta) = spec.strip_prefix("auto:") {
        let eta: f64 = eta
            .parse()
            .ok()
            .filter(|e: &f64| e.is_finite() && *e >= 0.0)
            .ok_or_else(|| Error::Validation(format!("bad prediction error level '{eta}'")))?;
        let opt = solve_reference(instance).optimum;
        return Ok((perturbed_prediction(&opt, eta, instance.bids(), seed), Some(eta)));
    }
    let bids: Vec<f64> = serde_json::from_str(&fs::read_to_string(spec)?)?;
    let strategy = BidVector::new(bids);
    strategy.validate(instance.num_platforms(), instance.bids())?;
    Ok((Prediction::new(strategy), None))
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Gen { platforms, bids, seed, mode, budget_style, ros_style, out } => {
            let config =
                GenConfig::new(platforms, bids, seed).mode(mode.into()).styles(budget_style.into(), ros_style.into());
            let mut json = generate(&config)?.to_json()?;
            json.push('\n');
            emit(out.as_deref(), json.as_bytes())
        }
        Command::Solve { instance, algo, prediction, iters, samples, seed, ledger } => {
            let instance = read_instance(&instance)?;
            let mut options = SolveOptions::default();
            if let Some(spec) = prediction {
                let (p, eta) = prediction_for(&spec, &instance, seed)?;
                options.prediction = Some(p);
                options.eta = eta;
            }
            if algo == Algorithm::Centroid {
                options.centroid = match iters {
                    Some(iterations) => CentroidConfig { iterations, sampler: SamplerConfig::default(), seed },
                    None => sized_centroid_config(&instance, solve_reference(&instance).value, seed),
                };
                if let Some(s) = samples {
                    if s == 0 {
                        return Err(Error::Validation("--samples must be positive".into()));
                    }
                    options.centroid.sampler = SamplerConfig { samples: s, burn_in: s / 2 };
                }
            }
            let (report, queries) = solve(&instance, algo, &options)?;
            if let Some(path) = ledger {
                let mut buf = Vec::new();
                queries.write_jsonl(&mut buf)?;
                fs::write(path, buf)?;
            }
            let mut json = serde_json::to_string_pretty(&report)?;
            json.push('\n');
            emit(None, json.as_bytes())
        }
        Command::Bench { grid, trials, seed, out } => {
            if trials == 0 {
                return Err(Error::Validation("--trials must be positive".into()));
            }
            let grid = BenchGrid::parse(&grid, trials)?;
            let rows = bench_sweep(&grid, seed)?;
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf)?;
            emit(out.as_deref(), &buf)
        }
        Command::Verify { file } => {
            let instance = read_instance(&file)?;
            let mut json = serde_json::to_string_pretty(&solve_reference(&instance))?;
            json.push('\n');
            emit(None, json.as_bytes())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}

/// 2 for broken internal guarantees, 1 for anything the caller can fix.
fn exit_status(e: &Error) -> u8 {
    match e {
        Error::Invariant(_) | Error::DegenerateBody(_) => 2,
        _ => 1,
    }
}
