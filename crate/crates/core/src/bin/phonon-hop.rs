use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use phonon_hop::harness::commands::{self, SimulateArgs};
use phonon_hop::harness::verify::{self, VerifyOptions};
use phonon_hop::harness::RunConfig;
use phonon_hop::Error;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

/// Phonon hopping between two trapped ions: model, synthetic data and fitting.
#[derive(Parser)]
#[command(name = "phonon-hop", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides `[output] path`. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `[synth] seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Derived trap and model quantities at every sweep point.
    Derive(Common),
    /// Hopping trace for the `[trap]` setting.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Trace length in seconds.
        #[arg(long, default_value_t = 5e-3)]
        t_max: f64,
        /// Number of samples, including both endpoints.
        #[arg(long, default_value_t = 1001)]
        points: usize,
        /// Switch off the Kerr coupling.
        #[arg(long)]
        chi_zero: bool,
    },
    /// Damped-sine fit of a `time_s,p_excited[,sigma]` CSV file.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
    /// Coherence metrics across the sweep, with trend checks.
    Sweep(Common),
    /// Cross-check the model against the numerical oracles.
    Verify(Common),
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: EXIT_INPUT, message: e.to_string() }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure { code: EXIT_INPUT, message: format!("{}: {e}", path.display()) })
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    let text = read(&common.config)?;
    let mut config = RunConfig::parse(&text)
        .map_err(|e| Failure { code: EXIT_INPUT, message: format!("{}: {e}", common.config.display()) })?;
    if let Some(seed) = common.seed {
        config.synth.seed = seed;
    }
    Ok(config)
}

fn emit(common: &Common, config: &RunConfig, text: &str) -> Result<(), Failure> {
    let target = common.out.clone().or_else(|| config.output.path.as_ref().map(PathBuf::from));
    match target {
        Some(path) => fs::write(&path, text)
            .map_err(|e| Failure { code: EXIT_INPUT, message: format!("{}: {e}", path.display()) }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Derive(common) => {
            let config = load(&common)?;
            let records = commands::derive(&config)?;
            emit(&common, &config, &commands::render_derive(&config, &records))
        }
        Command::Simulate { common, t_max, points, chi_zero } => {
            let config = load(&common)?;
            let trace = commands::simulate(&config, &SimulateArgs { t_max, points, chi_zero })?;
            emit(&common, &config, &commands::render_simulate(&config, &trace))
        }
        Command::Fit { common, input } => {
            let config = load(&common)?;
            let csv = read(&input)?;
            let report = commands::fit_csv(&config, &input.display().to_string(), &csv)
                .map_err(|e| Failure { code: EXIT_INPUT, message: format!("{}: {e}", input.display()) })?;
            emit(&common, &config, &commands::render_fit(&report))?;
            if report.converged {
                Ok(())
            } else {
                Err(Failure { code: EXIT_NOT_CONVERGED, message: "fit did not converge".into() })
            }
        }
        Command::Sweep(common) => {
            let config = load(&common)?;
            let result = commands::sweep(&config)?;
            emit(&common, &config, &commands::render_sweep(&config, &result))
        }
        Command::Verify(common) => {
            let config = load(&common)?;
            let report = verify::verify(&config, &VerifyOptions::default())?;
            emit(&common, &config, &verify::render_verify(&config, &report))?;
            if report.all_passed {
                Ok(())
            } else {
                let failed = report.checks.iter().filter(|c| !c.passed).count();
                Err(Failure { code: EXIT_VERIFY_FAILED, message: format!("{failed} check(s) failed") })
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
