use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use snoise::config::{ExperimentConfig, Overrides};
use snoise::{run_scenario, Scenario};

#[derive(Parser)]
#[command(name = "snoise", version, about = "Shot-noise simulation and validation scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths, evaluate S_t on the grid and decompose it.
    Simulate(RunArgs),
    /// Compare the quadrature characteristic function with Monte Carlo.
    CfCompare(RunArgs),
    /// Classify the kernel by the multiplicative Cauchy test.
    MarkovTest(RunArgs),
    /// Validate the self-exciting intensity and its Riccati transform.
    AffineValidate(RunArgs),
    /// Check the density process and the law it induces.
    MeasureCheck(RunArgs),
    /// Check the drift condition and the martingale property of the stock.
    DriftCheck(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, env = "SNOISE_OUT", default_value = "snoise-out")]
    out: PathBuf,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, args) = match cli.command {
        Command::Simulate(a) => (Scenario::Simulate, a),
        Command::CfCompare(a) => (Scenario::CfCompare, a),
        Command::MarkovTest(a) => (Scenario::MarkovTest, a),
        Command::AffineValidate(a) => (Scenario::AffineValidate, a),
        Command::MeasureCheck(a) => (Scenario::MeasureCheck, a),
        Command::DriftCheck(a) => (Scenario::DriftCheck, a),
    };
    let overrides = Overrides {
        n_paths: args.paths,
        seed: args.seed,
    };
    let result = ExperimentConfig::from_file(&args.config, overrides).and_then(|cfg| {
        for w in cfg.warnings() {
            eprintln!("warning: {w}");
        }
        run_scenario(scenario, &cfg, &args.out)
    });
    match result {
        Ok(outcome) => {
            for c in &outcome.checks {
                println!(
                    "{} {} value={:e} limit={:e}",
                    if c.informational {
                        "INFO"
                    } else if c.pass {
                        "PASS"
                    } else {
                        "FAIL"
                    },
                    c.name,
                    c.value,
                    c.limit
                );
            }
            println!("report: {}", outcome.report.display());
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            ExitCode::from(e.exit_code())
        }
    }
}
