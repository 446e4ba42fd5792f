use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fracspde::commands::{self, Common, TableOptions};
use fracspde::core::convergence::StudyMode;
use fracspde::verify::Suite;

/// Stochastic time-fractional diffusion driven by fractional Brownian sheet noise.
#[derive(Debug, Parser)]
#[command(name = "fracspde", version)]
struct Cli {
    /// JSON configuration, or a manifest from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides FRACSPDE_SEED and the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Maximum number of concurrent trajectories.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    workers: u64,
    /// Output directory [default: out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Full-size trajectory counts and grids for the built-in studies.
    #[arg(long, global = true)]
    paper_scale: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one trajectory and write the final state.
    Solve,
    /// Monte Carlo convergence study.
    Table {
        mode: Mode,
        /// alpha,H1,H2 for the built-in preset.
        #[arg(long, value_parser = parse_triple)]
        params: Option<(f64, f64, f64)>,
        /// Skip simulation; use errors 2^{-r k} to check the rate pipeline.
        #[arg(long)]
        synthetic_rate: Option<f64>,
    },
    /// Run a self-check suite and print a JSON report.
    Verify {
        /// ml, cq, fem, noise or oracle.
        #[arg(value_parser = str::parse::<Suite>)]
        suite: Suite,
    },
    /// Write one sampled noise field as CSV.
    SampleNoise,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Temporal,
    Spatial,
}

fn parse_triple(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"))).collect::<Result<_, _>>()?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(format!("expected alpha,H1,H2, got {} values", parts.len())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = Common {
        config: cli.config,
        seed: cli.seed,
        workers: cli.workers as usize,
        out: cli.out.clone().unwrap_or_else(|| PathBuf::from("out")),
        paper_scale: cli.paper_scale,
    };
    let result = match cli.command {
        Command::Solve => commands::solve(&common),
        Command::SampleNoise => commands::sample_noise(&common),
        Command::Table { mode, params, synthetic_rate } => {
            let mode = match mode {
                Mode::Temporal => StudyMode::Temporal,
                Mode::Spatial => StudyMode::Spatial,
            };
            commands::table(mode, &common, TableOptions { params, synthetic_rate })
        }
        Command::Verify { suite } => {
            return match commands::verify(suite, cli.out.as_deref()) {
                Ok(report) => {
                    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                    if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            };
        }
    };
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
