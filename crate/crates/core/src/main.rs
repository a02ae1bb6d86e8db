//! Experiment-runner CLI: `oscnet run|validate|export`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use oscnet::config::{load_config, validate_config_file};
use oscnet::runner::{export_figure_data, run_experiment, Figure, RunOptions};

#[derive(Parser)]
#[command(
    name = "oscnet",
    about = "Deterministic coupled-oscillator synchronization simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded experiment campaign from a config file.
    Run {
        /// TOML experiment configuration.
        config: PathBuf,
        /// Override the output root (also: OSCNET_OUTPUT_ROOT).
        #[arg(long)]
        output_root: Option<PathBuf>,
        /// Override the parallel worker count (also: OSCNET_WORKERS).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Validate a config file without running anything.
    Validate {
        /// TOML experiment configuration.
        config: PathBuf,
    },
    /// Export plot-ready figure data from a recorded seed directory.
    Export {
        /// Seed output directory produced by `run`.
        record_dir: PathBuf,
        /// Which figure data to export.
        #[arg(long, value_parser = parse_figure)]
        figure: Figure,
        /// Destination CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_figure(s: &str) -> Result<Figure, String> {
    s.parse().map_err(|e: oscnet::Error| e.to_string())
}

fn fail(err: &oscnet::Error) -> ExitCode {
    // Machine-readable error envelope on stderr.
    let payload = serde_json::json!({
        "error": err.kind(),
        "message": err.to_string(),
    });
    eprintln!("{payload}");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            output_root,
            workers,
        } => {
            let loaded = match load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let opts = RunOptions {
                output_root: output_root
                    .or_else(|| std::env::var_os("OSCNET_OUTPUT_ROOT").map(PathBuf::from)),
                workers: workers.or_else(|| {
                    std::env::var("OSCNET_WORKERS")
                        .ok()
                        .and_then(|w| w.parse().ok())
                }),
                config_dir: config.parent().map(PathBuf::from),
            };
            match run_experiment(&loaded, &opts) {
                Ok(report) => {
                    println!(
                        "campaign complete: {} seed(s) under {}",
                        report.seeds.len(),
                        report.output_root.display()
                    );
                    for seed in &report.seeds {
                        let regime = seed
                            .regime
                            .as_ref()
                            .map(|r| format!("{:?}", r.regime))
                            .unwrap_or_else(|| "-".into());
                        let sync = seed
                            .sync_time
                            .map(|t| format!("{t:.4}"))
                            .unwrap_or_else(|| "-".into());
                        println!(
                            "  seed {:>4}  final_r {:.4}  regime {}  sync_time {}  -> {}",
                            seed.seed, seed.final_r, regime, sync, seed.dir
                        );
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Validate { config } => match validate_config_file(&config) {
            Ok(validation) if validation.is_ok() => {
                println!("ok");
                ExitCode::SUCCESS
            }
            Ok(validation) => {
                for v in &validation.violations {
                    println!("violation: {v}");
                }
                ExitCode::FAILURE
            }
            Err(e) => fail(&e),
        },
        Command::Export {
            record_dir,
            figure,
            out,
        } => match export_figure_data(&record_dir, figure, &out) {
            Ok(()) => {
                println!("wrote {}", out.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
    }
}
