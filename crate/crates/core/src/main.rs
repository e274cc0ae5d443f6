use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ltqkd::cli::{parse_config, run};
use ltqkd::coeffs::SinConvention;
use ltqkd::rt::Combine;

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ltqkd",
    version,
    about = "Key-rate scans for loss-tolerant QKD with correlated sources"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep channel loss and write one CSV row per grid point.
    Scan {
        /// Scan configuration (`key = value` lines).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV; overrides `output` in the config. Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use the efficient four-state variant.
        #[arg(long)]
        four_state: bool,
        /// Use the coefficient table exactly as printed (bare sin(δ/2)).
        #[arg(long)]
        sin_printed: bool,
        /// Merge four-state sub-protocol bounds by their maximum.
        #[arg(long)]
        worst_case_combine: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Scan {
            config,
            out,
            four_state,
            sin_printed,
            worst_case_combine,
        } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let mut cfg = match parse_config(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            if four_state {
                cfg.four_state = true;
            }
            if sin_printed {
                cfg.sin_convention = SinConvention::Printed;
            }
            if worst_case_combine {
                cfg.combine = Combine::WorstCase;
            }
            if out.is_some() {
                cfg.output = out;
            }

            match cfg.output.clone() {
                Some(path) => {
                    if let Err(e) = run(&cfg, &path) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(EXIT_IO);
                    }
                }
                None => {
                    let points = ltqkd::keyrate::scan(&cfg);
                    print!("{}", ltqkd::cli::format_csv(&points));
                }
            }
            ExitCode::SUCCESS
        }
    }
}
