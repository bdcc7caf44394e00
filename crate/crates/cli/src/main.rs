use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use exofrac_cli::config::keys_help;
use exofrac_cli::{parse_config, run};

/// Fractional heat equation with exterior data: forward solves, penalty and
/// mesh convergence studies, and exterior source identification.
#[derive(Parser, Debug)]
#[command(name = "exofrac", version, after_help = keys_help())]
struct Args {
    /// Configuration file (`key = value` lines).
    config: PathBuf,
    /// Overrides applied after the file, as `--key=value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--key=value")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match parse_config(&args.config, &args.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("exofrac: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&config) {
        Ok(report) => {
            for line in &report.summary {
                println!("{line}");
            }
            println!("outputs in {}", config.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("exofrac: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
