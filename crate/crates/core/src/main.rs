use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use slowlab::harness::{exit_code, run_command, Command, Format};

/// Slow-manifold and adiabatic-invariant lab for nearly-periodic systems.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run_command(cli.command, &cli.config, &cli.out_dir, cli.format);
    match &result {
        Ok(o) => {
            for line in &o.lines {
                println!("{line}");
            }
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            println!("{}", if o.passed { "PASS" } else { "FAIL" });
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
