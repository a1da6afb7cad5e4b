use beltrami_core::cli::{self, Command, JobConfig};
use clap::Parser;
use std::path::PathBuf;

/// Spectral Beltrami / anisotropic Poisson solver, one batch job per run.
#[derive(Parser)]
#[command(name = "beltrami", disable_help_subcommand = true)]
struct Args {
    /// solve-beltrami | solve-semilinear | solve-poisson | map | verify | export
    command: String,

    /// Path to the JSON job config.
    #[arg(long)]
    config: PathBuf,

    /// Output directory (overrides the config's "outputs").
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed override for all randomized elements.
    #[arg(long)]
    seed: Option<u64>,

    /// Export format (export command only).
    #[arg(long)]
    format: Option<String>,
}

fn main() {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{}", e);
            std::process::exit(1);
        }
    };
    let code = match run(&args) {
        Ok(()) => 0,
        Err(e) => {
            cli::report_error(&e);
            cli::exit_code(&e)
        }
    };
    std::process::exit(code);
}

fn run(args: &Args) -> beltrami_core::Result<()> {
    let command = Command::parse(&args.command)?;
    if command == Command::Export {
        let fmt = args.format.as_deref().unwrap_or("csv");
        if fmt != "csv" {
            return Err(beltrami_core::Error::Config(format!(
                "unsupported export format \"{}\"",
                fmt
            )));
        }
    }
    let config = JobConfig::load(&args.config)?;
    cli::run(command, &config, args.out.as_deref(), args.seed)
}
