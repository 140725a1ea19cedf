use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use hkfrac::cli::{self, CliError, Mode};

/// Solve, continue, and certify generalized fractional Cauchy problems.
#[derive(Parser, Debug)]
#[command(name = "hkfrac", version, about)]
struct Args {
    /// Path to the key=value problem config.
    #[arg(long)]
    config: PathBuf,

    /// Trajectory CSV path; overrides the config's `output`.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Run mode override: solve | continue | certify | operator.
    #[arg(long)]
    mode: Option<String>,

    /// Suppress the report echo on stdout.
    #[arg(long)]
    quiet: bool,
}

fn run(args: &Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("reading {:?}: {e}", args.config)))?;
    let mut cfg = cli::parse_config(&text)?;
    if let Some(out) = &args.output {
        cfg.output = Some(out.clone());
    }
    if let Some(mode) = &args.mode {
        cfg.mode = match mode.as_str() {
            "solve" => Mode::Solve,
            "continue" => Mode::Continue,
            "certify" => Mode::Certify,
            "operator" => Mode::Operator,
            other => {
                return Err(CliError::Config(format!(
                    "--mode must be solve|continue|certify|operator, got `{other}`"
                )))
            }
        };
    }
    let summary = cli::run(&cfg)?;
    if !args.quiet {
        print!("{}", summary.report);
        println!("csv: {}", summary.csv_path.display());
        println!("report: {}", summary.report_path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hkfrac: error kind={} exit={} msg=\"{e}\"", e.kind(), e.exit_code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
