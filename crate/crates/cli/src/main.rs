use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use cpnlab_cli::{run_config_text, CliError};

/// Run a cpnlab experiment described by a TOML configuration file.
#[derive(Parser, Debug)]
#[command(name = "cpnlab", version)]
struct Args {
    /// Experiment configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Record output; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Worker threads. Output does not depend on this.
    #[arg(short, long, default_value_t = 1)]
    workers: usize,
    /// Only validate the configuration.
    #[arg(long)]
    check: bool,
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Errors only.
    #[arg(short, long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = match (args.quiet, args.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).target(env_logger::Target::Stderr).init();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Config(_) => 2,
                _ => 1,
            })
        }
    }
}

fn run(args: &Args) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config)?;
    if args.check {
        cpnlab_cli::validate_config(&text).map_err(CliError::Config)?;
        if !args.quiet {
            eprintln!("{}: ok", args.config.display());
        }
        return Ok(());
    }
    let mut sink: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let outcome = run_config_text(&text, args.workers, sink.as_mut())?;
    if !args.quiet {
        for line in &outcome.summary {
            eprintln!("{line}");
        }
    }
    Ok(())
}
