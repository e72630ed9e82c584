use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use graphbec::cli_io::{self, Command, RunError};

/// Ideal Bose and hardcore gases on quantum graphs.
///
/// Everything except the flags below lives in the JSON configuration.
/// Exit status is 0 on success, 1 for invalid input and 2 when a numerical
/// method fails; errors are printed to standard error as JSON.
#[derive(Debug, Parser)]
#[command(name = "graphbec", version)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Command to run, overriding `command` in the configuration.
    #[arg(long)]
    command: Option<Command>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn fail(err: &RunError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRAPHBEC_LOG", "warn")).init();
    let args = Args::parse();

    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            return fail(&RunError::Io {
                path: args.config.display().to_string(),
                message: e.to_string(),
            })
        }
    };
    match cli_io::run(&text, args.command, args.out.as_deref()) {
        Ok(output) => {
            if output.command == Command::Validate {
                println!("{}", output.results);
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
