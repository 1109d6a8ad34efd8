use std::process::ExitCode;

use clap::Parser;

use grushin_cli::args::Cli;
use grushin_cli::run;

/// Exit status for configuration and runtime errors.
const ERROR_EXIT: u8 = 3;

fn configure_workers() -> Result<(), String> {
    let Ok(raw) = std::env::var("GRUSHIN_WORKERS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("GRUSHIN_WORKERS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { ERROR_EXIT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_workers() {
        eprintln!("error: {e}");
        return ExitCode::from(ERROR_EXIT);
    }
    let outcome = cli.config().and_then(|c| run(cli.command, c));
    match outcome {
        Ok(o) => {
            print!("{}", o.stdout);
            ExitCode::from(o.report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_inconclusive() { 2 } else { ERROR_EXIT })
        }
    }
}
