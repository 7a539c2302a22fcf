use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use parex_cli::{exit, init_threads, run, Subcommand};

#[derive(Parser)]
#[command(name = "parex", version, about = "Fourier extension experiments on the paraboloid")]
struct Args {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// JSON config; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set rescale.tol=1e-4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long, default_value = "parex-out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::SCHEMA as u8 } else { 0 });
        }
    };
    init_threads();
    match run(args.subcommand, args.config.as_deref(), &args.sets, &args.out) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            for c in &out.checks {
                // a closed pipe must not turn a finished run into a panic
                let _ = writeln!(stdout, "{}", c.line());
            }
            ExitCode::from(if out.failed() { exit::FAIL } else { exit::OK } as u8)
        }
        Err(e) => {
            eprintln!("parex: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
