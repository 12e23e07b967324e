use std::process::ExitCode;

use clap::Parser;
use quadreg_cli::commands::{run, Cli, EXIT_USAGE};
use quadreg_cli::config::ConfigError;

#[cfg(feature = "parallel")]
fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("QUADREG_THREADS") {
        let n: usize = v.parse().map_err(|_| anyhow::anyhow!("QUADREG_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn init_threads() -> anyhow::Result<()> {
    Ok(())
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return code(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return code(EXIT_USAGE);
    }
    match run(cli) {
        Ok(c) => code(c),
        Err(e) => {
            eprintln!("error: {e:#}");
            code(if e.downcast_ref::<ConfigError>().is_some() { EXIT_USAGE } else { 1 })
        }
    }
}
