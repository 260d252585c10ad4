use std::io;
use std::process::ExitCode;

use clap::Parser;
use fracops::cli::{execute, Cli, RunConfig, EXIT_USAGE};

fn main() -> ExitCode {
    if let Some(k) = std::env::var("FRACOPS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if k > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    let code = match RunConfig::from_cli(cli) {
        Ok(cfg) => execute(&cfg, &mut io::stdout().lock(), &mut io::stderr().lock()),
        Err(e) => {
            eprintln!("fracops: {e}");
            fracops::cli::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
