use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ringtoa::cli::{run, validate, RunOptions};

#[derive(Parser)]
#[command(name = "ringtoa", version, about = "Time-of-arrival experiments on a ring")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a config without running it
    Validate { config: PathBuf },
    /// Run an experiment and write its outputs
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// worker threads; falls back to RINGTOA_THREADS
        #[arg(long, env = "RINGTOA_THREADS")]
        threads: Option<usize>,
        #[arg(long)]
        gnuplot_stub: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Validate { config } => match validate(&config) {
            Ok(diag) => {
                for d in &diag.0 {
                    eprintln!("{d}");
                }
                if diag.has_errors() {
                    return ExitCode::from(2);
                }
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Cmd::Run { config, out, threads, gnuplot_stub } => {
            if let Some(n) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: thread pool: {e}");
                    return ExitCode::from(3);
                }
            }
            match run(&config, &RunOptions { out_dir: out.clone(), gnuplot_stub }) {
                Ok(m) => {
                    for f in &m.files {
                        println!("{}", out.join(f).display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
    }
}

fn fail(e: ringtoa::Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
