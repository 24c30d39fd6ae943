//! Command-line driver: every invocation prints exactly one JSON document on
//! stdout and sends all human-readable text to stderr.
//!
//! Exit codes: 0 on success, 1 for data and model errors, 2 for usage
//! errors. `EDFILTER_THREADS` caps the worker pool used by `benchmark`.

pub mod args;
pub mod benchmark;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::path::Path;
use std::time::Instant;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::commands::{execute, resolve};
use crate::config::CommandConfig;
use crate::error::{CliError, Result};
use crate::report::{ErrorReport, RunReport};

pub const THREADS_ENV: &str = "EDFILTER_THREADS";

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("RUST_LOG")
        .target(env_logger::Target::Stderr)
        .try_init();
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got {raw:?}"
            ))
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

/// Runs a configuration and wraps the outcome in a report.
pub fn run_config(config: CommandConfig, benchmark_csv: Option<&Path>) -> Result<RunReport> {
    let pool = thread_pool()?;
    let start = Instant::now();
    let outcome = pool.install(|| execute(&config))?;
    if let (Some(path), Some(report)) = (benchmark_csv, &outcome.benchmark) {
        benchmark::write_csv(report, path)?;
        log::info!("wrote benchmark rows to {}", path.display());
    }
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(RunReport::new(
        config,
        outcome.result,
        outcome.diagnostics,
        runtime_ms,
    ))
}

fn read_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn dispatch(cli: &Cli) -> Result<RunReport> {
    let (config, csv) = match &cli.command {
        Command::Replay(r) => (read_report(&r.report)?.config, None),
        Command::Benchmark(b) => (resolve(&cli.global, &cli.command)?, b.csv.as_deref()),
        other => (resolve(&cli.global, other)?, None),
    };
    log::info!("running {}", config.name());
    let report = run_config(config, csv)?;
    if let Some(out) = &cli.global.out {
        let text = to_json(&report);
        std::fs::write(out, text + "\n").map_err(|e| CliError::io(out, e))?;
    }
    Ok(report)
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn fail(kind: &str, message: String, code: i32) -> i32 {
    eprintln!("edfilter: {message}");
    println!("{}", to_json(&ErrorReport::new(kind, message, code)));
    code
}

/// Entry point shared by the binary and tests; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let message = e.render().to_string();
            eprint!("{message}");
            let first = message.lines().next().unwrap_or("usage error");
            let first = first.strip_prefix("error: ").unwrap_or(first).to_string();
            println!("{}", to_json(&ErrorReport::new("usage", first, 2)));
            return 2;
        }
    };
    init_logging(cli.global.verbose);
    match dispatch(&cli) {
        Ok(report) => {
            println!("{}", to_json(&report));
            0
        }
        Err(e) => fail(e.kind(), e.to_string(), e.exit_code()),
    }
}
