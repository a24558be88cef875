//! `landscape`: command-line driver for the landscape-core pipelines.
//!
//! Exit status 0 on success, 1 when a computation fails (the error tag is
//! written to `error.json` in the output directory), 2 on a configuration
//! error.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use commands::{Failure, Outcome};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "landscape", version, about = "Landscape-function localization on lattice operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for `ensemble`; other subcommands run on one thread.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Replaces every seed in the config (ensemble base seed, generator
    /// seeds).
    #[arg(long, global = true)]
    seed_base: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve for the landscape and write u, 1/u and V.
    Landscape,
    /// Smallest global eigenpairs, optionally also per well.
    Eigs,
    /// Well partition at the configured threshold.
    Wells,
    /// Agmon distance from a source set.
    Agmon,
    /// Full verification suite.
    Verify,
    /// One random 1D realization.
    Realization,
    /// Ensemble of 1D realizations over several sizes.
    Ensemble,
    /// 2D Bernoulli localization demo.
    Demo2d,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    tag: &'a str,
    message: String,
}

fn write_error(out: &Path, tag: &str, message: String) {
    let report = ErrorReport { tag, message };
    if std::fs::create_dir_all(out).is_ok() {
        let _ = landscape_core::output::write_json(&out.join("error.json"), &report);
    }
}

fn dispatch(cmd: Command, cfg: &RunConfig, out: &Path, threads: Option<usize>) -> Outcome {
    let single = || -> Outcome {
        let pool = rayon_pool()?;
        pool.install(|| match cmd {
            Command::Landscape => commands::landscape(cfg, out),
            Command::Eigs => commands::eigs(cfg, out),
            Command::Wells => commands::wells(cfg, out),
            Command::Agmon => commands::agmon(cfg, out),
            Command::Verify => commands::verify(cfg, out),
            Command::Realization => commands::realization(cfg, out),
            Command::Demo2d => commands::demo2d(cfg, out),
            Command::Ensemble => unreachable!(),
        })
    };
    match cmd {
        Command::Ensemble => commands::ensemble(cfg, out, threads),
        _ => single(),
    }
}

fn rayon_pool() -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Failure::Compute(landscape_core::Error::InvalidParameter(e.to_string())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config_path) = cli.config.as_deref() else {
        eprintln!("error: --config is required");
        return ExitCode::from(2);
    };
    let loaded = match config::load(config_path) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("config error: {e}");
            if let Some(out) = &cli.out {
                write_error(out, "ConfigParse", e.to_string());
            }
            return ExitCode::from(2);
        }
    };
    let mut cfg = loaded.config;
    if let Some(base) = cli.seed_base {
        cfg.apply_seed_base(base);
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return ExitCode::from(1);
    }
    let _ = std::fs::remove_file(out.join("error.json"));
    if let Err(e) = std::fs::write(out.join("config.toml"), &loaded.text) {
        eprintln!("error: cannot write to {}: {e}", out.display());
        return ExitCode::from(1);
    }
    match dispatch(cli.command, &cfg, &out, cli.threads) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            write_error(&out, "ConfigParse", e.to_string());
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error [{}]: {e}", e.tag());
            write_error(&out, e.tag(), e.to_string());
            ExitCode::from(1)
        }
    }
}

