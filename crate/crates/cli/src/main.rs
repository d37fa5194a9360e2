//! `onmodel` — experiment runner for the lattice engine.
//!
//! ```text
//! onmodel run <config.json> [--seed N] [--out DIR] [--dry-run] [--threads N]
//! ```
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid configuration.

mod config;
mod experiments;
mod output;

use clap::{Parser, Subcommand};
use config::Config;
use output::RunDir;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "onmodel", version, about = "Spin and loop O(n) model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON configuration.
    Run {
        config: PathBuf,
        /// Overrides the configuration seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the configuration output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Validate the configuration without computing anything.
        #[arg(long)]
        dry_run: bool,
        /// Worker threads for parallel chains (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run { config, seed, out, dry_run, threads } = cli.command;
    let text = match std::fs::read_to_string(&config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("invalid configuration: cannot read {}: {e}", config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cfg = match Config::from_str(&text, seed, out.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if threads == Some(0) {
        eprintln!("invalid configuration: --threads must be at least 1");
        return ExitCode::from(EXIT_CONFIG);
    }
    if dry_run {
        println!("configuration ok: kind={} seed={} out={}", cfg.raw.kind, cfg.seed, cfg.out.display());
        return ExitCode::SUCCESS;
    }
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot configure the thread pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    match execute(&cfg, threads) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("run failed: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn execute(cfg: &Config, threads: Option<usize>) -> anyhow::Result<()> {
    let dir = RunDir::create(&cfg.out)?;
    let started = output::unix_time();
    let mut meta = json!({
        "tool": "onmodel",
        "version": env!("CARGO_PKG_VERSION"),
        "git_hash": output::git_hash(),
        "seed": cfg.seed,
        "rng": onmodel::rng::RNG_ALGORITHM,
        "threads": threads,
        "config": cfg.raw,
        "conventions": {
            "wolff_reflection": "uniformly random hyperplane through the origin",
            "vortex_orientation": "clockwise around each plaquette, angle differences folded to [−π, π)",
        },
        "started_unix": started,
        "status": "running",
    });
    dir.write_json("metadata.json", &meta)?;
    dir.log(&format!("kind {} seed {}", cfg.raw.kind, cfg.seed));
    let result = experiments::run(cfg, &dir);
    meta["finished_unix"] = json!(output::unix_time());
    match result {
        Ok(summary) => {
            dir.write_json("summary.json", &summary)?;
            meta["status"] = json!("ok");
            dir.write_json("metadata.json", &meta)?;
            dir.log("done");
            Ok(())
        }
        Err(e) => {
            dir.log(&format!("error: {e:#}"));
            meta["status"] = json!("failed");
            meta["error"] = json!(format!("{e:#}"));
            dir.write_json("metadata.json", &meta)?;
            Err(e)
        }
    }
}
