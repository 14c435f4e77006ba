use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ppt_core::experiment::{
    config_hash, parse_config, run_batch, status_of, write_outputs, STATUS_FAILURE, STATUS_SCHEMA,
};

/// Point-process transport and concentration experiments.
#[derive(Parser)]
#[command(name = "ppt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a configuration file.
    Run {
        config: PathBuf,
        /// Overrides the master seed of the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: `out_dir` from the config, else `./ppt-out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check a configuration file without running it.
    Validate { config: PathBuf },
}

fn read(path: &PathBuf) -> Result<String, u8> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        STATUS_SCHEMA as u8
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Validate { config } => match read(&config) {
            Err(code) => code,
            Ok(text) => match parse_config(&text) {
                Ok(cfg) => {
                    println!("ok: {} experiments, hash {}", cfg.experiments.len(), config_hash(&text));
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    status_of(&e) as u8
                }
            },
        },
        Command::Run { config, seed, out, jobs } => match read(&config) {
            Err(code) => code,
            Ok(text) => run(&text, seed, out, jobs),
        },
    };
    ExitCode::from(code)
}

fn run(text: &str, seed: Option<u64>, out: Option<PathBuf>, jobs: Option<usize>) -> u8 {
    let mut cfg = match parse_config(text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return status_of(&e) as u8;
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = out
        .or_else(|| cfg.out_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("ppt-out"));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return STATUS_FAILURE as u8;
        }
    };
    let outcome = pool.install(|| run_batch(&cfg, &config_hash(text)));
    match write_outputs(&dir, &outcome) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return STATUS_FAILURE as u8;
        }
    }
    if let Some(list) = outcome.report["experiments"].as_array() {
        for e in list {
            let name = e["name"].as_str().unwrap_or("?");
            match e.get("error") {
                Some(err) => eprintln!("{name}: failed: {} {}", err.as_str().unwrap_or_default(), e["diagnostics"]),
                None => println!("{name}: {} checks, {} violations", e["checks"], e["violations"]),
            }
        }
    }
    outcome.status as u8
}
