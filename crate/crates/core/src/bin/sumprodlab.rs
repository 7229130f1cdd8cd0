use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use sumprodlab::lab::{run_experiment, ExperimentConfig, ExperimentKind};

/// Run one experiment from a JSON config and write its artifacts.
#[derive(Parser, Debug)]
#[command(name = "sumprodlab", version)]
struct Cli {
    /// nonconc | energy | growth | flatten | decay | sigma | schedule | complex-decay | oracle-suite
    experiment: String,
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's `out`, else `out/<experiment>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("sumprodlab: config error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let Some(kind) = ExperimentKind::parse(&cli.experiment) else {
        return config_error(format!("unknown experiment '{}'", cli.experiment));
    };
    if let Some(k) = cli.threads {
        if k == 0 {
            return config_error("--threads must be positive");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("sumprodlab: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let mut cfg = match std::fs::read_to_string(&cli.config) {
        Ok(text) => match serde_json::from_str::<ExperimentConfig>(&text) {
            Ok(c) => c,
            Err(e) => return config_error(format!("{}: {e}", cli.config.display())),
        },
        Err(e) => return config_error(format!("cannot read {}: {e}", cli.config.display())),
    };
    if cfg.kind != kind {
        return config_error(format!("config describes '{}', not '{}'", cfg.kind.name(), kind.name()));
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    let out = cli
        .out
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    match run_experiment(&cfg, &out) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("sumprodlab: {} reported failures, see {}", kind.name(), out.display());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("sumprodlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
