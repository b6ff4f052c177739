use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use decaylab_cli::{run_preset, validate_config, RunOptions, PRESETS};

#[derive(Parser)]
#[command(name = "decaylab", version, about = "Decay-rate laboratory for compressible Hall-MHD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the preset named in a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Treat rate-tolerance failures as hard failures.
        #[arg(long)]
        strict: bool,
        /// Write a binary snapshot every N recorded observations.
        #[arg(long, value_name = "N")]
        snapshot_every: Option<usize>,
    },
    /// Check a config file and print its normalized form.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    ListPresets,
}

fn init_threads() {
    if let Ok(v) = std::env::var("DECAYLAB_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring DECAYLAB_THREADS={v:?}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    match cli.command {
        Command::ListPresets => {
            for (name, about) in PRESETS {
                println!("{name:<24}{about}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match validate_config(&config) {
            Ok((cfg, warnings)) => {
                for w in warnings {
                    eprintln!("warning: {w}");
                }
                print!("{}", cfg.to_toml());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(2)
            }
        },
        Command::Run {
            config,
            out,
            seed,
            strict,
            snapshot_every,
        } => {
            let (mut cfg, warnings) = match validate_config(&config) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            if let Some(o) = out {
                cfg.output = o;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            let opts = RunOptions {
                strict,
                snapshot_every,
                warnings,
            };
            match run_preset(&cfg, &opts) {
                Ok(summary) => {
                    for f in &summary.hard_failures {
                        eprintln!("FAIL {f}");
                    }
                    for f in &summary.rate_failures {
                        eprintln!("{} {f}", if strict { "FAIL" } else { "warn" });
                    }
                    if let Some(f) = &summary.failure {
                        eprintln!("error: {f}");
                    }
                    println!("{}: wrote {} artifact(s) to {}", summary.preset, summary.artifacts.len(), cfg.output.display());
                    ExitCode::from(summary.exit_code as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
