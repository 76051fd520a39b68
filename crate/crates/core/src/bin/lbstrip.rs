use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lbstrip::experiment::{preset, run, ExperimentConfig, PRESETS};

#[derive(Parser)]
#[command(name = "lbstrip", version, about = "Monte Carlo transport in a strip with obstacles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or a preset.
    Run {
        /// TOML experiment config.
        config: Option<PathBuf>,
        /// Built-in experiment instead of a config file.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Use the large particle counts of a preset.
        #[arg(long, requires = "preset")]
        full_scale: bool,
        #[arg(long = "particles")]
        particles: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads, 0 for all cores. Never changes the results.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the resolved config of a preset.
    Show {
        preset: String,
        #[arg(long)]
        full_scale: bool,
    },
    /// List preset names.
    Presets,
}

fn resolve_preset(name: &str, full_scale: bool) -> Result<ExperimentConfig, String> {
    preset(name, full_scale).ok_or_else(|| format!("unknown preset {name:?}; known presets: {}", PRESETS.join(", ")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Presets => {
            let mut out = io::stdout().lock();
            for name in PRESETS {
                let _ = writeln!(out, "{name}");
            }
            Ok(())
        }
        Command::Show { preset, full_scale } => resolve_preset(&preset, full_scale).map(|c| {
            let _ = io::stdout().lock().write_all(c.to_toml().as_bytes());
        }),
        Command::Run {
            config,
            preset,
            full_scale,
            particles,
            seed,
            workers,
            output,
        } => {
            let loaded = match (config, preset) {
                (Some(path), None) => ExperimentConfig::load(&path).map_err(|e| e.to_string()),
                (None, Some(name)) => resolve_preset(&name, full_scale),
                _ => Err("give a config file or --preset".to_string()),
            };
            loaded.and_then(|mut cfg| {
                if let Some(n) = particles {
                    cfg.n_particles = n;
                }
                if let Some(s) = seed {
                    cfg.seed = s;
                }
                if let Some(dir) = output {
                    cfg.output_dir = dir;
                }
                let out = run(&cfg, workers).map_err(|e| e.to_string())?;
                let mut stdout = io::stdout().lock();
                let _ = stdout.write_all(out.summary.as_bytes());
                for f in &out.files {
                    let _ = writeln!(stdout, "wrote {}", f.display());
                }
                Ok(())
            })
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
