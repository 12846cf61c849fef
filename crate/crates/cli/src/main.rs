//! `latentmap` command-line tool.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use latentmap::runtime::{
    cmd_map, cmd_metrics, cmd_run, cmd_synth, cmd_train, ConfigFile, RuntimeConfig,
};
use latentmap::Result;

#[derive(Debug, Parser)]
#[command(
    name = "latentmap",
    version,
    about = "Gestural latent mapping over OSC"
)]
struct Cli {
    /// TOML preset; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for synthesis, training and metric sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Normalization window half-width in standard deviations.
    #[arg(long, global = true)]
    k: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic skeletal corpus.
    Synth {
        out: PathBuf,
        #[arg(long)]
        duration_s: Option<f64>,
        #[arg(long)]
        frame_rate_hz: Option<f64>,
    },
    /// Train a model, fit latent stats and save a checkpoint.
    Train {
        corpus: PathBuf,
        out: PathBuf,
        /// Defaults to `<out>.history.json`.
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Map a corpus offline to a latent CSV.
    Map {
        checkpoint: PathBuf,
        corpus: PathBuf,
        out: PathBuf,
    },
    /// Estimate consistency, diversity and range of a mapping.
    Metrics {
        checkpoint: PathBuf,
        corpus: PathBuf,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Measure the identity map instead of the checkpoint.
        #[arg(long)]
        identity: bool,
    },
    /// Run the live loop until the replay ends or Ctrl-C.
    Run {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Corpus file to replay.
        #[arg(long, conflicts_with = "osc_in")]
        replay: Option<PathBuf>,
        /// Port for inbound `/sonified/pose` messages.
        #[arg(long)]
        osc_in: Option<u16>,
        /// Destination host:port for latent and onset messages.
        #[arg(long)]
        osc_out: Option<String>,
        #[arg(long)]
        frame_rate_hz: Option<f64>,
        /// CSV of per-frame mapping times.
        #[arg(long)]
        latency_log: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LATENTMAP_LOG", "info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_preset(path: Option<&Path>) -> Result<ConfigFile> {
    path.map_or_else(|| Ok(ConfigFile::default()), ConfigFile::load)
}

fn execute(cli: Cli) -> Result<()> {
    let mut preset = load_preset(cli.config.as_deref())?;
    let k = cli.k.unwrap_or(preset.latent.k);
    match cli.command {
        Command::Synth {
            out,
            duration_s,
            frame_rate_hz,
        } => {
            let mut cfg = preset.synth;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if let Some(d) = duration_s {
                cfg.duration_s = d;
            }
            if let Some(r) = frame_rate_hz {
                cfg.frame_rate_hz = r;
            }
            let corpus = cmd_synth(&cfg, &out)?;
            println!("wrote {} frames to {}", corpus.len(), out.display());
        }
        Command::Train {
            corpus,
            out,
            history,
            epochs,
        } => {
            let mut cfg = preset.train;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            let outcome = cmd_train(&corpus, &cfg, k, &out, history.as_deref())?;
            if let Some(best) = outcome
                .history
                .best_epoch
                .and_then(|i| outcome.history.epochs.get(i))
            {
                println!(
                    "best epoch {} train loss {} validation loss {}",
                    best.epoch,
                    best.train.total,
                    best.validation.map_or(f64::NAN, |v| v.total)
                );
            }
            println!(
                "wrote checkpoint {} (model {}) and history {}",
                out.display(),
                outcome.model.fingerprint(),
                outcome.history_path.display()
            );
        }
        Command::Map {
            checkpoint,
            corpus,
            out,
        } => {
            let rows = cmd_map(&checkpoint, &corpus, &out, cli.k)?;
            println!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::Metrics {
            checkpoint,
            corpus,
            json,
            identity,
        } => {
            let mut cfg = preset.metrics;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let report = cmd_metrics(&checkpoint, &corpus, &cfg, cli.k, identity)?;
            print!("{}", report.to_table());
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&report)?;
                std::fs::write(&path, text)
                    .map_err(|e| latentmap::Error::Io { path, source: e })?;
            }
        }
        Command::Run {
            checkpoint,
            replay,
            osc_in,
            osc_out,
            frame_rate_hz,
            latency_log,
        } => {
            let run = &mut preset.run;
            if checkpoint.is_some() {
                run.checkpoint = checkpoint;
            }
            if replay.is_some() {
                run.replay = replay;
                run.osc_in = None;
            }
            if osc_in.is_some() {
                run.osc_in = osc_in;
                run.replay = None;
            }
            if let Some(out) = osc_out {
                run.osc_out = out;
            }
            if frame_rate_hz.is_some() {
                run.frame_rate_hz = frame_rate_hz;
            }
            if latency_log.is_some() {
                run.latency_log = latency_log;
            }
            if cli.k.is_some() {
                run.k = cli.k;
            }
            let config = RuntimeConfig::from_section(run)?;
            let shutdown = Arc::new(AtomicBool::new(false));
            let flag = Arc::clone(&shutdown);
            if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)) {
                log::warn!("could not install signal handler: {e}");
            }
            let summary = cmd_run(&config, &shutdown)?;
            println!("{}", summary.to_text());
        }
    }
    Ok(())
}
