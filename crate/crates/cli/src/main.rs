//! `frogger` command-line entry point.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use frogger_core::llm::LlmError;

mod analyze;
mod brute;
mod config;
mod llm;
mod pool;
mod train;

use config::{ExperimentConfig, Kind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Limits = 2,
    Transport = 3,
}

/// Output root; each command writes into named subdirectories.
pub struct Outputs {
    root: PathBuf,
}

impl Outputs {
    pub fn dir(&self, name: &str) -> Result<PathBuf> {
        let d = self.root.join(name);
        std::fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
        Ok(d)
    }
}

#[derive(Parser)]
#[command(name = "frogger", version, about = "Frogger agent workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    /// Loads the config; a declared `kind` must be one of `accepted`.
    fn load(&self, accepted: &[Kind]) -> Result<(ExperimentConfig, Outputs)> {
        let mut cfg = ExperimentConfig::load(self.config.as_deref())?;
        if let Some(k) = cfg.kind {
            if !accepted.is_empty() && !accepted.contains(&k) {
                bail!("config kind {k:?} does not fit this subcommand");
            }
        }
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
        }
        if let Some(w) = self.workers {
            cfg.workers = w.max(1);
        }
        let root = self.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        Ok((cfg, Outputs { root }))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Depth-first search for a target score.
    Brute {
        #[command(flatten)]
        common: Common,
    },
    /// Play LLM episodes through the configured transport.
    Llm {
        #[command(flatten)]
        common: Common,
        /// Replay this cassette if it exists, otherwise record into it.
        #[arg(long)]
        cassette: Option<PathBuf>,
        /// Run every base prompt configuration.
        #[arg(long)]
        grid: bool,
        /// Follow each episode with a reflection and a second episode.
        #[arg(long)]
        reflection: bool,
    },
    /// Train DQN agents, optionally preloading demonstration trajectories.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        demos: Option<String>,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Compare run A against baseline B.
    Report {
        #[command(flatten)]
        common: Common,
        /// metrics.csv, or a directory containing one.
        run_a: PathBuf,
        run_b: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        /// Fraction of episodes in the final window.
        #[arg(long)]
        window: Option<f64>,
    },
    /// Load trajectories into a replay buffer and dump it.
    Ingest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        demos: String,
    },
    /// Completion tokens against episodic reward over recorded trajectories.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(required = true)]
        inputs: Vec<String>,
    },
}

fn dispatch(cmd: Command) -> Result<Exit> {
    match cmd {
        Command::Brute { common } => {
            let (cfg, out) = common.load(&[Kind::Brute])?;
            brute::run(&cfg, &out)
        }
        Command::Llm { common, cassette, grid, reflection } => {
            let (cfg, out) = common.load(&[Kind::Llm])?;
            llm::run(&cfg, &llm::LlmArgs { cassette: cassette.as_deref(), grid, reflection }, &out)
        }
        Command::Train { common, demos, episodes } => {
            let (mut cfg, out) = common.load(&[Kind::Dqn, Kind::DqnDemo])?;
            if let Some(e) = episodes {
                cfg.train.episodes = e;
            }
            cfg.train.validate()?;
            if cfg.kind == Some(Kind::DqnDemo) && demos.is_none() && cfg.demos.glob.is_none() {
                bail!("dqn_demo needs demonstrations (--demos or demos.glob)");
            }
            train::run(&cfg, demos.as_deref(), &out)
        }
        Command::Report { common, run_a, run_b, threshold, window } => {
            let (mut cfg, _) = common.load(&[])?;
            if let Some(t) = threshold {
                cfg.report.threshold = t;
            }
            if let Some(w) = window {
                cfg.report.window = w;
            }
            train::report(&cfg, &run_a, &run_b)
        }
        Command::Ingest { common, demos } => {
            let (cfg, out) = common.load(&[])?;
            train::ingest(&cfg, &demos, &out)
        }
        Command::Analyze { common, inputs } => {
            let (_, out) = common.load(&[Kind::Analyze])?;
            analyze::run(&inputs, &out)
        }
    }
}

fn is_transport(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(c.downcast_ref::<LlmError>(), Some(LlmError::Transport(_) | LlmError::CassetteMiss(_)))
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(exit) => ExitCode::from(exit as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_transport(&e) { Exit::Transport as u8 } else { 1 })
        }
    }
}
