use std::path::Path;

use anyhow::{bail, Result};
use frogger_core::env::EnvConfig;
use frogger_core::llm::{
    run_episode, run_reflexion, Cassette, CassetteTransport, EpisodeOptions, HttpConfig, HttpTransport,
    PromptConfig, ScriptedTransport, Trajectory, Transport,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, TransportKind};
use crate::pool::run_pool;
use crate::{Exit, Outputs};

#[derive(Serialize)]
struct SummaryRow {
    config: String,
    seed: u64,
    round: u8,
    episodic_reward: f64,
    steps: usize,
    completion_tokens_median: f64,
    parse_failures: u64,
    aborted: bool,
}

impl SummaryRow {
    fn new(t: &Trajectory, seed: u64, round: u8) -> Self {
        Self {
            config: t.header.config.label(),
            seed,
            round,
            episodic_reward: t.total_reward(),
            steps: t.actions(),
            completion_tokens_median: t.median_completion_tokens(),
            parse_failures: t.header.parse_failures,
            aborted: t.header.aborted,
        }
    }
}

pub struct LlmArgs<'a> {
    pub cassette: Option<&'a Path>,
    pub grid: bool,
    pub reflection: bool,
}

/// The configured transport, built fresh for each job.
fn base_transport(cfg: &ExperimentConfig, http: &Option<HttpTransport>) -> Box<dyn Transport + Send> {
    match cfg.llm.transport {
        TransportKind::Scripted => {
            let mut t = ScriptedTransport::new(cfg.llm.responses.clone());
            if let Some(c) = &cfg.llm.critique {
                t = t.with_critique(c.clone());
            }
            Box::new(t)
        }
        TransportKind::Http => Box::new(http.clone().expect("http transport built")),
    }
}

struct JobOutput {
    rows: Vec<SummaryRow>,
    recorded: Option<Cassette>,
}

/// One episode (or reflexion pair) per seed and prompt configuration.
/// With `--cassette`, an existing file is replayed and a missing one is
/// recorded from the configured transport.
pub fn run(cfg: &ExperimentConfig, args: &LlmArgs, out: &Outputs) -> Result<Exit> {
    if cfg.llm.transport == TransportKind::Scripted && cfg.llm.responses.is_empty() {
        let replaying = args.cassette.is_some_and(|p| p.exists());
        if !replaying {
            bail!("scripted transport needs llm.responses");
        }
    }
    let replay = match args.cassette {
        Some(p) if p.exists() => Some(Cassette::load(p)?),
        _ => None,
    };
    let http = (cfg.llm.transport == TransportKind::Http && replay.is_none()).then(|| {
        let mut h = HttpConfig::from_env();
        h.max_in_flight = cfg.llm.max_in_flight;
        h.max_retries = cfg.llm.max_retries;
        HttpTransport::new(h)
    });
    let reflection = args.reflection || cfg.llm.reflection;
    let prompts: Vec<PromptConfig> =
        if args.grid || cfg.llm.grid { cfg.llm.prompt.grid() } else { vec![cfg.llm.prompt.clone()] };
    let jobs: Vec<(PromptConfig, u64)> =
        prompts.iter().flat_map(|p| cfg.seeds.iter().map(move |&s| (p.clone(), s))).collect();
    let opts = EpisodeOptions { step_cap: cfg.llm.step_cap, ..EpisodeOptions::default() };
    let dir = out.dir("llm")?;

    let results = run_pool(jobs.len(), cfg.workers, |i| -> Result<JobOutput> {
        let (prompt, seed) = &jobs[i];
        let env = EnvConfig { seed: *seed, ..cfg.env.clone() };
        let name = format!("{}_seed{seed}", prompt.label());
        let mut transport = match &replay {
            Some(c) => CassetteTransport::replay(c.clone()).with_scope(name.clone()),
            None => CassetteTransport::record(base_transport(cfg, &http)).with_scope(name.clone()),
        };
        let mut rows = Vec::new();
        if reflection {
            let o = run_reflexion(&env, prompt, &mut transport, opts)?;
            o.first.save(&dir.join(format!("{name}.jsonl")))?;
            o.second.save(&dir.join(format!("{name}_round2.jsonl")))?;
            std::fs::write(dir.join(format!("{name}_feedback.json")), serde_json::to_string_pretty(&o.feedback)?)?;
            rows.push(SummaryRow::new(&o.first, *seed, 1));
            rows.push(SummaryRow::new(&o.second, *seed, 2));
        } else {
            let t = run_episode(&env, prompt, &mut transport, opts)?;
            t.save(&dir.join(format!("{name}.jsonl")))?;
            rows.push(SummaryRow::new(&t, *seed, 1));
        }
        let recorded = (replay.is_none()).then(|| transport.cassette.clone());
        Ok(JobOutput { rows, recorded })
    });

    let mut csv_out = csv::Writer::from_path(dir.join("summary.csv"))?;
    let mut merged = Cassette::default();
    let mut exit = Exit::Success;
    for r in results {
        let r = r?;
        for row in &r.rows {
            if row.aborted {
                exit = Exit::Transport;
            }
            csv_out.serialize(row)?;
        }
        if let Some(c) = r.recorded {
            merged.merge(c);
        }
    }
    csv_out.flush()?;
    print!("{}", std::fs::read_to_string(dir.join("summary.csv"))?);
    if let (Some(path), None) = (args.cassette, &replay) {
        merged.save(path)?;
        log::info!("recorded {} replies to {}", merged.len(), path.display());
    }
    Ok(exit)
}
