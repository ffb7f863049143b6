use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use frogger_core::dqn::TrainConfig;
use frogger_core::env::EnvConfig;
use frogger_core::llm::PromptConfig;
use frogger_core::search::SearchConfig;
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Brute,
    Llm,
    Dqn,
    DqnDemo,
    Analyze,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BruteSection {
    /// Also search every lower score and write the cost curve.
    pub curve: bool,
    /// Searches chained back to back, each for `search.target_score` more points.
    pub segments: usize,
}

impl Default for BruteSection {
    fn default() -> Self {
        Self { curve: true, segments: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportKind {
    Scripted,
    Http,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSection {
    pub prompt: PromptConfig,
    pub transport: TransportKind,
    /// Replies served in order by the scripted transport.
    pub responses: Vec<String>,
    /// Scripted reply to reflection requests.
    pub critique: Option<String>,
    pub step_cap: usize,
    pub grid: bool,
    pub reflection: bool,
    pub max_in_flight: usize,
    pub max_retries: u32,
}

impl Default for LlmSection {
    fn default() -> Self {
        Self {
            prompt: PromptConfig::default(),
            transport: TransportKind::Scripted,
            responses: Vec::new(),
            critique: None,
            step_cap: frogger_core::llm::DEFAULT_STEP_CAP,
            grid: false,
            reflection: false,
            max_in_flight: 4,
            max_retries: 5,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoSection {
    pub glob: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub threshold: f64,
    /// Fraction of episodes in the final window.
    pub window: f64,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self { threshold: 5.0, window: 0.1 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    kind: Option<Kind>,
    env: toml::Table,
    search: SearchConfig,
    brute: BruteSection,
    train: TrainConfig,
    demos: DemoSection,
    llm: LlmSection,
    report: ReportSection,
    output_dir: Option<PathBuf>,
    seeds: Option<Vec<u64>>,
    workers: usize,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            kind: None,
            env: toml::Table::new(),
            search: SearchConfig::default(),
            brute: BruteSection::default(),
            train: TrainConfig::default(),
            demos: DemoSection::default(),
            llm: LlmSection::default(),
            report: ReportSection::default(),
            output_dir: None,
            seeds: None,
            workers: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    pub env: EnvConfig,
    pub search: SearchConfig,
    pub brute: BruteSection,
    pub train: TrainConfig,
    pub demos: DemoSection,
    pub llm: LlmSection,
    pub report: ReportSection,
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub workers: usize,
}

/// `env.preset` picks the base layout (`default` or `mini`); every other key
/// overrides a field of it.
fn build_env(mut table: toml::Table) -> Result<EnvConfig> {
    let base = match table.remove("preset") {
        None => EnvConfig::default(),
        Some(toml::Value::String(p)) if p == "default" => EnvConfig::default(),
        Some(toml::Value::String(p)) if p == "mini" => EnvConfig::mini(),
        Some(other) => bail!("unknown env preset {other}"),
    };
    let mut merged = toml::Table::try_from(&base).context("encoding base env")?;
    merged.extend(table);
    let cfg: EnvConfig = merged.try_into().context("invalid [env] table")?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text)?;
        let seeds = raw.seeds.unwrap_or_else(|| vec![0]);
        if seeds.is_empty() {
            bail!("seeds must not be empty");
        }
        if raw.brute.segments == 0 {
            bail!("brute.segments must be at least 1");
        }
        raw.train.validate()?;
        Ok(Self {
            kind: raw.kind,
            env: build_env(raw.env)?,
            search: raw.search,
            brute: raw.brute,
            train: raw.train,
            demos: raw.demos,
            llm: raw.llm,
            report: raw.report,
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("runs")),
            seeds,
            workers: raw.workers.max(1),
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Self::from_toml_str(""),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Self::from_toml_str(&text).with_context(|| format!("config {}", p.display()))
            }
        }
    }
}
