use std::fmt;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::prompt::PromptConfig;
use super::LlmError;
use crate::env::{Action, EnvConfig, GameState};
use crate::obs::{format_objects, objects};

/// A reward as it appears in step logs. The record before any action carries
/// the integer `0`; rewards returned by the environment print as floats
/// (`0.0`, `1.0`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reward {
    Int(i64),
    Float(f64),
}

impl Reward {
    pub fn value(self) -> f64 {
        match self {
            Reward::Int(v) => v as f64,
            Reward::Float(v) => v,
        }
    }
}

impl Default for Reward {
    fn default() -> Self {
        Reward::Int(0)
    }
}

impl fmt::Display for Reward {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reward::Int(v) => write!(f, "{v}"),
            Reward::Float(v) if v.is_finite() && v.fract() == 0.0 => write!(f, "{v:.1}"),
            Reward::Float(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParsedResponse {
    pub game_state: String,
    pub reasoning: String,
    pub action: String,
}

/// One log record: the observation at `step` together with the action and
/// reward that led to it, and the model output that chose that action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryStep {
    pub step: usize,
    pub action: Action,
    pub reward: Reward,
    pub objects_text: String,
    pub raw_response: String,
    pub parsed: ParsedResponse,
    pub completion_tokens: u64,
    pub latency: f64,
}

impl Default for TrajectoryStep {
    fn default() -> Self {
        Self {
            step: 0,
            action: Action::Noop,
            reward: Reward::Int(0),
            objects_text: String::new(),
            raw_response: String::new(),
            parsed: ParsedResponse::default(),
            completion_tokens: 0,
            latency: 0.0,
        }
    }
}

impl TrajectoryStep {
    /// The record for a state before any action was taken.
    pub fn initial(state: &GameState) -> Self {
        Self { objects_text: format_objects(&objects(state)), ..Self::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryHeader {
    pub kind: String,
    pub config: PromptConfig,
    pub env_seed: u64,
    pub aborted: bool,
    pub parse_failures: u64,
    pub fallbacks: u64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub header: TrajectoryHeader,
    /// Records `0..=n` for an episode of `n` actions.
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn new(config: PromptConfig, env_seed: u64) -> Self {
        Self {
            header: TrajectoryHeader { kind: "header".into(), config, env_seed, ..TrajectoryHeader::default() },
            steps: Vec::new(),
        }
    }

    /// Number of actions taken.
    pub fn actions(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().skip(1).map(|s| s.reward.value()).sum()
    }

    pub fn completion_tokens(&self) -> u64 {
        self.steps.iter().map(|s| s.completion_tokens).sum()
    }

    /// Median completion tokens over steps that made a request.
    pub fn median_completion_tokens(&self) -> f64 {
        let mut v: Vec<u64> = self.steps.iter().skip(1).map(|s| s.completion_tokens).collect();
        if v.is_empty() {
            return 0.0;
        }
        v.sort_unstable();
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m] as f64
        } else {
            (v[m - 1] + v[m]) as f64 / 2.0
        }
    }

    /// JSONL: the header record, then one line per step.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("step serializes"));
            out.push('\n');
        }
        out
    }

    /// Parses [`Trajectory::to_jsonl`] output. The header is optional; errors
    /// name the 1-based line.
    pub fn from_jsonl(text: &str) -> Result<Self, LlmError> {
        let mut traj = Trajectory::new(PromptConfig::default(), 0);
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |e: serde_json::Error| LlmError::Trajectory { line: i + 1, message: e.to_string() };
            let v: serde_json::Value = serde_json::from_str(line).map_err(bad)?;
            if v.get("kind").and_then(|k| k.as_str()) == Some("header") {
                if i != 0 {
                    return Err(LlmError::Trajectory { line: i + 1, message: "header after steps".into() });
                }
                traj.header = serde_json::from_value(v).map_err(bad)?;
            } else {
                if v.get("step").is_none() {
                    return Err(LlmError::Trajectory { line: i + 1, message: "missing step field".into() });
                }
                traj.steps.push(serde_json::from_value(v).map_err(bad)?);
            }
        }
        Ok(traj)
    }

    pub fn save(&self, path: &Path) -> Result<(), LlmError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_jsonl().as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_jsonl(&text).map_err(|e| match e {
            LlmError::Trajectory { line, message } => {
                LlmError::Trajectory { line, message: format!("{}: {message}", path.display()) }
            }
            other => other,
        })
    }

    /// Records a plan executed from the configured start, for use as a
    /// demonstration.
    pub fn from_plan(env_cfg: &EnvConfig, plan: &[Action]) -> Result<Self, LlmError> {
        let mut state = GameState::new(env_cfg.clone())?;
        let mut traj = Trajectory::new(PromptConfig { model_id: "brute".into(), ..PromptConfig::default() }, env_cfg.seed);
        traj.steps.push(TrajectoryStep::initial(&state));
        for (i, &a) in plan.iter().enumerate() {
            let r = state.step(a)?;
            traj.steps.push(TrajectoryStep {
                step: i + 1,
                action: a,
                reward: Reward::Float(r.reward),
                objects_text: format_objects(&objects(&state)),
                ..TrajectoryStep::default()
            });
            if r.done {
                break;
            }
        }
        Ok(traj)
    }
}
