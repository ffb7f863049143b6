//! Text-only LLM agent: prompt construction, reply parsing, episode runner,
//! reflection round and trajectory files.

mod episode;
mod parse;
mod prompt;
mod reflect;
mod trajectory;
mod transport;

pub use episode::{run_episode, run_reflexion, EpisodeOptions, ReflexionOutcome, DEFAULT_STEP_CAP};
pub use parse::{outer_object, parse_action, parse_feedback, ReflectionFeedback};
pub use prompt::{
    build_prompt, step_line, window, Message, PastSteps, PromptConfig, PromptMode, ReasoningEffort,
    ACTION_LIST,
};
pub use reflect::{apply_feedback, build_reflection_prompt, reflect, REFLECTION_DEVELOPER};
pub use trajectory::{ParsedResponse, Reward, Trajectory, TrajectoryHeader, TrajectoryStep};
pub use transport::{
    request_digest, Cassette, CassetteMode, CassetteTransport, ChatRequest, ChatResponse, HttpConfig,
    HttpTransport, ScriptedTransport, Transport, API_KEY_VAR, BASE_URL_VAR,
};

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("cassette has no response for request {0}")]
    CassetteMiss(String),
    #[error("cassette: {0}")]
    Cassette(String),
    #[error("trajectory line {line}: {message}")]
    Trajectory { line: usize, message: String },
    #[error("reflection: {0}")]
    Reflection(String),
    #[error("correlation undefined: {0}")]
    Correlation(String),
    #[error(transparent)]
    Env(#[from] crate::env::EnvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Pearson correlation between completion tokens and episodic reward.
pub fn token_reward_correlation(records: &[(f64, f64)]) -> Result<f64, LlmError> {
    if records.len() < 2 {
        return Err(LlmError::Correlation("need at least two records".into()));
    }
    let n = records.len() as f64;
    let mx = records.iter().map(|r| r.0).sum::<f64>() / n;
    let my = records.iter().map(|r| r.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in records {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(LlmError::Correlation("zero variance".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}
