use super::parse::{parse_action, ReflectionFeedback};
use super::prompt::{build_prompt, PromptConfig};
use super::reflect::{apply_feedback, reflect};
use super::trajectory::{Reward, Trajectory, TrajectoryStep};
use super::transport::{ChatRequest, Transport};
use super::LlmError;
use crate::env::{Action, EnvConfig, GameState};
use crate::obs::{format_objects, objects};

pub const DEFAULT_STEP_CAP: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EpisodeOptions {
    pub step_cap: usize,
    /// Re-ask once before falling back to NOOP.
    pub retry_parse: bool,
}

impl Default for EpisodeOptions {
    fn default() -> Self {
        Self { step_cap: DEFAULT_STEP_CAP, retry_parse: true }
    }
}

/// Plays one episode with the model choosing every action.
///
/// A reply that does not parse is requested again once; if that also fails
/// the step plays NOOP. `parse_failures` counts steps whose first reply
/// failed and `fallbacks` counts steps that ended on NOOP this way. A
/// transport error ends the episode early with `aborted` set; the partial
/// trajectory is still returned.
pub fn run_episode(
    env_cfg: &EnvConfig,
    cfg: &PromptConfig,
    transport: &mut dyn Transport,
    opts: EpisodeOptions,
) -> Result<Trajectory, LlmError> {
    let mut state = GameState::new(env_cfg.clone())?;
    let mut traj = Trajectory::new(cfg.clone(), env_cfg.seed);
    traj.steps.push(TrajectoryStep::initial(&state));
    let mut t = 0;
    while !state.is_terminal() && t < opts.step_cap {
        let req = ChatRequest::new(cfg, build_prompt(&traj.steps, t, cfg));
        let mut record = TrajectoryStep { step: t + 1, ..TrajectoryStep::default() };
        let tries = if opts.retry_parse { 2 } else { 1 };
        let mut chosen = None;
        for attempt in 0..tries {
            let resp = match transport.complete(&req) {
                Ok(r) => r,
                Err(e) => {
                    log::error!("episode aborted at step {t}: {e}");
                    traj.header.aborted = true;
                    traj.header.error = Some(e.to_string());
                    return Ok(traj);
                }
            };
            record.completion_tokens += resp.completion_tokens;
            record.latency += resp.latency;
            record.raw_response = resp.content;
            match parse_action(&record.raw_response) {
                Ok((a, parsed)) => {
                    record.parsed = parsed;
                    chosen = Some(a);
                    break;
                }
                Err(e) => {
                    log::debug!("step {t}: {e}");
                    if attempt == 0 {
                        traj.header.parse_failures += 1;
                    }
                }
            }
        }
        let action = chosen.unwrap_or_else(|| {
            traj.header.fallbacks += 1;
            Action::Noop
        });
        let r = state.step(action)?;
        record.action = action;
        record.reward = Reward::Float(r.reward);
        record.objects_text = format_objects(&objects(&state));
        traj.steps.push(record);
        t += 1;
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReflexionOutcome {
    pub first: Trajectory,
    pub feedback: ReflectionFeedback,
    pub reflection_raw: String,
    pub second: Trajectory,
}

/// Episode, critique of that episode, then a second episode with the
/// critique appended to every prompt. Aborted first rounds are not reflected
/// on.
pub fn run_reflexion(
    env_cfg: &EnvConfig,
    cfg: &PromptConfig,
    transport: &mut dyn Transport,
    opts: EpisodeOptions,
) -> Result<ReflexionOutcome, LlmError> {
    let first = run_episode(env_cfg, cfg, transport, opts)?;
    if first.header.aborted {
        return Err(LlmError::Transport(first.header.error.clone().unwrap_or_default()));
    }
    let (feedback, reflection_raw) = reflect(&first, transport, cfg)?;
    let second = run_episode(env_cfg, &apply_feedback(cfg, &feedback), transport, opts)?;
    Ok(ReflexionOutcome { first, feedback, reflection_raw, second })
}
