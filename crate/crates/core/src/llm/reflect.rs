use super::parse::{parse_feedback, ReflectionFeedback};
use super::prompt::{Message, PromptConfig};
use super::trajectory::Trajectory;
use super::transport::{ChatRequest, Transport};
use super::LlmError;

pub const REFLECTION_DEVELOPER: &str = "The potential actions are NOOP, UP, RIGHT, LEFT, DOWN. Analyze the given episode of a game play in detail. Provide suggestions on how to improve future game play. Be as specific in your observations and advise as possible to help the gamer maximize cumulative reward over the entire game.";

/// Developer instructions plus the whole episode as step lines. Actions are
/// written as codes, and records that came from a model reply carry the raw
/// reply as their reasoning.
pub fn build_reflection_prompt(traj: &Trajectory) -> Result<Vec<Message>, LlmError> {
    if traj.steps.is_empty() {
        return Err(LlmError::Reflection("trajectory has no steps".into()));
    }
    let lines: Vec<String> = traj
        .steps
        .iter()
        .map(|s| {
            let reasoning = if s.raw_response.is_empty() {
                String::new()
            } else {
                format!("reasoning: {}, ", s.raw_response)
            };
            format!(
                "Step: {}, {reasoning}action: {}, reward: {}, game objects: {}",
                s.step,
                s.action.code(),
                s.reward,
                s.objects_text
            )
        })
        .collect();
    Ok(vec![Message::developer(REFLECTION_DEVELOPER), Message::user(lines.join("\n"))])
}

/// Asks the model to critique `traj`. Returns the feedback and the raw reply.
pub fn reflect(
    traj: &Trajectory,
    transport: &mut dyn Transport,
    cfg: &PromptConfig,
) -> Result<(ReflectionFeedback, String), LlmError> {
    let req = ChatRequest::new(cfg, build_reflection_prompt(traj)?);
    let resp = transport.complete(&req)?;
    let fb = parse_feedback(&resp.content)?;
    Ok((fb, resp.content))
}

pub fn apply_feedback(cfg: &PromptConfig, fb: &ReflectionFeedback) -> PromptConfig {
    PromptConfig { feedback: Some(fb.to_text()), ..cfg.clone() }
}
