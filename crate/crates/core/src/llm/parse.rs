use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::trajectory::ParsedResponse;
use super::LlmError;
use crate::env::Action;

/// Text from the first `{` to the last `}`, which skips code fences and
/// surrounding prose.
pub fn outer_object(raw: &str) -> Option<&str> {
    let start = raw.find('{')?;
    let end = raw.rfind('}')?;
    (end > start).then(|| &raw[start..=end])
}

fn field_re(name: &str) -> Regex {
    Regex::new(&format!(r#"(?is)"{name}"\s*:\s*"((?:[^"\\]|\\.)*)""#)).unwrap()
}

fn action_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"(?i)"action"\s*:\s*"?\s*([A-Za-z]+|\d+)"#).unwrap())
}

fn lookup<'a>(obj: &'a serde_json::Map<String, serde_json::Value>, key: &str) -> Option<&'a serde_json::Value> {
    obj.iter().find(|(k, _)| k.trim().eq_ignore_ascii_case(key)).map(|(_, v)| v)
}

fn value_text(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn to_action(text: &str) -> Result<Action, LlmError> {
    text.parse::<Action>().map_err(|_| LlmError::Parse(format!("unknown action {text:?}")))
}

/// Reads the chosen action from a model reply.
///
/// The outermost JSON object is parsed strictly when possible; replies that
/// are not valid JSON fall back to locating the `"action"` field directly.
pub fn parse_action(raw: &str) -> Result<(Action, ParsedResponse), LlmError> {
    let body = outer_object(raw).ok_or_else(|| LlmError::Parse("no JSON object in response".into()))?;
    if let Ok(serde_json::Value::Object(obj)) = serde_json::from_str::<serde_json::Value>(body) {
        let action = lookup(&obj, "action").ok_or_else(|| LlmError::Parse("no action field".into()))?;
        let text = value_text(action);
        let parsed = ParsedResponse {
            game_state: lookup(&obj, "game_state").map(value_text).unwrap_or_default(),
            reasoning: lookup(&obj, "reasoning").map(value_text).unwrap_or_default(),
            action: text.clone(),
        };
        return Ok((to_action(text.trim())?, parsed));
    }
    let caps = action_re()
        .captures_iter(body)
        .last()
        .ok_or_else(|| LlmError::Parse("no action field".into()))?;
    let text = caps[1].to_string();
    let grab = |name: &str| {
        field_re(name).captures(body).map(|c| c[1].to_string()).unwrap_or_default()
    };
    let parsed = ParsedResponse { game_state: grab("game_state"), reasoning: grab("reasoning"), action: text.clone() };
    Ok((to_action(&text)?, parsed))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReflectionFeedback {
    pub reasoning: String,
    pub observations: Vec<String>,
    pub advices: Vec<String>,
}

impl ReflectionFeedback {
    /// Prompt text carrying the observations and advice.
    pub fn to_text(&self) -> String {
        let mut out = String::from("Feedback from a previous episode.\nObservations:");
        for o in &self.observations {
            out.push_str("\n- ");
            out.push_str(o);
        }
        out.push_str("\nAdvices:");
        for a in &self.advices {
            out.push_str("\n- ");
            out.push_str(a);
        }
        out
    }

    /// Inverse of [`ReflectionFeedback::to_text`]; the reasoning is not carried.
    pub fn from_text(text: &str) -> Result<Self, LlmError> {
        let bad = || LlmError::Parse("malformed feedback text".into());
        let rest = text.strip_prefix("Feedback from a previous episode.\nObservations:").ok_or_else(bad)?;
        let (obs, adv) = rest.split_once("\nAdvices:").ok_or_else(bad)?;
        let items = |s: &str| -> Vec<String> {
            s.split("\n- ").skip(1).map(str::to_string).collect()
        };
        Ok(Self { reasoning: String::new(), observations: items(obs), advices: items(adv) })
    }
}

/// Parses a reflection reply into reasoning, observations and advice.
pub fn parse_feedback(raw: &str) -> Result<ReflectionFeedback, LlmError> {
    let body = outer_object(raw).ok_or_else(|| LlmError::Parse("no JSON object in reflection".into()))?;
    let fb: ReflectionFeedback = serde_json::from_str(body).map_err(|e| LlmError::Parse(e.to_string()))?;
    if fb.advices.is_empty() {
        return Err(LlmError::Parse("reflection contains no advice".into()));
    }
    Ok(fb)
}
