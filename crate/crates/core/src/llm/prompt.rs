use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::trajectory::TrajectoryStep;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PastSteps {
    Last(usize),
    All,
}

impl fmt::Display for PastSteps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PastSteps::Last(n) => write!(f, "{n}"),
            PastSteps::All => f.write_str("all"),
        }
    }
}

impl std::str::FromStr for PastSteps {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(PastSteps::All);
        }
        s.parse().map(PastSteps::Last).map_err(|_| format!("past_steps must be a count or \"all\", got {s:?}"))
    }
}

impl Serialize for PastSteps {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PastSteps::Last(n) => s.serialize_u64(*n as u64),
            PastSteps::All => s.serialize_str("all"),
        }
    }
}

impl<'de> Deserialize<'de> for PastSteps {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            N(usize),
            S(String),
        }
        match Repr::deserialize(d)? {
            Repr::N(n) => Ok(PastSteps::Last(n)),
            Repr::S(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    Expert,
    Explore,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReasoningEffort {
    Low,
    Medium,
    High,
    Default,
}

impl ReasoningEffort {
    pub fn name(self) -> &'static str {
        match self {
            ReasoningEffort::Low => "low",
            ReasoningEffort::Medium => "medium",
            ReasoningEffort::High => "high",
            ReasoningEffort::Default => "default",
        }
    }

    /// Value for the request field; `Default` leaves the field out.
    pub fn request_value(self) -> Option<&'static str> {
        (self != ReasoningEffort::Default).then(|| self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptConfig {
    pub past_steps: PastSteps,
    pub show_rewards: bool,
    pub mode: PromptMode,
    pub reasoning_effort: ReasoningEffort,
    pub model_id: String,
    pub feedback: Option<String>,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            past_steps: PastSteps::Last(0),
            show_rewards: true,
            mode: PromptMode::Expert,
            reasoning_effort: ReasoningEffort::Default,
            model_id: "scripted".into(),
            feedback: None,
        }
    }
}

impl PromptConfig {
    /// Short run label such as `model_high_past_3_rewards_hide_explore`.
    pub fn label(&self) -> String {
        let mut s = format!(
            "{}_{}_past_{}_rewards_{}",
            self.model_id,
            self.reasoning_effort.name(),
            self.past_steps,
            if self.show_rewards { "show" } else { "hide" }
        );
        if self.mode == PromptMode::Explore {
            s.push_str("_explore");
        }
        if self.feedback.is_some() {
            s.push_str("_feedback");
        }
        s
    }

    /// The six base configurations: past steps {0, 3, all} × rewards {shown, hidden}.
    pub fn grid(&self) -> Vec<PromptConfig> {
        let mut out = Vec::new();
        for past in [PastSteps::Last(0), PastSteps::Last(3), PastSteps::All] {
            for show in [true, false] {
                out.push(PromptConfig { past_steps: past, show_rewards: show, ..self.clone() });
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Self { role: "user".into(), content: content.into() }
    }

    pub fn developer(content: impl Into<String>) -> Self {
        Self { role: "developer".into(), content: content.into() }
    }
}

pub const ACTION_LIST: &str = "NOOP, UP, RIGHT, LEFT, DOWN";
const EXPERT_PERSONA: &str =
    "You are an expert gamer and your goal is to choose the best action to beat the game.";
const EXPLORE_PERSONA: &str =
    "You are a curious gamer and your goal is to explore the game environment.";
const COORDINATES: &str = "The game objects are given by their top-left corner's (x, y) positions followed by their width and height in (w, h).";
const DELIBERATE: &str =
    "Think about all possible actions and why each action is or is not the best action to take.";
const OUTPUT_FORMAT: &str = "Output in this JSON format: {game_state: describe the current game state in detail, reasoning: reasoning for choosing an action, action: the chosen action}";

/// `Step: i, action: NAME, reward: r, game objects: ...`, without the reward
/// segment when rewards are hidden.
pub fn step_line(step: &TrajectoryStep, show_rewards: bool) -> String {
    if show_rewards {
        format!(
            "Step: {}, action: {}, reward: {}, game objects: {}",
            step.step,
            step.action.name(),
            step.reward,
            step.objects_text
        )
    } else {
        format!("Step: {}, action: {}, game objects: {}", step.step, step.action.name(), step.objects_text)
    }
}

/// Records shown at step `t`: the current one plus the configured number of
/// predecessors.
pub fn window(history: &[TrajectoryStep], t: usize, past: PastSteps) -> Vec<&TrajectoryStep> {
    let lo = match past {
        PastSteps::Last(n) => t.saturating_sub(n),
        PastSteps::All => 0,
    };
    history.iter().filter(|s| s.step >= lo && s.step <= t).collect()
}

/// The game prompt for step `t` as a single user message.
///
/// Expert prompts separate instruction paragraphs with a blank line; explore
/// prompts put them on consecutive lines.
pub fn build_prompt(history: &[TrajectoryStep], t: usize, cfg: &PromptConfig) -> Vec<Message> {
    let lines: Vec<String> =
        window(history, t, cfg.past_steps).into_iter().map(|s| step_line(s, cfg.show_rewards)).collect();
    let step_info = format!("You are at step {t} and the potential actions you can take are {ACTION_LIST}.");
    let (block, sep) = match cfg.mode {
        PromptMode::Expert => (
            vec![
                EXPERT_PERSONA.to_string(),
                COORDINATES.to_string(),
                format!("{DELIBERATE} {step_info}"),
                OUTPUT_FORMAT.to_string(),
            ],
            "\n\n",
        ),
        PromptMode::Explore => (
            vec![EXPLORE_PERSONA.to_string(), COORDINATES.to_string(), step_info, OUTPUT_FORMAT.to_string()],
            "\n",
        ),
    };
    let mut text = lines.join("\n");
    text.push_str("\n\n");
    text.push_str(&block.join(sep));
    if let Some(fb) = &cfg.feedback {
        text.push_str("\n\n");
        text.push_str(fb);
    }
    vec![Message::user(text)]
}
