//! "The Brute": depth-first search over cloned simulator states.
//!
//! Search runs as iterative deepening on plan length so that a fixed
//! NOOP-first child order is well defined. Each pass keeps a table of the
//! shallowest depth at which every state key was reached and skips repeats
//! at equal or greater depth.

use std::collections::HashMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, EnvError, GameState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderPolicy {
    Fixed,
    SeededRandom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub target_score: f64,
    pub max_expansions: u64,
    pub max_plan_length: usize,
    pub order_policy: OrderPolicy,
    pub prune_on_life_loss: bool,
    pub dedup: bool,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            target_score: 8.0,
            max_expansions: 1_000_000,
            max_plan_length: 119,
            order_policy: OrderPolicy::Fixed,
            prune_on_life_loss: true,
            dedup: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Points gained over the root by following `plan`.
    pub achieved_score: f64,
    /// Root score plus `achieved_score`.
    pub final_score: f64,
    pub plan: Vec<Action>,
    /// Simulator steps taken, one per cloned child.
    pub nodes_expanded: u64,
    pub wall_time: f64,
    pub budget_exhausted: bool,
    pub target_reached: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("search needs a deterministic environment, but sticky_prob is {0}")]
    Sticky(f64),
    #[error("search budgets must be positive")]
    ZeroBudget,
    #[error("target_score must be at least 1")]
    BadTarget,
    #[error("plan continues past the terminal state at step {0}")]
    PastTerminal(usize),
    #[error(transparent)]
    Env(#[from] EnvError),
}

struct Dfs<'a> {
    cfg: &'a SearchConfig,
    nodes: u64,
    best_gain: f64,
    best_plan: Vec<Action>,
    path: Vec<Action>,
    seen: HashMap<u64, usize>,
    found: bool,
    exhausted: bool,
    cut_off: bool,
}

impl Dfs<'_> {
    fn order(&self, node: &GameState) -> [Action; 5] {
        let mut actions = Action::ALL;
        if self.cfg.order_policy == OrderPolicy::SeededRandom {
            // Keyed on the node so independent runs shuffle identically.
            let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ node.dynamics_hash());
            actions.shuffle(&mut rng);
        }
        actions
    }

    fn visit(&mut self, node: &GameState, depth: usize, limit: usize, gain: f64) {
        if depth == limit {
            self.cut_off = true;
            return;
        }
        for action in self.order(node) {
            if self.nodes >= self.cfg.max_expansions {
                self.exhausted = true;
                return;
            }
            let mut child = node.clone();
            let result = child.step(action).expect("search never steps a terminal node");
            self.nodes += 1;
            if self.cfg.prune_on_life_loss && result.info.life_lost {
                continue;
            }
            let child_gain = gain + result.reward;
            self.path.push(action);
            if child_gain > self.best_gain {
                self.best_gain = child_gain;
                self.best_plan = self.path.clone();
            }
            if child_gain >= self.cfg.target_score {
                self.found = true;
                return;
            }
            let fresh = !self.cfg.dedup || {
                let key = child.dynamics_hash();
                match self.seen.get(&key) {
                    Some(&d) if d <= depth + 1 => false,
                    _ => {
                        self.seen.insert(key, depth + 1);
                        true
                    }
                }
            };
            if fresh && !child.is_terminal() {
                self.visit(&child, depth + 1, limit, child_gain);
                if self.found || self.exhausted {
                    return;
                }
            }
            self.path.pop();
        }
    }
}

fn check(root: &GameState, cfg: &SearchConfig) -> Result<(), SearchError> {
    let p = root.config().sticky_prob;
    if p > 0.0 {
        return Err(SearchError::Sticky(p));
    }
    if cfg.max_expansions == 0 || cfg.max_plan_length == 0 {
        return Err(SearchError::ZeroBudget);
    }
    if !(cfg.target_score >= 1.0) {
        return Err(SearchError::BadTarget);
    }
    Ok(())
}

/// Iterative-deepening depth-first search for a plan that gains `target_score`.
pub fn brute_dfs(root: &GameState, cfg: &SearchConfig) -> Result<SearchResult, SearchError> {
    check(root, cfg)?;
    let started = Instant::now();
    let mut dfs = Dfs {
        cfg,
        nodes: 0,
        best_gain: 0.0,
        best_plan: Vec::new(),
        path: Vec::new(),
        seen: HashMap::new(),
        found: false,
        exhausted: false,
        cut_off: false,
    };
    if !root.is_terminal() {
        for limit in 1..=cfg.max_plan_length {
            dfs.seen.clear();
            dfs.path.clear();
            dfs.cut_off = false;
            dfs.visit(root, 0, limit, 0.0);
            if dfs.found || dfs.exhausted || !dfs.cut_off {
                break;
            }
        }
    }
    let (plan, gain) = if dfs.found {
        (dfs.path, dfs.best_gain)
    } else {
        (dfs.best_plan, dfs.best_gain)
    };
    Ok(SearchResult {
        achieved_score: gain,
        final_score: root.score() + gain,
        plan,
        nodes_expanded: dfs.nodes,
        wall_time: started.elapsed().as_secs_f64(),
        budget_exhausted: dfs.exhausted,
        target_reached: dfs.found,
    })
}

/// Runs `segments` searches back to back, each from the state the previous
/// plan reached, and joins their plans. `cfg.target_score` is the gain asked
/// of each segment. Stops early at the first segment that misses.
pub fn chained_search(root: &GameState, cfg: &SearchConfig, segments: usize) -> Result<SearchResult, SearchError> {
    let started = Instant::now();
    let mut state = root.clone();
    let mut out = SearchResult {
        achieved_score: 0.0,
        final_score: root.score(),
        plan: Vec::new(),
        nodes_expanded: 0,
        wall_time: 0.0,
        budget_exhausted: false,
        target_reached: segments > 0,
    };
    for _ in 0..segments {
        let r = brute_dfs(&state, cfg)?;
        for &a in &r.plan {
            state.step(a)?;
        }
        out.achieved_score += r.achieved_score;
        out.plan.extend(r.plan);
        out.nodes_expanded += r.nodes_expanded;
        out.budget_exhausted |= r.budget_exhausted;
        if !r.target_reached {
            out.target_reached = false;
            break;
        }
        if state.is_terminal() {
            break;
        }
    }
    out.final_score = state.score();
    out.wall_time = started.elapsed().as_secs_f64();
    Ok(out)
}

/// Cumulative reward of executing `plan` from `root`.
pub fn replay_plan(root: &GameState, plan: &[Action]) -> Result<f64, SearchError> {
    let p = root.config().sticky_prob;
    if p > 0.0 {
        return Err(SearchError::Sticky(p));
    }
    replay_states(root.clone(), plan)
}

/// Replays `plan` from `root` with sticky actions forced to `sticky_prob`.
pub fn replay_plan_noisy(
    root: &GameState,
    plan: &[Action],
    sticky_prob: f64,
    seed: u64,
) -> Result<f64, SearchError> {
    replay_states(root.with_sticky_prob(sticky_prob, seed), plan)
}

fn replay_states(mut state: GameState, plan: &[Action]) -> Result<f64, SearchError> {
    let mut total = 0.0;
    for (i, &a) in plan.iter().enumerate() {
        if state.is_terminal() {
            return Err(SearchError::PastTerminal(i));
        }
        total += state.step(a)?.reward;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostPoint {
    pub score: u32,
    pub nodes: u64,
    pub plan_length: usize,
    pub wall_time: f64,
    pub reached: bool,
}

/// One independent search per target score `1..=max_score`.
pub fn cost_curve(
    root: &GameState,
    max_score: u32,
    cfg: &SearchConfig,
) -> Result<Vec<CostPoint>, SearchError> {
    (1..=max_score)
        .map(|score| {
            let run = SearchConfig { target_score: score as f64, ..cfg.clone() };
            let r = brute_dfs(root, &run)?;
            Ok(CostPoint {
                score,
                nodes: r.nodes_expanded,
                plan_length: r.plan.len(),
                wall_time: r.wall_time,
                reached: r.target_reached,
            })
        })
        .collect()
}

/// `score,nodes,wall_time,plan_length` rows with a header.
pub fn cost_curve_csv(points: &[CostPoint]) -> String {
    let mut out = String::from("score,nodes,wall_time,plan_length\n");
    for p in points {
        out.push_str(&format!("{},{},{:.6},{}\n", p.score, p.nodes, p.wall_time, p.plan_length));
    }
    out
}

pub fn plan_json(plan: &[Action]) -> String {
    serde_json::to_string(plan).expect("plan serializes")
}
