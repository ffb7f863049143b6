//! Prioritized experience replay with demonstration preloading.
//!
//! Priorities live in two parallel segment trees: a sum tree for
//! proportional sampling and a min tree for choosing the eviction victim when
//! the buffer is full.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dqn::{EncoderMode, Observer, TrainConfig};
use crate::env::Action;
use crate::llm::TrajectoryStep;
use crate::obs::parse_objects;

pub const DEFAULT_CAPACITY: usize = 8000;
pub const DEFAULT_ALPHA: f64 = 0.6;
pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEMO_PRIORITY: f64 = 5.0;
const MIN_EPSILON: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("TD error must be finite, got {0}")]
    NonFinite(f64),
    #[error("alpha must be non-negative, got {0}")]
    BadAlpha(f64),
    #[error("priority must be positive and finite, got {0}")]
    BadPriority(f64),
    #[error("feature length {got} does not match buffer length {want}")]
    Length { got: usize, want: usize },
    #[error("buffer is empty")]
    Empty,
    #[error("batch size must be at least 1")]
    ZeroBatch,
    #[error("{demos} demonstrations do not fit in capacity {capacity}")]
    Overflow { demos: usize, capacity: usize },
    #[error("{0}")]
    Config(String),
    #[error("line {line}: {message}")]
    Ingest { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `(|delta| + epsilon)^alpha`, with epsilon floored at 1e-12.
pub fn priority(delta: f64, epsilon: f64, alpha: f64) -> Result<f64, ReplayError> {
    if !delta.is_finite() {
        return Err(ReplayError::NonFinite(delta));
    }
    if !(alpha >= 0.0) {
        return Err(ReplayError::BadAlpha(alpha));
    }
    Ok((delta.abs() + epsilon.max(MIN_EPSILON)).powf(alpha))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f32>,
    pub action: Action,
    pub reward: f64,
    pub next_state: Vec<f32>,
    pub done: bool,
    pub is_demo: bool,
}

/// Handle to a stored item. `serial` tells a live item apart from a later
/// occupant of the same slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ReplayIndex {
    pub slot: usize,
    pub serial: u64,
}

#[derive(Clone, Debug)]
pub struct Batch {
    pub indices: Vec<ReplayIndex>,
    pub transitions: Vec<Transition>,
    pub weights: Vec<f64>,
}

/// Linear ramp from `start` to `end` over `steps` steps, then constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    pub start: f64,
    pub end: f64,
    pub steps: u64,
}

impl BetaSchedule {
    pub fn value(&self, step: u64) -> f64 {
        if self.steps == 0 {
            return self.end;
        }
        let f = (step as f64 / self.steps as f64).min(1.0);
        self.start + (self.end - self.start) * f
    }
}

impl Default for BetaSchedule {
    fn default() -> Self {
        Self { start: 0.4, end: 1.0, steps: 50_000 }
    }
}

#[derive(Clone, Debug)]
struct Tree {
    size: usize,
    sum: Vec<f64>,
    min: Vec<f64>,
}

impl Tree {
    fn new(capacity: usize) -> Self {
        let size = capacity.next_power_of_two();
        Self { size, sum: vec![0.0; 2 * size], min: vec![f64::INFINITY; 2 * size] }
    }

    fn set(&mut self, slot: usize, p: Option<f64>) {
        let mut i = slot + self.size;
        self.sum[i] = p.unwrap_or(0.0);
        self.min[i] = p.unwrap_or(f64::INFINITY);
        while i > 1 {
            i /= 2;
            self.sum[i] = self.sum[2 * i] + self.sum[2 * i + 1];
            self.min[i] = self.min[2 * i].min(self.min[2 * i + 1]);
        }
    }

    fn total(&self) -> f64 {
        self.sum[1]
    }

    fn leaf(&self, slot: usize) -> f64 {
        self.sum[slot + self.size]
    }

    /// Slot holding the smallest priority; ties go to the lowest slot.
    fn argmin(&self) -> usize {
        let mut i = 1;
        while i < self.size {
            i = if self.min[2 * i] <= self.min[2 * i + 1] { 2 * i } else { 2 * i + 1 };
        }
        i - self.size
    }

    /// Slot whose cumulative priority interval contains `mass`.
    fn find(&self, mut mass: f64) -> usize {
        let mut i = 1;
        while i < self.size {
            let left = self.sum[2 * i];
            if mass < left || self.sum[2 * i + 1] <= 0.0 {
                i *= 2;
            } else {
                mass -= left;
                i = 2 * i + 1;
            }
        }
        i - self.size
    }
}

#[derive(Clone, Debug)]
struct Entry {
    t: Transition,
    serial: u64,
}

#[derive(Clone, Debug)]
pub struct PrioritizedBuffer {
    capacity: usize,
    feature_len: usize,
    alpha: f64,
    epsilon: f64,
    tree: Tree,
    items: Vec<Option<Entry>>,
    len: usize,
    max_priority: f64,
    next_serial: u64,
    stale_updates: u64,
    demo_count: usize,
}

impl PrioritizedBuffer {
    pub fn new(capacity: usize, feature_len: usize) -> Result<Self, ReplayError> {
        Self::with_params(capacity, feature_len, DEFAULT_ALPHA, DEFAULT_EPSILON)
    }

    pub fn with_params(
        capacity: usize,
        feature_len: usize,
        alpha: f64,
        epsilon: f64,
    ) -> Result<Self, ReplayError> {
        if capacity == 0 {
            return Err(ReplayError::Config("capacity must be positive".into()));
        }
        if !(alpha >= 0.0) {
            return Err(ReplayError::BadAlpha(alpha));
        }
        if !(epsilon > 0.0) {
            return Err(ReplayError::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self {
            capacity,
            feature_len,
            alpha,
            epsilon,
            tree: Tree::new(capacity),
            items: vec![None; capacity],
            len: 0,
            max_priority: 1.0,
            next_serial: 0,
            stale_updates: 0,
            demo_count: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn feature_len(&self) -> usize {
        self.feature_len
    }

    pub fn occupancy(&self) -> f64 {
        self.len as f64 / self.capacity as f64
    }

    pub fn demo_count(&self) -> usize {
        self.demo_count
    }

    /// Share of stored items that are demonstrations.
    pub fn demo_fraction(&self) -> f64 {
        if self.len == 0 {
            0.0
        } else {
            self.demo_count as f64 / self.len as f64
        }
    }

    pub fn stale_updates(&self) -> u64 {
        self.stale_updates
    }

    pub fn total_priority(&self) -> f64 {
        self.tree.total()
    }

    pub fn leaf_priorities(&self) -> Vec<f64> {
        (0..self.capacity)
            .filter(|&s| self.items[s].is_some())
            .map(|s| self.tree.leaf(s))
            .collect()
    }

    pub fn priority_of(&self, idx: ReplayIndex) -> Option<f64> {
        self.live(idx).then(|| self.tree.leaf(idx.slot))
    }

    pub fn get(&self, idx: ReplayIndex) -> Option<&Transition> {
        self.items.get(idx.slot)?.as_ref().filter(|e| e.serial == idx.serial).map(|e| &e.t)
    }

    fn live(&self, idx: ReplayIndex) -> bool {
        self.get(idx).is_some()
    }

    /// Live items in slot order.
    pub fn iter(&self) -> impl Iterator<Item = (ReplayIndex, f64, &Transition)> {
        self.items.iter().enumerate().filter_map(|(slot, e)| {
            e.as_ref()
                .map(|e| (ReplayIndex { slot, serial: e.serial }, self.tree.leaf(slot), &e.t))
        })
    }

    /// Inserts `t` at `priority`, or at the current maximum priority when
    /// `None`. A full buffer first evicts its minimum-priority item.
    pub fn push(&mut self, t: Transition, priority: Option<f64>) -> Result<ReplayIndex, ReplayError> {
        for got in [t.state.len(), t.next_state.len()] {
            if got != self.feature_len {
                return Err(ReplayError::Length { got, want: self.feature_len });
            }
        }
        let p = priority.unwrap_or(self.max_priority);
        if !(p > 0.0 && p.is_finite()) {
            return Err(ReplayError::BadPriority(p));
        }
        if !t.reward.is_finite() {
            return Err(ReplayError::NonFinite(t.reward));
        }
        let slot = if self.len < self.capacity {
            self.items.iter().position(Option::is_none).expect("free slot below capacity")
        } else {
            let victim = self.tree.argmin();
            if self.items[victim].as_ref().is_some_and(|e| e.t.is_demo) {
                self.demo_count -= 1;
            }
            self.len -= 1;
            victim
        };
        if t.is_demo {
            self.demo_count += 1;
        }
        let serial = self.next_serial;
        self.next_serial += 1;
        self.items[slot] = Some(Entry { t, serial });
        self.tree.set(slot, Some(p));
        self.len += 1;
        self.max_priority = self.max_priority.max(p);
        Ok(ReplayIndex { slot, serial })
    }

    /// Stratified proportional sampling: one draw per equal-mass segment.
    /// Weights are `(N * P(i))^-beta`, divided by the batch maximum.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        batch: usize,
        beta: f64,
        rng: &mut R,
    ) -> Result<Batch, ReplayError> {
        if self.len == 0 {
            return Err(ReplayError::Empty);
        }
        if batch == 0 {
            return Err(ReplayError::ZeroBatch);
        }
        let total = self.tree.total();
        let segment = total / batch as f64;
        let n = self.len as f64;
        let mut indices = Vec::with_capacity(batch);
        let mut transitions = Vec::with_capacity(batch);
        let mut weights = Vec::with_capacity(batch);
        for i in 0..batch {
            let u: f64 = rng.gen();
            let mass = ((i as f64 + u) * segment).min(total * (1.0 - f64::EPSILON));
            let mut slot = self.tree.find(mass);
            if self.items[slot].is_none() {
                // Rounding at an interval edge; fall back to the nearest live slot.
                slot = self.items.iter().rposition(Option::is_some).expect("non-empty buffer");
            }
            let e = self.items[slot].as_ref().unwrap();
            let prob = self.tree.leaf(slot) / total;
            indices.push(ReplayIndex { slot, serial: e.serial });
            transitions.push(e.t.clone());
            weights.push((n * prob).powf(-beta));
        }
        let max_w = weights.iter().cloned().fold(f64::MIN, f64::max);
        for w in &mut weights {
            *w /= max_w;
        }
        Ok(Batch { indices, transitions, weights })
    }

    /// Applies `priority(delta)` to each live index; stale ones are counted and
    /// skipped. Returns the number applied.
    pub fn update_priorities(
        &mut self,
        indices: &[ReplayIndex],
        deltas: &[f64],
    ) -> Result<usize, ReplayError> {
        if indices.len() != deltas.len() {
            return Err(ReplayError::Length { got: deltas.len(), want: indices.len() });
        }
        let mut applied = 0;
        for (&idx, &d) in indices.iter().zip(deltas) {
            if !self.live(idx) {
                self.stale_updates += 1;
                log::warn!("skipping priority update for evicted slot {}", idx.slot);
                continue;
            }
            let p = priority(d, self.epsilon, self.alpha)?;
            self.tree.set(idx.slot, Some(p));
            self.max_priority = self.max_priority.max(p);
            applied += 1;
        }
        Ok(applied)
    }

    /// Inserts every demonstration at priority 5.0 with `is_demo` set.
    pub fn preload_demos(&mut self, demos: Vec<Transition>) -> Result<(), ReplayError> {
        if demos.len() > self.capacity {
            return Err(ReplayError::Overflow { demos: demos.len(), capacity: self.capacity });
        }
        for mut t in demos {
            t.is_demo = true;
            self.push(t, Some(DEMO_PRIORITY))?;
        }
        Ok(())
    }

    /// `index,priority,is_demo,reward` with one row per live item.
    pub fn diagnostic_csv(&self) -> String {
        let mut out = String::from("index,priority,is_demo,reward\n");
        for (idx, p, t) in self.iter() {
            writeln!(out, "{},{},{},{}", idx.slot, p, t.is_demo, t.reward).unwrap();
        }
        out
    }
}

/// Demonstration transitions from a recorded trajectory file.
///
/// Each record's object listing is encoded with the training observer, so a
/// file with records `0..=n` yields `n` transitions; the last is terminal.
/// Errors name the 1-based line of the offending record.
pub fn ingest_trajectory(path: &Path, cfg: &TrainConfig) -> Result<Vec<Transition>, ReplayError> {
    if cfg.encoder.mode != EncoderMode::ObjectSlots {
        return Err(ReplayError::Config("recorded trajectories carry object lists only".into()));
    }
    let text = std::fs::read_to_string(path)?;
    let mut obs = Observer::new(cfg);
    let mut prev: Option<Vec<f32>> = None;
    let mut out: Vec<Transition> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let bad = |message: String| ReplayError::Ingest { line: i + 1, message };
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if v.get("kind").and_then(|k| k.as_str()) == Some("header") {
            continue;
        }
        let step: TrajectoryStep = serde_json::from_value(v).map_err(|e| bad(e.to_string()))?;
        let objs = parse_objects(&step.objects_text).map_err(|e| bad(e.to_string()))?;
        let x = obs.push_objects(&objs);
        if let Some(state) = prev.take() {
            out.push(Transition {
                state,
                action: step.action,
                reward: step.reward.value(),
                next_state: x.clone(),
                done: false,
                is_demo: true,
            });
        }
        prev = Some(x);
    }
    if let Some(last) = out.last_mut() {
        last.done = true;
    }
    Ok(out)
}
