use serde::{Deserialize, Serialize};

use super::report::{batch_demo_share, RunSummary};
use super::train::{encode_episode, train, TrainConfig};
use super::{DqnError, EncoderConfig, EncoderMode};
use crate::env::{Action, EnvConfig, GameState};
use crate::replay::Transition;
use crate::search::{chained_search, OrderPolicy, SearchConfig};

/// Vanilla against demonstration-guided training on the mini layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiniBenchmark {
    pub env: EnvConfig,
    pub train: TrainConfig,
    /// Demonstrations, each from its own seeded-random search order.
    pub demos: usize,
    /// Bays filled per demonstration; each bay is one chained search segment.
    pub demo_segments: usize,
    /// Score gain asked of each segment.
    pub segment_score: f64,
    pub seeds: Vec<u64>,
    pub threshold: f64,
    /// Fraction of episodes in the final window.
    pub window: f64,
}

impl Default for MiniBenchmark {
    fn default() -> Self {
        Self {
            env: EnvConfig::mini(),
            train: TrainConfig {
                lr: 1e-3,
                epsilon_decay_steps: 20_000,
                episodes: 800,
                hidden: vec![32, 32],
                encoder: EncoderConfig { mode: EncoderMode::ObjectSlots, slots: 6 },
                buffer_capacity: 8000,
                beta_steps: 100_000,
                learning_starts: 500,
                target_sync_every: 200,
                train_every: 2,
                max_episode_steps: 300,
                eval_every: 10,
                eval_episodes: 1,
                ..TrainConfig::default()
            },
            demos: 5,
            demo_segments: 5,
            segment_score: 16.0,
            seeds: vec![0, 1, 2, 3, 4],
            threshold: 5.0,
            window: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedComparison {
    pub seed: u64,
    pub vanilla: RunSummary,
    pub demo: RunSummary,
    /// Demonstration share of sampled batches, early and late in the demo run.
    pub demo_batch_share: Option<(f64, f64)>,
}

impl MiniBenchmark {
    /// Brute plans from the layout's start state.
    pub fn demo_plans(&self) -> Result<Vec<Vec<Action>>, DqnError> {
        let root = GameState::new(self.env.clone())?;
        let mut plans = Vec::with_capacity(self.demos);
        for seed in 0..self.demos as u64 {
            let cfg = SearchConfig {
                target_score: self.segment_score,
                order_policy: OrderPolicy::SeededRandom,
                seed,
                ..SearchConfig::default()
            };
            let r = chained_search(&root, &cfg, self.demo_segments)?;
            if !r.target_reached {
                return Err(DqnError::Config(format!("demo search {seed} missed its target")));
            }
            plans.push(r.plan);
        }
        Ok(plans)
    }

    pub fn demo_transitions(&self) -> Result<Vec<Transition>, DqnError> {
        let mut out = Vec::new();
        for plan in self.demo_plans()? {
            out.extend(encode_episode(&self.env, &self.train, &plan)?);
        }
        Ok(out)
    }

    /// Both arms for one seed.
    pub fn run_seed(&self, seed: u64, demos: &[Transition]) -> Result<SeedComparison, DqnError> {
        let cfg = TrainConfig { seed, ..self.train.clone() };
        let vanilla = train(&self.env, &cfg, Vec::new())?;
        let guided = train(&self.env, &cfg, demos.to_vec())?;
        let summary = |name: &str, m| RunSummary::new(name, m, self.window, self.threshold);
        Ok(SeedComparison {
            seed,
            vanilla: summary("vanilla", &vanilla.metrics),
            demo: summary("demo", &guided.metrics),
            demo_batch_share: batch_demo_share(&guided.metrics, self.window),
        })
    }
}

pub fn run_benchmark(bench: &MiniBenchmark) -> Result<Vec<SeedComparison>, DqnError> {
    let demos = bench.demo_transitions()?;
    bench.seeds.iter().map(|&s| bench.run_seed(s, &demos)).collect()
}
