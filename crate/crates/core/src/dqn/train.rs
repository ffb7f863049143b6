use std::collections::VecDeque;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encode::{encode_object_state, EncoderConfig, EncoderMode};
use super::net::{greedy, loss_and_grad, Adam, LossBatch, QNet, N_ACTIONS};
use super::DqnError;
use crate::env::{Action, EnvConfig, GameState};
use crate::obs::{objects, preprocess, render, Frame, GameObject, PixelPalette, STACK};
use crate::replay::{BetaSchedule, PrioritizedBuffer, Transition};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gamma: f64,
    pub lr: f64,
    pub batch: usize,
    /// Gradient updates between target-network syncs.
    pub target_sync_every: u64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
    pub episodes: usize,
    /// Consecutive observation vectors concatenated into one input.
    pub frame_stack: usize,
    pub hidden: Vec<usize>,
    pub encoder: EncoderConfig,
    pub buffer_capacity: usize,
    pub alpha: f64,
    pub priority_epsilon: f64,
    pub beta_start: f64,
    pub beta_end: f64,
    pub beta_steps: u64,
    /// Environment steps collected before the first update.
    pub learning_starts: usize,
    /// Environment steps per gradient update.
    pub train_every: u64,
    pub max_episode_steps: usize,
    pub huber_delta: f64,
    /// Greedy evaluation every this many episodes; 0 disables it.
    pub eval_every: usize,
    pub eval_episodes: usize,
    /// Give every training episode its own environment seed (`seed + episode`).
    pub vary_env_seed: bool,
    /// Store life-losing transitions as terminal, so targets do not bootstrap
    /// through a respawn.
    pub life_loss_terminal: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lr: 1e-4,
            batch: 32,
            target_sync_every: 1000,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 50_000,
            episodes: 5000,
            frame_stack: 2,
            hidden: vec![128, 128],
            encoder: EncoderConfig::default(),
            buffer_capacity: 8000,
            alpha: crate::replay::DEFAULT_ALPHA,
            priority_epsilon: crate::replay::DEFAULT_EPSILON,
            beta_start: 0.4,
            beta_end: 1.0,
            beta_steps: 50_000,
            learning_starts: 1000,
            train_every: 1,
            max_episode_steps: 400,
            huber_delta: 1.0,
            eval_every: 0,
            eval_episodes: 1,
            vary_env_seed: false,
            life_loss_terminal: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), DqnError> {
        let bad = |m: &str| Err(DqnError::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(self.lr > 0.0) {
            return bad("lr must be positive");
        }
        if self.batch == 0 || self.batch > self.buffer_capacity {
            return bad("batch must be in [1, buffer_capacity]");
        }
        if self.frame_stack == 0 {
            return bad("frame_stack must be at least 1");
        }
        if self.target_sync_every == 0 || self.train_every == 0 {
            return bad("target_sync_every and train_every must be positive");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return bad("epsilon values must be in [0, 1]");
        }
        if self.max_episode_steps == 0 {
            return bad("max_episode_steps must be positive");
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return bad("hidden layer sizes must be positive");
        }
        if self.encoder.mode == EncoderMode::ObjectSlots && self.encoder.slots == 0 {
            return bad("encoder.slots must be positive");
        }
        Ok(())
    }

    /// Network input length.
    pub fn input_len(&self) -> usize {
        match self.encoder.mode {
            EncoderMode::ObjectSlots => self.encoder.feature_len() * self.frame_stack,
            // The pixel tensor already stacks frames.
            EncoderMode::PixelsFlat => self.encoder.feature_len(),
        }
    }

    pub fn epsilon(&self, step: u64) -> f64 {
        if self.epsilon_decay_steps == 0 {
            return self.epsilon_end;
        }
        let f = (step as f64 / self.epsilon_decay_steps as f64).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * f
    }

    fn beta(&self) -> BetaSchedule {
        BetaSchedule { start: self.beta_start, end: self.beta_end, steps: self.beta_steps }
    }
}

/// Sliding window of observations turned into network inputs.
#[derive(Clone, Debug)]
pub struct Observer {
    encoder: EncoderConfig,
    depth: usize,
    vectors: VecDeque<Vec<f32>>,
    frames: VecDeque<Frame>,
    palette: PixelPalette,
}

impl Observer {
    pub fn new(cfg: &TrainConfig) -> Self {
        let depth = match cfg.encoder.mode {
            EncoderMode::ObjectSlots => cfg.frame_stack,
            EncoderMode::PixelsFlat => STACK,
        };
        Self {
            encoder: cfg.encoder,
            depth,
            vectors: VecDeque::new(),
            frames: VecDeque::new(),
            palette: PixelPalette::default(),
        }
    }

    /// Starts a new episode; the first observation fills the whole window.
    pub fn reset(&mut self, state: &GameState) -> Vec<f32> {
        self.vectors.clear();
        self.frames.clear();
        self.observe(state)
    }

    pub fn observe(&mut self, state: &GameState) -> Vec<f32> {
        match self.encoder.mode {
            EncoderMode::ObjectSlots => self.push_objects(&objects(state)),
            EncoderMode::PixelsFlat => {
                let f = render(state, &self.palette);
                if self.frames.is_empty() {
                    self.frames.extend(std::iter::repeat(f.clone()).take(self.depth - 1));
                }
                self.frames.push_back(f);
                while self.frames.len() > self.depth {
                    self.frames.pop_front();
                }
                let frames: Vec<Frame> = self.frames.iter().cloned().collect();
                preprocess(&frames).expect("window holds exactly four frames")
            }
        }
    }

    /// Object-list path, used for recorded trajectories.
    pub fn push_objects(&mut self, objs: &[GameObject]) -> Vec<f32> {
        let v = encode_object_state(objs, self.encoder.slots);
        if self.vectors.is_empty() {
            self.vectors.extend(std::iter::repeat(v.clone()).take(self.depth - 1));
        }
        self.vectors.push_back(v);
        while self.vectors.len() > self.depth {
            self.vectors.pop_front();
        }
        self.vectors.iter().flatten().copied().collect()
    }

    pub fn clear(&mut self) {
        self.vectors.clear();
        self.frames.clear();
    }
}

fn to_f64(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

/// Bootstrapped targets `r + gamma * max_a Q_target(s', a)` (just `r` on
/// terminal transitions) and TD errors against the online network.
pub fn td_targets(
    batch: &[Transition],
    online: &QNet,
    target: &QNet,
    gamma: f64,
) -> Result<(Vec<f64>, Vec<f64>), DqnError> {
    let mut targets = Vec::with_capacity(batch.len());
    let mut deltas = Vec::with_capacity(batch.len());
    for t in batch {
        let y = if t.done {
            t.reward
        } else {
            let next = target.forward(&to_f64(&t.next_state))?;
            t.reward + gamma * next.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        };
        let q = online.forward(&to_f64(&t.state))?[t.action.code() as usize];
        targets.push(y);
        deltas.push(y - q);
    }
    Ok((targets, deltas))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub steps: usize,
    pub reward: f64,
    pub mean_loss: Option<f64>,
    pub epsilon: f64,
    /// Share of demonstrations among stored transitions at episode end.
    pub demo_fraction: f64,
    /// Share of demonstrations among transitions sampled during the episode.
    pub batch_demo_fraction: Option<f64>,
    pub eval_reward: Option<f64>,
}

pub const METRICS_HEADER: &str =
    "episode,steps,reward,mean_loss,epsilon,demo_fraction,batch_demo_fraction,eval_reward";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn metrics_csv(rows: &[EpisodeMetrics]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for m in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            m.episode,
            m.steps,
            m.reward,
            opt(m.mean_loss),
            m.epsilon,
            m.demo_fraction,
            opt(m.batch_demo_fraction),
            opt(m.eval_reward)
        )
        .unwrap();
    }
    out
}

/// Reads a metrics table written by [`metrics_csv`]. Columns are located by
/// header name; unknown extra columns are ignored.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<EpisodeMetrics>, DqnError> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| DqnError::Metrics("empty file".into()))?.split(',').collect();
    let col = |name: &str| header.iter().position(|h| h.trim() == name);
    let need = |name: &str| col(name).ok_or_else(|| DqnError::Metrics(format!("missing column {name}")));
    let (ie, is, ir) = (need("episode")?, need("steps")?, need("reward")?);
    let (il, iep, id) = (col("mean_loss"), col("epsilon"), col("demo_fraction"));
    let (ib, iv) = (col("batch_demo_fraction"), col("eval_reward"));
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = |what: &str| DqnError::Metrics(format!("line {}: bad {what}", n + 2));
        let field = |i: usize| f.get(i).map(|s| s.trim()).unwrap_or("");
        let num = |i: Option<usize>, what: &str| -> Result<Option<f64>, DqnError> {
            match i.map(field) {
                None | Some("") => Ok(None),
                Some(s) => s.parse().map(Some).map_err(|_| bad(what)),
            }
        };
        rows.push(EpisodeMetrics {
            episode: field(ie).parse().map_err(|_| bad("episode"))?,
            steps: field(is).parse().map_err(|_| bad("steps"))?,
            reward: field(ir).parse().map_err(|_| bad("reward"))?,
            mean_loss: num(il, "mean_loss")?,
            epsilon: num(iep, "epsilon")?.unwrap_or(0.0),
            demo_fraction: num(id, "demo_fraction")?.unwrap_or(0.0),
            batch_demo_fraction: num(ib, "batch_demo_fraction")?,
            eval_reward: num(iv, "eval_reward")?,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub mean: f64,
    pub rewards: Vec<f64>,
}

/// Greedy (pure argmax, lowest code on ties) play; episode `i` runs with
/// environment seed `seed + i`.
pub fn evaluate(
    net: &QNet,
    env_cfg: &EnvConfig,
    cfg: &TrainConfig,
    episodes: usize,
    seed: u64,
) -> Result<EvalResult, DqnError> {
    let shared = Arc::new(env_cfg.clone());
    let mut rewards = Vec::with_capacity(episodes);
    let mut obs = Observer::new(cfg);
    for i in 0..episodes {
        let mut state = GameState::reseeded(&shared, seed.wrapping_add(i as u64))?;
        let mut x = obs.reset(&state);
        let mut total = 0.0;
        for _ in 0..cfg.max_episode_steps {
            if state.is_terminal() {
                break;
            }
            let a = greedy(&net.forward(&to_f64(&x))?);
            total += state.step(a)?.reward;
            x = obs.observe(&state);
        }
        rewards.push(total);
    }
    let mean = if rewards.is_empty() { 0.0 } else { rewards.iter().sum::<f64>() / rewards.len() as f64 };
    Ok(EvalResult { mean, rewards })
}

/// Transitions produced by executing `actions` from the configured start.
pub fn encode_episode(
    env_cfg: &EnvConfig,
    cfg: &TrainConfig,
    actions: &[Action],
) -> Result<Vec<Transition>, DqnError> {
    let mut state = GameState::new(env_cfg.clone())?;
    let mut obs = Observer::new(cfg);
    let mut x = obs.reset(&state);
    let mut out = Vec::with_capacity(actions.len());
    for (i, &a) in actions.iter().enumerate() {
        let r = state.step(a)?;
        let next = obs.observe(&state);
        out.push(Transition {
            state: x,
            action: a,
            reward: r.reward,
            next_state: next.clone(),
            done: r.done || i + 1 == actions.len() || (cfg.life_loss_terminal && r.info.life_lost),
            is_demo: true,
        });
        x = next;
        if r.done {
            break;
        }
    }
    Ok(out)
}

/// Online/target networks, optimizer and replay memory.
pub struct Trainer {
    pub cfg: TrainConfig,
    pub online: QNet,
    pub target: QNet,
    pub buffer: PrioritizedBuffer,
    opt: Adam,
    rng: ChaCha8Rng,
    env_steps: u64,
    updates: u64,
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Result<Self, DqnError> {
        cfg.validate()?;
        let online = QNet::new(cfg.input_len(), &cfg.hidden, cfg.seed);
        let buffer = PrioritizedBuffer::with_params(
            cfg.buffer_capacity,
            cfg.input_len(),
            cfg.alpha,
            cfg.priority_epsilon,
        )?;
        Ok(Self {
            opt: Adam::new(online.param_count(), cfg.lr),
            target: online.clone(),
            online,
            buffer,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15),
            env_steps: 0,
            updates: 0,
            cfg,
        })
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn act(&mut self, x: &[f32], epsilon: f64) -> Result<Action, DqnError> {
        if self.rng.gen::<f64>() < epsilon {
            Ok(Action::ALL[self.rng.gen_range(0..N_ACTIONS)])
        } else {
            Ok(greedy(&self.online.forward(&to_f64(x))?))
        }
    }

    /// One prioritized minibatch update. Returns the loss and the share of
    /// demonstrations in the batch.
    pub fn train_step(&mut self) -> Result<(f64, f64), DqnError> {
        let beta = self.cfg.beta().value(self.updates);
        let batch = self.buffer.sample(self.cfg.batch, beta, &mut self.rng)?;
        let (targets, deltas) =
            td_targets(&batch.transitions, &self.online, &self.target, self.cfg.gamma)?;
        let lb = LossBatch {
            inputs: batch.transitions.iter().map(|t| to_f64(&t.state)).collect(),
            actions: batch.transitions.iter().map(|t| t.action).collect(),
            targets,
            weights: batch.weights.clone(),
        };
        let (loss, grads) = loss_and_grad(&self.online, &lb, self.cfg.huber_delta)?;
        self.opt.step(&mut self.online, &grads);
        self.buffer.update_priorities(&batch.indices, &deltas)?;
        self.updates += 1;
        if self.updates % self.cfg.target_sync_every == 0 {
            self.target = self.online.clone();
        }
        let demos = batch.transitions.iter().filter(|t| t.is_demo).count();
        Ok((loss, demos as f64 / batch.transitions.len() as f64))
    }

    /// Plays one ε-greedy episode, storing and learning from its transitions.
    pub fn run_episode(&mut self, episode: usize, env: &Arc<EnvConfig>) -> Result<EpisodeMetrics, DqnError> {
        let seed = if self.cfg.vary_env_seed { env.seed.wrapping_add(episode as u64) } else { env.seed };
        let mut state = GameState::reseeded(env, seed)?;
        let mut obs = Observer::new(&self.cfg);
        let mut x = obs.reset(&state);
        let (mut steps, mut reward) = (0, 0.0);
        let (mut loss_sum, mut demo_sum, mut n_updates) = (0.0, 0.0, 0usize);
        while !state.is_terminal() && steps < self.cfg.max_episode_steps {
            let eps = self.cfg.epsilon(self.env_steps);
            let a = self.act(&x, eps)?;
            let r = state.step(a)?;
            let next = obs.observe(&state);
            self.buffer.push(
                Transition {
                    state: std::mem::take(&mut x),
                    action: a,
                    reward: r.reward,
                    next_state: next.clone(),
                    done: r.done || (self.cfg.life_loss_terminal && r.info.life_lost),
                    is_demo: false,
                },
                None,
            )?;
            x = next;
            steps += 1;
            reward += r.reward;
            self.env_steps += 1;
            let ready = self.buffer.len() >= self.cfg.batch.max(self.cfg.learning_starts);
            if ready && self.env_steps % self.cfg.train_every == 0 {
                let (l, d) = self.train_step()?;
                loss_sum += l;
                demo_sum += d;
                n_updates += 1;
            }
        }
        let mean = |s: f64| (n_updates > 0).then(|| s / n_updates as f64);
        Ok(EpisodeMetrics {
            episode,
            steps,
            reward,
            mean_loss: mean(loss_sum),
            epsilon: self.cfg.epsilon(self.env_steps),
            demo_fraction: self.buffer.demo_fraction(),
            batch_demo_fraction: mean(demo_sum),
            eval_reward: None,
        })
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub metrics: Vec<EpisodeMetrics>,
    pub net: QNet,
    /// Demonstration share of the buffer right after preloading.
    pub initial_demo_fraction: f64,
}

/// Full training run; demonstrations, when given, are preloaded first.
pub fn train(env_cfg: &EnvConfig, cfg: &TrainConfig, demos: Vec<Transition>) -> Result<TrainOutcome, DqnError> {
    env_cfg.validate()?;
    let mut trainer = Trainer::new(cfg.clone())?;
    trainer.buffer.preload_demos(demos)?;
    let initial_demo_fraction = trainer.buffer.demo_fraction();
    let env = Arc::new(env_cfg.clone());
    let mut metrics = Vec::with_capacity(cfg.episodes);
    for e in 0..cfg.episodes {
        let mut m = trainer.run_episode(e, &env)?;
        if cfg.eval_every > 0 && (e + 1) % cfg.eval_every == 0 {
            m.eval_reward = Some(evaluate(&trainer.online, env_cfg, cfg, cfg.eval_episodes, env_cfg.seed)?.mean);
        }
        log::debug!("episode {e}: reward {} steps {}", m.reward, m.steps);
        metrics.push(m);
    }
    Ok(TrainOutcome { metrics, net: trainer.online, initial_demo_fraction })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TrainConfig {
        TrainConfig {
            hidden: vec![16],
            encoder: EncoderConfig { mode: EncoderMode::ObjectSlots, slots: 4 },
            batch: 4,
            buffer_capacity: 64,
            learning_starts: 4,
            max_episode_steps: 40,
            episodes: 3,
            ..TrainConfig::default()
        }
    }

    fn transition(state: Vec<f32>, action: Action, reward: f64, next: Vec<f32>, done: bool) -> Transition {
        Transition { state, action, reward, next_state: next, done, is_demo: false }
    }

    #[test]
    fn td_target_cases() {
        let online = QNet::zeros(2, &[2]);
        let mut target = QNet::zeros(2, &[2]);
        target.layers[1].b = vec![0.0, 3.0, 1.0, 0.0, -1.0];
        let batch = vec![
            transition(vec![0.0; 2], Action::Up, 1.0, vec![0.0; 2], true),
            transition(vec![0.0; 2], Action::Up, 1.0, vec![0.0; 2], false),
        ];
        let (t, d) = td_targets(&batch, &online, &target, 0.5).unwrap();
        assert_eq!(t, vec![1.0, 2.5]);
        assert_eq!(d, vec![1.0, 2.5]);
        let (t, _) = td_targets(&batch, &online, &target, 0.0).unwrap();
        assert_eq!(t, vec![1.0, 1.0]);
    }

    #[test]
    fn td_targets_by_hand() {
        // Network 1 → 1 → 5: h = relu(2x - 1), Q_a = c_a * h + d_a.
        let mut net = QNet::zeros(1, &[1]);
        net.layers[0].w = vec![2.0];
        net.layers[0].b = vec![-1.0];
        net.layers[1].w = vec![1.0, -1.0, 0.5, 2.0, 0.0];
        net.layers[1].b = vec![0.1, 0.2, 0.3, 0.4, 0.5];
        let batch = vec![
            transition(vec![1.0], Action::Right, 2.0, vec![1.5], false),
            transition(vec![0.25], Action::Left, -1.0, vec![0.0], false),
        ];
        let (t, d) = td_targets(&batch, &net, &net, 0.9).unwrap();
        // s' = 1.5: h = 2, Q = [2.1, -1.8, 1.3, 4.4, 0.5], max 4.4.
        // s  = 1.0: h = 1, Q_right = 0.8.
        // s' = 0.0: h = 0, Q = biases, max 0.5. s = 0.25: h = 0, Q_left = 0.4.
        let want_t = [2.0 + 0.9 * 4.4, -1.0 + 0.9 * 0.5];
        let want_d = [want_t[0] - 0.8, want_t[1] - 0.4];
        for i in 0..2 {
            assert!((t[i] - want_t[i]).abs() < 1e-6);
            assert!((d[i] - want_d[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn overfits_single_transition() {
        let mut cfg = small();
        cfg.lr = 1e-2;
        cfg.batch = 1;
        let mut tr = Trainer::new(cfg).unwrap();
        let n = tr.cfg.input_len();
        tr.buffer.push(transition(vec![0.5; n], Action::Up, 3.0, vec![0.0; n], true), None).unwrap();
        let first = tr.train_step().unwrap().0;
        let mut last = first;
        for _ in 0..200 {
            last = tr.train_step().unwrap().0;
        }
        assert!(last < 0.01 * first, "{first} -> {last}");
    }

    #[test]
    fn step_updates_priorities_and_target_sync() {
        let mut cfg = small();
        cfg.target_sync_every = 3;
        let mut tr = Trainer::new(cfg).unwrap();
        let n = tr.cfg.input_len();
        let idx = tr.buffer.push(transition(vec![0.2; n], Action::Left, 1.0, vec![0.1; n], false), None).unwrap();
        let before = tr.buffer.priority_of(idx).unwrap();
        let target0 = tr.target.clone();
        tr.train_step().unwrap();
        assert_ne!(tr.buffer.priority_of(idx).unwrap(), before);
        tr.train_step().unwrap();
        assert_eq!(tr.target, target0);
        tr.train_step().unwrap();
        assert_eq!(tr.target, tr.online);
    }

    #[test]
    fn zero_net_plays_noop() {
        let cfg = small();
        let net = QNet::zeros(cfg.input_len(), &cfg.hidden);
        let env = EnvConfig { lanes: vec![], ..EnvConfig::default() };
        let cfg = TrainConfig { max_episode_steps: 1000, ..cfg };
        let r = evaluate(&net, &env, &cfg, 3, 0).unwrap();
        assert_eq!(r.rewards, vec![0.0; 3]);
        assert_eq!(r.mean, 0.0);
    }

    #[test]
    fn training_is_reproducible() {
        let env = EnvConfig::mini();
        let a = train(&env, &small(), vec![]).unwrap();
        let b = train(&env, &small(), vec![]).unwrap();
        assert_eq!(metrics_csv(&a.metrics), metrics_csv(&b.metrics));
        assert_eq!(a.net, b.net);
    }

    #[test]
    fn demo_fraction_at_start() {
        let env = EnvConfig::mini();
        let cfg = small();
        let demos = encode_episode(&env, &cfg, &[Action::Up, Action::Up, Action::Noop]).unwrap();
        assert_eq!(demos.len(), 3);
        assert!(demos[2].done && !demos[0].done);
        let out = train(&env, &TrainConfig { episodes: 1, ..cfg }, demos).unwrap();
        assert_eq!(out.initial_demo_fraction, 1.0);
        assert!(out.metrics[0].demo_fraction < 1.0);
    }

    #[test]
    fn metrics_round_trip() {
        let env = EnvConfig::mini();
        let cfg = TrainConfig { eval_every: 2, ..small() };
        let out = train(&env, &cfg, vec![]).unwrap();
        let text = metrics_csv(&out.metrics);
        assert!(text.starts_with("episode,steps,reward,mean_loss,epsilon,demo_fraction"));
        assert_eq!(parse_metrics_csv(&text).unwrap(), out.metrics);
        assert!(out.metrics[1].eval_reward.is_some() && out.metrics[0].eval_reward.is_none());
    }

    #[test]
    fn pixel_observer_shape() {
        let cfg = TrainConfig { encoder: EncoderConfig { mode: EncoderMode::PixelsFlat, slots: 0 }, ..small() };
        let mut obs = Observer::new(&cfg);
        let s = GameState::new(EnvConfig::default()).unwrap();
        assert_eq!(obs.reset(&s).len(), cfg.input_len());
        assert_eq!(cfg.input_len(), 84 * 84 * 4);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { gamma: 0.0, ..small() }.validate().is_err());
        assert!(TrainConfig { batch: 1000, ..small() }.validate().is_err());
        assert!(small().validate().is_ok());
    }
}
