use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::config::{EnvConfig, LaneCategory, RowKind, BAY_COUNT, FROG_SIZE};
use super::snapshot::{encode_state, Fnv64};
use super::EnvError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Action {
    Noop = 0,
    Up = 1,
    Right = 2,
    Left = 3,
    Down = 4,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::Noop, Action::Up, Action::Right, Action::Left, Action::Down];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Action> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Noop => "NOOP",
            Action::Up => "UP",
            Action::Right => "RIGHT",
            Action::Left => "LEFT",
            Action::Down => "DOWN",
        }
    }

    /// Case-insensitive name lookup.
    pub fn from_name(name: &str) -> Option<Action> {
        let name = name.trim();
        Self::ALL.into_iter().find(|a| a.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Action {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(code) = s.trim().parse::<u8>() {
            return Action::from_code(code).ok_or_else(|| EnvError::UnknownAction(s.to_string()));
        }
        Action::from_name(s).ok_or_else(|| EnvError::UnknownAction(s.to_string()))
    }
}

// Actions travel as their integer code; names are accepted on input.
impl Serialize for Action {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Code(u8),
            Name(String),
        }
        match Repr::deserialize(d)? {
            Repr::Code(c) => Action::from_code(c)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown action code {c}"))),
            Repr::Name(n) => Action::from_name(&n)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown action name {n:?}"))),
        }
    }
}

/// Returns `prev` with probability `sticky_prob`, else `requested`.
/// Always consumes exactly one draw from `rng`.
pub fn apply_sticky<R: Rng + ?Sized>(
    prev: Action,
    requested: Action,
    sticky_prob: f64,
    rng: &mut R,
) -> Action {
    let draw: f64 = rng.gen();
    if draw < sticky_prob {
        prev
    } else {
        requested
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frog {
    pub x: f64,
    pub row: usize,
    pub alive: bool,
}

/// Visible, screen-clipped span of one lane object.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LanePiece {
    pub lane: usize,
    pub row: usize,
    pub category: LaneCategory,
    pub x: i32,
    pub w: i32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    pub life_lost: bool,
    pub bay_entered: Option<usize>,
    pub level_completed: bool,
    pub effective_action: Action,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepResult {
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Clone, Debug)]
pub struct GameState {
    pub(crate) config: Arc<EnvConfig>,
    pub(crate) frog: Frog,
    /// Per lane (in `config.lanes` order), per object: track offset in `[0, period)`.
    pub(crate) lanes: Vec<Vec<f64>>,
    pub(crate) bays_filled: [bool; BAY_COUNT],
    pub(crate) lives_left: u32,
    pub(crate) timer_remaining: u32,
    pub(crate) score: f64,
    pub(crate) max_row_this_life: usize,
    pub(crate) level: u32,
    pub(crate) tick: u64,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) prev_action: Action,
}

impl GameState {
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        Self::with_config(Arc::new(config))
    }

    pub fn with_config(config: Arc<EnvConfig>) -> Result<Self, EnvError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let lanes = config
            .lanes
            .iter()
            .map(|spec| {
                let period = spec.period();
                let phase = rng.gen_range(0..period);
                spec.base_offsets()
                    .into_iter()
                    .map(|o| ((o + phase) % period) as f64)
                    .collect()
            })
            .collect();
        Ok(Self {
            frog: Frog { x: config.frog_start_x as f64, row: 0, alive: true },
            lanes,
            bays_filled: [false; BAY_COUNT],
            lives_left: config.lives,
            timer_remaining: config.timer_ticks,
            score: 0.0,
            max_row_this_life: 0,
            level: 0,
            tick: 0,
            rng,
            prev_action: Action::Noop,
            config,
        })
    }

    /// Same configuration with a different seed; keeps the shared config allocation
    /// when the seed already matches.
    pub fn reseeded(config: &Arc<EnvConfig>, seed: u64) -> Result<Self, EnvError> {
        if config.seed == seed {
            return Self::with_config(config.clone());
        }
        Self::new(EnvConfig { seed, ..(**config).clone() })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn shared_config(&self) -> &Arc<EnvConfig> {
        &self.config
    }

    pub fn frog(&self) -> Frog {
        self.frog
    }

    pub fn frog_x(&self) -> i32 {
        self.frog.x.floor() as i32
    }

    pub fn frog_y(&self) -> i32 {
        self.config.lane_y_table[self.frog.row]
    }

    pub fn lives_left(&self) -> u32 {
        self.lives_left
    }

    pub fn timer_remaining(&self) -> u32 {
        self.timer_remaining
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn max_row_this_life(&self) -> usize {
        self.max_row_this_life
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn bays_filled(&self) -> [bool; BAY_COUNT] {
        self.bays_filled
    }

    pub fn prev_action(&self) -> Action {
        self.prev_action
    }

    pub fn lane_offsets(&self) -> &[Vec<f64>] {
        &self.lanes
    }

    pub fn is_terminal(&self) -> bool {
        self.lives_left == 0
    }

    /// Moves the frog for scenario construction. The destination row counts as
    /// already reached for the current life.
    pub fn place_frog(&mut self, x: f64, row: usize) {
        assert!(row < self.config.lane_y_table.len(), "row {row} out of range");
        self.frog.x = x;
        self.frog.row = row;
        self.max_row_this_life = row;
    }

    /// Marks a home bay as occupied, for scenario construction.
    pub fn fill_bay(&mut self, bay: usize) {
        self.bays_filled[bay] = true;
    }

    pub fn set_timer(&mut self, ticks: u32) {
        self.timer_remaining = ticks;
    }

    /// Copy of this state under a different sticky-action probability, with the
    /// action-noise generator reseeded.
    pub fn with_sticky_prob(&self, sticky_prob: f64, seed: u64) -> GameState {
        let mut out = self.clone();
        out.config = Arc::new(EnvConfig { sticky_prob, ..(*self.config).clone() });
        out.rng = ChaCha8Rng::seed_from_u64(seed);
        out
    }

    pub fn row_kind(&self, row: usize) -> RowKind {
        self.config.row_kind(row)
    }

    fn speed_factor(&self) -> f64 {
        self.config.level_speed_multiplier.powi(self.level as i32)
    }

    fn lane_velocity(&self, lane: usize) -> f64 {
        let spec = &self.config.lanes[lane];
        spec.speed * self.speed_factor() * spec.direction.sign()
    }

    /// Visible pieces of every lane object, lane by lane, object by object.
    pub fn lane_pieces(&self) -> Vec<LanePiece> {
        let mut out = Vec::new();
        for lane in 0..self.lanes.len() {
            self.push_lane_pieces(lane, &mut out);
        }
        out
    }

    fn push_lane_pieces(&self, lane: usize, out: &mut Vec<LanePiece>) {
        let spec = &self.config.lanes[lane];
        let period = spec.period() as i64;
        let (lo, hi) = (self.config.x_min as i64, self.config.x_max as i64);
        for (offset, &w) in self.lanes[lane].iter().zip(&spec.object_widths) {
            let start = (offset.floor() as i64).rem_euclid(period);
            for shift in [0, -period] {
                let s = (start + shift).max(lo);
                let e = (start + shift + w as i64).min(hi);
                if s < e {
                    out.push(LanePiece {
                        lane,
                        row: spec.row,
                        category: spec.object_category,
                        x: s as i32,
                        w: (e - s) as i32,
                    });
                }
            }
        }
    }

    fn lane_index_for_row(&self, row: usize) -> Option<usize> {
        self.config.lanes.iter().position(|l| l.row == row)
    }

    fn pieces_in_row(&self, row: usize) -> Vec<LanePiece> {
        let mut out = Vec::new();
        if let Some(lane) = self.lane_index_for_row(row) {
            self.push_lane_pieces(lane, &mut out);
        }
        out
    }

    /// Lane index of a platform whose visible span holds the frog's horizontal center.
    fn supporting_lane(&self) -> Option<usize> {
        let center2 = 2 * self.frog_x() + FROG_SIZE;
        self.pieces_in_row(self.frog.row)
            .into_iter()
            .find(|p| p.category.is_platform() && 2 * p.x <= center2 && center2 < 2 * (p.x + p.w))
            .map(|p| p.lane)
    }

    fn hits_car(&self) -> bool {
        let fx = self.frog_x();
        self.pieces_in_row(self.frog.row)
            .into_iter()
            .any(|p| p.category == LaneCategory::Car && p.x < fx + FROG_SIZE && fx < p.x + p.w)
    }

    fn off_screen(&self) -> bool {
        let fx = self.frog_x();
        fx < self.config.x_min || fx + FROG_SIZE > self.config.x_max
    }

    fn bay_at_frog(&self) -> Option<usize> {
        let center2 = 2 * self.frog_x() + FROG_SIZE;
        self.config
            .bay_xs
            .iter()
            .position(|b| 2 * b[0] <= center2 && center2 < 2 * b[1])
    }

    fn advance_lanes(&mut self) {
        for lane in 0..self.lanes.len() {
            let v = self.lane_velocity(lane);
            let period = self.config.lanes[lane].period() as f64;
            for x in &mut self.lanes[lane] {
                *x = (*x + v).rem_euclid(period);
            }
        }
    }

    fn reset_frog(&mut self) {
        self.frog.x = self.config.frog_start_x as f64;
        self.frog.row = 0;
        self.max_row_this_life = 0;
        self.timer_remaining = self.config.timer_ticks;
    }

    fn lose_life(&mut self) {
        self.lives_left = self.lives_left.saturating_sub(1);
        self.reset_frog();
        if self.lives_left == 0 {
            self.frog.alive = false;
        }
    }

    pub fn step(&mut self, requested: Action) -> Result<StepResult, EnvError> {
        if self.is_terminal() {
            return Err(EnvError::Terminal);
        }
        let cfg = self.config.clone();
        let effective = apply_sticky(self.prev_action, requested, cfg.sticky_prob, &mut self.rng);
        self.prev_action = effective;
        self.tick += 1;

        let step = cfg.frog_step_x as f64;
        let right_edge = (cfg.x_max - FROG_SIZE) as f64;
        match effective {
            Action::Noop => {}
            Action::Up => self.frog.row = (self.frog.row + 1).min(cfg.home_row()),
            Action::Down => self.frog.row = self.frog.row.saturating_sub(1),
            Action::Left => self.frog.x = (self.frog.x - step).max(cfg.x_min as f64),
            Action::Right => self.frog.x = (self.frog.x + step).min(right_edge),
        }

        let carry = if cfg.row_kind(self.frog.row) == RowKind::River {
            self.supporting_lane().map(|lane| self.lane_velocity(lane))
        } else {
            None
        };
        self.advance_lanes();
        if let Some(v) = carry {
            self.frog.x += v;
        }
        self.timer_remaining = self.timer_remaining.saturating_sub(1);

        let mut info = StepInfo {
            life_lost: false,
            bay_entered: None,
            level_completed: false,
            effective_action: effective,
        };
        let mut reward = 0.0;

        let dies = match cfg.row_kind(self.frog.row) {
            RowKind::Home => match self.bay_at_frog() {
                Some(bay) if !self.bays_filled[bay] => {
                    self.bays_filled[bay] = true;
                    info.bay_entered = Some(bay);
                    reward = cfg.bay_entry_reward;
                    if self.bays_filled.iter().all(|&b| b) {
                        let seconds = (self.timer_remaining / cfg.ticks_per_second) as f64;
                        reward += cfg.all_bays_bonus + 2.0 * seconds;
                        info.level_completed = true;
                        self.level += 1;
                        self.bays_filled = [false; BAY_COUNT];
                    }
                    self.reset_frog();
                    false
                }
                _ => true,
            },
            RowKind::Road => self.off_screen() || self.hits_car(),
            RowKind::River => self.off_screen() || self.supporting_lane().is_none(),
            RowKind::Start | RowKind::Bank => self.off_screen(),
        };

        if dies || (info.bay_entered.is_none() && self.timer_remaining == 0) {
            info.life_lost = true;
            self.lose_life();
        } else if info.bay_entered.is_none() && self.frog.row > self.max_row_this_life {
            self.max_row_this_life = self.frog.row;
            reward = 1.0;
        }

        self.score += reward;
        Ok(StepResult { reward, done: self.is_terminal(), info })
    }

    /// 64-bit FNV-1a digest of the full dynamic state.
    pub fn state_hash(&self) -> u64 {
        let mut h = Fnv64::new();
        encode_state(self, &mut h, true);
        h.finish()
    }

    /// Digest that ignores the previous action. Two states with equal keys evolve
    /// identically whenever sticky actions are disabled.
    pub fn dynamics_hash(&self) -> u64 {
        let mut h = Fnv64::new();
        encode_state(self, &mut h, false);
        h.finish()
    }
}
