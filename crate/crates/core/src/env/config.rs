use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EnvError;

/// Horizontal travel direction of a lane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Left => -1.0,
            Direction::Right => 1.0,
        }
    }
}

/// What a moving lane carries. Cars make a road lane; logs and turtles make a river lane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaneCategory {
    Car,
    Log,
    Turtle,
}

impl LaneCategory {
    pub fn is_platform(self) -> bool {
        !matches!(self, LaneCategory::Car)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneSpec {
    /// Index into `lane_y_table`. Must be an intermediate row.
    pub row: usize,
    pub direction: Direction,
    /// Pixels per tick at level 0.
    pub speed: f64,
    pub object_category: LaneCategory,
    pub object_widths: Vec<u32>,
    /// Gap after object `i` is `gap_pattern[i % gap_pattern.len()]`.
    pub gap_pattern: Vec<u32>,
}

impl LaneSpec {
    /// Circumference of the lane's circular track.
    pub fn period(&self) -> u32 {
        self.object_widths
            .iter()
            .enumerate()
            .map(|(i, w)| w + self.gap_pattern[i % self.gap_pattern.len()])
            .sum()
    }

    /// Track offset of each object when the lane phase is zero.
    pub fn base_offsets(&self) -> Vec<u32> {
        let mut at = 0;
        self.object_widths
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let x = at;
                at += w + self.gap_pattern[i % self.gap_pattern.len()];
                x
            })
            .collect()
    }
}

/// Kind of a row as derived from the lane table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Start,
    Road,
    Bank,
    River,
    Home,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Row y-coordinates from the start row (index 0) up to the home row (last).
    pub lane_y_table: Vec<i32>,
    pub lanes: Vec<LaneSpec>,
    pub frog_start_x: i32,
    pub frog_step_x: i32,
    pub x_min: i32,
    pub x_max: i32,
    pub lives: u32,
    pub timer_ticks: u32,
    pub ticks_per_second: u32,
    pub sticky_prob: f64,
    /// Half-open `[start, end)` pixel intervals of the five home bays.
    pub bay_xs: Vec<[i32; 2]>,
    pub bay_entry_reward: f64,
    pub all_bays_bonus: f64,
    pub hide_current_lane: bool,
    pub level_speed_multiplier: f64,
    pub seed: u64,
}

pub const FROG_SIZE: i32 = 7;
pub const OBJECT_HEIGHT: i32 = 7;
pub const SCREEN_WIDTH: usize = 160;
pub const SCREEN_HEIGHT: usize = 210;
pub const BAY_COUNT: usize = 5;

fn lane(
    row: usize,
    direction: Direction,
    speed: f64,
    object_category: LaneCategory,
    object_widths: &[u32],
    gap_pattern: &[u32],
) -> LaneSpec {
    LaneSpec {
        row,
        direction,
        speed,
        object_category,
        object_widths: object_widths.to_vec(),
        gap_pattern: gap_pattern.to_vec(),
    }
}

impl Default for EnvConfig {
    fn default() -> Self {
        use Direction::*;
        use LaneCategory::*;
        Self {
            lane_y_table: vec![171, 161, 148, 135, 122, 109, 95, 83, 70, 57, 44, 31, 18],
            lanes: vec![
                lane(1, Left, 1.0, Car, &[8, 8], &[72]),
                lane(2, Right, 2.0, Car, &[8, 8], &[72]),
                lane(3, Left, 1.0, Car, &[8, 8, 8, 8], &[24, 40]),
                lane(4, Right, 2.0, Car, &[8, 8], &[72]),
                lane(5, Left, 1.0, Car, &[16, 16], &[64]),
                lane(7, Left, 1.0, Turtle, &[8, 8, 8], &[8, 48, 72]),
                lane(8, Right, 1.0, Log, &[16, 16, 16], &[16, 16, 80]),
                lane(9, Right, 2.0, Log, &[64], &[96]),
                lane(10, Left, 1.0, Turtle, &[8, 8, 8, 8], &[8, 44, 8, 68]),
                lane(11, Right, 1.0, Log, &[32, 32], &[48]),
            ],
            frog_start_x: 79,
            frog_step_x: 7,
            x_min: 8,
            x_max: 152,
            lives: 4,
            timer_ticks: 120,
            ticks_per_second: 4,
            sticky_prob: 0.0,
            bay_xs: vec![[16, 28], [45, 57], [74, 86], [103, 115], [132, 144]],
            bay_entry_reward: 10.0,
            all_bays_bonus: 100.0,
            hide_current_lane: false,
            level_speed_multiplier: 1.25,
            seed: 0,
        }
    }
}

impl EnvConfig {
    /// Small deterministic benchmark: three road lanes, a median bank, two river lanes.
    pub fn mini() -> Self {
        use Direction::*;
        use LaneCategory::*;
        Self {
            lane_y_table: vec![171, 161, 148, 135, 122, 109, 96, 83],
            lanes: vec![
                lane(1, Left, 1.0, Car, &[8, 8], &[72]),
                lane(2, Right, 1.0, Car, &[8, 8, 8], &[45, 45, 46]),
                lane(3, Left, 2.0, Car, &[16, 16], &[64]),
                lane(5, Right, 1.0, Log, &[32, 32], &[48]),
                lane(6, Left, 1.0, Log, &[24, 24, 24], &[32, 32, 24]),
            ],
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, EnvError> {
        let cfg: EnvConfig =
            toml::from_str(text).map_err(|e| EnvError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, EnvError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EnvError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn home_row(&self) -> usize {
        self.lane_y_table.len() - 1
    }

    pub fn row_kind(&self, row: usize) -> RowKind {
        if row == 0 {
            return RowKind::Start;
        }
        if row == self.home_row() {
            return RowKind::Home;
        }
        match self.lanes.iter().find(|l| l.row == row) {
            Some(l) if l.object_category.is_platform() => RowKind::River,
            Some(_) => RowKind::Road,
            None => RowKind::Bank,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |msg: String| Err(EnvError::Config(msg));
        let ys = &self.lane_y_table;
        if ys.len() < 3 {
            return bad(format!("lane_y_table needs at least 3 rows, got {}", ys.len()));
        }
        if ys.windows(2).any(|w| w[1] >= w[0]) {
            return bad("lane_y_table must be strictly decreasing".into());
        }
        if ys[ys.len() - 1] < 0 || ys[0] + OBJECT_HEIGHT > SCREEN_HEIGHT as i32 {
            return bad("lane_y_table rows must fit on the 210-px screen".into());
        }
        if self.x_min < 0 || self.x_max > SCREEN_WIDTH as i32 || self.x_max - self.x_min < FROG_SIZE {
            return bad(format!("invalid playfield [{}, {})", self.x_min, self.x_max));
        }
        if self.frog_start_x < self.x_min || self.frog_start_x + FROG_SIZE > self.x_max {
            return bad("frog_start_x outside the playfield".into());
        }
        if self.frog_step_x < 1 {
            return bad("frog_step_x must be positive".into());
        }
        if self.lives == 0 {
            return bad("lives must be at least 1".into());
        }
        if self.timer_ticks == 0 || self.ticks_per_second == 0 {
            return bad("timer_ticks and ticks_per_second must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.sticky_prob) {
            return bad(format!("sticky_prob {} outside [0, 1]", self.sticky_prob));
        }
        if !(self.level_speed_multiplier.is_finite() && self.level_speed_multiplier >= 1.0) {
            return bad("level_speed_multiplier must be >= 1".into());
        }
        if self.bay_xs.len() != BAY_COUNT {
            return bad(format!("expected {BAY_COUNT} bays, got {}", self.bay_xs.len()));
        }
        let mut bays = self.bay_xs.clone();
        bays.sort();
        for b in &bays {
            if b[0] >= b[1] || b[0] < self.x_min || b[1] > self.x_max {
                return bad(format!("bay {:?} is empty or outside the playfield", b));
            }
        }
        if bays.windows(2).any(|w| w[1][0] < w[0][1]) {
            return bad("bays overlap".into());
        }
        let mut seen_rows = Vec::new();
        for l in &self.lanes {
            if l.row == 0 || l.row >= self.home_row() {
                return bad(format!("lane row {} is not an intermediate row", l.row));
            }
            if seen_rows.contains(&l.row) {
                return bad(format!("row {} has two lanes", l.row));
            }
            seen_rows.push(l.row);
            if !(l.speed.is_finite() && l.speed >= 1.0) {
                return bad(format!("lane {} speed must be >= 1 px/tick", l.row));
            }
            if l.object_widths.is_empty() || l.object_widths.contains(&0) {
                return bad(format!("lane {} needs non-zero object widths", l.row));
            }
            if l.gap_pattern.is_empty() || l.gap_pattern.contains(&0) {
                return bad(format!("lane {} needs non-zero gaps", l.row));
            }
            if (l.period() as i32) < self.x_max {
                return bad(format!(
                    "lane {} period {} is shorter than the playfield edge {}",
                    l.row,
                    l.period(),
                    self.x_max
                ));
            }
        }
        Ok(())
    }
}
