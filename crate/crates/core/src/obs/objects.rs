use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::ObsError;
use crate::env::{GameState, LaneCategory, FROG_SIZE, OBJECT_HEIGHT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Frog,
    Car,
    Log,
    Turtle,
    LadyFrog,
}

impl Category {
    pub const ALL: [Category; 5] =
        [Category::Frog, Category::Car, Category::Log, Category::Turtle, Category::LadyFrog];

    pub fn name(self) -> &'static str {
        match self {
            Category::Frog => "Frog",
            Category::Car => "Car",
            Category::Log => "Log",
            Category::Turtle => "Turtle",
            Category::LadyFrog => "LadyFrog",
        }
    }

    pub fn from_name(name: &str) -> Option<Category> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl From<LaneCategory> for Category {
    fn from(c: LaneCategory) -> Self {
        match c {
            LaneCategory::Car => Category::Car,
            LaneCategory::Log => Category::Log,
            LaneCategory::Turtle => Category::Turtle,
        }
    }
}

/// An on-screen entity: category plus top-left corner and size in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GameObject {
    pub category: Category,
    pub x: i32,
    pub y: i32,
    pub w: i32,
    pub h: i32,
}

impl GameObject {
    pub fn new(category: Category, x: i32, y: i32, w: i32, h: i32) -> Self {
        Self { category, x, y, w, h }
    }

    pub fn frog(x: i32, y: i32) -> Self {
        Self::new(Category::Frog, x, y, FROG_SIZE, FROG_SIZE)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x as f64 + self.w as f64 / 2.0, self.y as f64 + self.h as f64 / 2.0)
    }
}

impl fmt::Display for GameObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at ({}, {}) size ({}, {})",
            self.category.name(),
            self.x,
            self.y,
            self.w,
            self.h
        )
    }
}

/// Object-centric observation of a state.
///
/// The frog comes first (while alive), then every visible lane piece grouped
/// by category (cars, logs, turtles) and, within a category, by lane from the
/// bottom of the screen up. With `hide_current_lane` set, pieces sharing the
/// frog's row are left out.
pub fn objects(state: &GameState) -> Vec<GameObject> {
    let cfg = state.config();
    let frog = state.frog();
    let mut out = Vec::new();
    if frog.alive {
        out.push(GameObject::frog(state.frog_x(), state.frog_y()));
    }
    let mut pieces = state.lane_pieces();
    if cfg.hide_current_lane {
        pieces.retain(|p| p.row != frog.row);
    }
    for category in [LaneCategory::Car, LaneCategory::Log, LaneCategory::Turtle] {
        let mut rows: Vec<usize> =
            cfg.lanes.iter().filter(|l| l.object_category == category).map(|l| l.row).collect();
        rows.sort_unstable();
        for row in rows {
            let y = cfg.lane_y_table[row];
            out.extend(
                pieces
                    .iter()
                    .filter(|p| p.row == row)
                    .map(|p| GameObject::new(category.into(), p.x, y, p.w, OBJECT_HEIGHT)),
            );
        }
    }
    out
}

/// Prompt serialization: `Category at (x, y) size (w, h)` joined by `", "`.
pub fn format_objects(objs: &[GameObject]) -> String {
    objs.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(", ")
}

fn object_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^([A-Za-z]+) at \((-?\d+), (-?\d+)\) size \((\d+), (\d+)\)").unwrap()
    })
}

/// Inverse of [`format_objects`].
pub fn parse_objects(text: &str) -> Result<Vec<GameObject>, ObsError> {
    let mut rest = text.trim();
    let mut out = Vec::new();
    while !rest.is_empty() {
        let caps = object_re()
            .captures(rest)
            .ok_or_else(|| ObsError::Parse(format!("bad object entry at {rest:?}")))?;
        let category = Category::from_name(&caps[1])
            .ok_or_else(|| ObsError::Parse(format!("unknown category {:?}", &caps[1])))?;
        let num = |i: usize| {
            caps[i].parse::<i32>().map_err(|e| ObsError::Parse(format!("{:?}: {e}", &caps[0])))
        };
        out.push(GameObject::new(category, num(2)?, num(3)?, num(4)?, num(5)?));
        rest = &rest[caps[0].len()..];
        if !rest.is_empty() {
            rest = rest
                .strip_prefix(", ")
                .ok_or_else(|| ObsError::Parse(format!("expected \", \" before {rest:?}")))?;
        }
    }
    Ok(out)
}

pub fn objects_to_json(objs: &[GameObject]) -> String {
    serde_json::to_string(objs).expect("objects serialize")
}

pub fn objects_from_json(text: &str) -> Result<Vec<GameObject>, ObsError> {
    serde_json::from_str(text).map_err(|e| ObsError::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Action, EnvConfig};
    use proptest::prelude::*;

    #[test]
    fn default_start_listing() {
        let s = GameState::new(EnvConfig::default()).unwrap();
        let objs = objects(&s);
        assert!(format_objects(&objs).starts_with("Frog at (79, 171) size (7, 7), Car at ("));
        let car_rows: std::collections::BTreeSet<i32> =
            objs.iter().filter(|o| o.category == Category::Car).map(|o| o.y).collect();
        assert_eq!(car_rows.into_iter().collect::<Vec<_>>(), vec![109, 122, 135, 148, 161]);
        // Cars, then logs, then turtles.
        let cats: Vec<Category> = objs.iter().map(|o| o.category).collect();
        let mut sorted = cats.clone();
        sorted.sort();
        assert_eq!(cats, sorted);
    }

    #[test]
    fn hidden_current_lane() {
        let cfg = EnvConfig { hide_current_lane: true, ..EnvConfig::default() };
        let mut s = GameState::new(cfg).unwrap();
        s.place_frog(79.0, 1);
        assert!(objects(&s).iter().all(|o| o.y != 161 || o.category == Category::Frog));
        // The frog itself stays visible.
        assert_eq!(objects(&s)[0], GameObject::frog(79, 161));
    }

    #[test]
    fn frog_only_state() {
        let s = GameState::new(EnvConfig { lanes: vec![], ..EnvConfig::default() }).unwrap();
        assert_eq!(objects(&s), vec![GameObject::frog(79, 171)]);
    }

    #[test]
    fn dead_frog_is_not_listed() {
        let mut s =
            GameState::new(EnvConfig { lanes: vec![], lives: 1, ..EnvConfig::default() }).unwrap();
        while !s.is_terminal() {
            s.step(Action::Noop).unwrap();
        }
        assert!(objects(&s).is_empty());
    }

    #[test]
    fn format_cases() {
        assert_eq!(format_objects(&[GameObject::frog(79, 171)]), "Frog at (79, 171) size (7, 7)");
        assert_eq!(format_objects(&[]), "");
        let cars = [
            GameObject::new(Category::Car, 36, 161, 8, 7),
            GameObject::new(Category::Car, 116, 161, 8, 7),
        ];
        assert_eq!(
            format_objects(&cars),
            "Car at (36, 161) size (8, 7), Car at (116, 161) size (8, 7)"
        );
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_objects("Frog at (1, 2)").is_err());
        assert!(parse_objects("Dragon at (1, 2) size (3, 4)").is_err());
    }

    #[test]
    fn json_records() {
        let objs = vec![GameObject::frog(79, 171)];
        let text = objects_to_json(&objs);
        assert_eq!(text, r#"[{"category":"Frog","x":79,"y":171,"w":7,"h":7}]"#);
        assert_eq!(objects_from_json(&text).unwrap(), objs);
    }

    fn arb_object() -> impl Strategy<Value = GameObject> {
        (0usize..5, 0i32..160, 0i32..210, 1i32..64, 1i32..16)
            .prop_map(|(c, x, y, w, h)| GameObject::new(Category::ALL[c], x, y, w, h))
    }

    proptest! {
        #[test]
        fn format_parse_round_trip(objs in proptest::collection::vec(arb_object(), 0..30)) {
            let text = format_objects(&objs);
            prop_assert!(!text.ends_with(", "));
            prop_assert_eq!(parse_objects(&text).unwrap(), objs);
        }

        #[test]
        fn format_is_injective(
            a in proptest::collection::vec(arb_object(), 0..6),
            b in proptest::collection::vec(arb_object(), 0..6),
        ) {
            if a != b {
                prop_assert_ne!(format_objects(&a), format_objects(&b));
            }
        }
    }
}
