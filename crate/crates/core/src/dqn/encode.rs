use serde::{Deserialize, Serialize};

use crate::obs::{Category, GameObject};

pub const FROG_FIELDS: usize = 4;
pub const SLOT_FIELDS: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderMode {
    ObjectSlots,
    PixelsFlat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub mode: EncoderMode,
    pub slots: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self { mode: EncoderMode::ObjectSlots, slots: 24 }
    }
}

impl EncoderConfig {
    /// Length of one un-stacked observation vector.
    pub fn feature_len(&self) -> usize {
        match self.mode {
            EncoderMode::ObjectSlots => FROG_FIELDS + self.slots * SLOT_FIELDS,
            EncoderMode::PixelsFlat => crate::obs::OUT_SIZE * crate::obs::OUT_SIZE * crate::obs::STACK,
        }
    }
}

fn category_slot(c: Category) -> Option<usize> {
    match c {
        Category::Frog => None,
        Category::Car => Some(0),
        Category::Log => Some(1),
        Category::Turtle => Some(2),
        Category::LadyFrog => Some(3),
    }
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

/// Frog pose `(x/160, y/210, w/160, h/210)` followed by `slots` object slots
/// `[presence, car, log, turtle, lady_frog, x/160, y/210, w/160, h/210]`.
/// Objects fill slots nearest-first by center distance to the frog (to the
/// screen origin when no frog is listed); ties keep list order.
pub fn encode_object_state(objs: &[GameObject], slots: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; FROG_FIELDS + slots * SLOT_FIELDS];
    let put = |out: &mut [f32], at: usize, o: &GameObject| {
        out[at] = o.x as f32 / 160.0;
        out[at + 1] = o.y as f32 / 210.0;
        out[at + 2] = o.w as f32 / 160.0;
        out[at + 3] = o.h as f32 / 210.0;
    };
    let frog = objs.iter().find(|o| o.category == Category::Frog);
    let anchor = frog.map(|f| f.center()).unwrap_or((0.0, 0.0));
    if let Some(f) = frog {
        put(&mut out, 0, f);
    }
    let mut rest: Vec<&GameObject> = objs.iter().filter(|o| o.category != Category::Frog).collect();
    rest.sort_by(|a, b| dist2(a.center(), anchor).total_cmp(&dist2(b.center(), anchor)));
    for (k, o) in rest.into_iter().take(slots).enumerate() {
        let at = FROG_FIELDS + k * SLOT_FIELDS;
        out[at] = 1.0;
        if let Some(c) = category_slot(o.category) {
            out[at + 1 + c] = 1.0;
        }
        put(&mut out, at + 5, o);
    }
    out
}
