use serde::{Deserialize, Serialize};

use super::objects::{objects, Category, GameObject};
use super::ObsError;
use crate::env::{GameState, RowKind, SCREEN_HEIGHT, SCREEN_WIDTH};

/// 210×160 grayscale frame, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pixels: Vec<u8>,
}

impl Frame {
    pub const WIDTH: usize = SCREEN_WIDTH;
    pub const HEIGHT: usize = SCREEN_HEIGHT;

    pub fn filled(value: u8) -> Self {
        Frame { pixels: vec![value; Self::WIDTH * Self::HEIGHT] }
    }

    pub fn from_pixels(pixels: Vec<u8>) -> Result<Self, ObsError> {
        if pixels.len() != Self::WIDTH * Self::HEIGHT {
            return Err(ObsError::Shape(format!(
                "expected {} pixels, got {}",
                Self::WIDTH * Self::HEIGHT,
                pixels.len()
            )));
        }
        Ok(Frame { pixels })
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * Self::WIDTH + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * Self::WIDTH + x] = v;
    }

    /// Fills the rectangle, clipped to the frame.
    pub fn fill_rect(&mut self, x: i32, y: i32, w: i32, h: i32, v: u8) {
        let x0 = x.max(0) as usize;
        let y0 = y.max(0) as usize;
        let x1 = ((x + w).max(0) as usize).min(Self::WIDTH);
        let y1 = ((y + h).max(0) as usize).min(Self::HEIGHT);
        for yy in y0..y1 {
            self.pixels[yy * Self::WIDTH + x0..yy * Self::WIDTH + x1.max(x0)].fill(v);
        }
    }

    /// Binary PGM (P5).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", Self::WIDTH, Self::HEIGHT).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self, ObsError> {
        // Header: magic, width, height, maxval separated by single whitespace runs.
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(ObsError::Parse("truncated PGM header".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        pos += 1;
        if fields[0] != "P5" || fields[3] != "255" {
            return Err(ObsError::Parse("only 8-bit P5 PGM is supported".into()));
        }
        if fields[1] != Self::WIDTH.to_string() || fields[2] != Self::HEIGHT.to_string() {
            return Err(ObsError::Shape(format!("PGM is {}x{}", fields[1], fields[2])));
        }
        Self::from_pixels(bytes.get(pos..).unwrap_or_default().to_vec())
    }

    /// 64-bit FNV-1a of the pixel data.
    pub fn digest(&self) -> u64 {
        self.pixels.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PixelPalette {
    pub road: u8,
    pub river: u8,
    pub bank: u8,
    pub frog: u8,
    pub car: u8,
    pub log: u8,
    pub turtle: u8,
    pub lady_frog: u8,
    pub threshold: u8,
    pub min_object_area: usize,
}

impl Default for PixelPalette {
    fn default() -> Self {
        Self {
            road: 0,
            river: 32,
            bank: 16,
            frog: 124,
            car: 200,
            log: 160,
            turtle: 96,
            lady_frog: 220,
            threshold: 64,
            min_object_area: 5,
        }
    }
}

impl PixelPalette {
    pub fn value(&self, c: Category) -> u8 {
        match c {
            Category::Frog => self.frog,
            Category::Car => self.car,
            Category::Log => self.log,
            Category::Turtle => self.turtle,
            Category::LadyFrog => self.lady_frog,
        }
    }

    /// Category whose value is nearest to `v`.
    pub fn classify(&self, v: u8) -> Category {
        Category::ALL
            .into_iter()
            .min_by_key(|&c| (self.value(c) as i32 - v as i32).abs())
            .expect("non-empty")
    }

    pub fn validate(&self) -> Result<(), ObsError> {
        let fg: Vec<u8> = Category::ALL.iter().map(|&c| self.value(c)).collect();
        if fg.iter().any(|&v| v < self.threshold) {
            return Err(ObsError::Palette("foreground value below threshold".into()));
        }
        if [self.road, self.river, self.bank].iter().any(|&v| v >= self.threshold) {
            return Err(ObsError::Palette("background value at or above threshold".into()));
        }
        for (i, a) in fg.iter().enumerate() {
            if fg[i + 1..].contains(a) {
                return Err(ObsError::Palette(format!("duplicate foreground value {a}")));
            }
        }
        Ok(())
    }
}

/// Background bands plus filled object rectangles. Lane objects are drawn in
/// observation order and the frog last, on top.
pub fn render(state: &GameState, palette: &PixelPalette) -> Frame {
    let cfg = state.config();
    let ys = &cfg.lane_y_table;
    let mut frame = Frame::filled(palette.bank);
    for row in 0..ys.len() {
        let top = ys[row];
        let bottom = if row == 0 { Frame::HEIGHT as i32 } else { ys[row - 1] };
        let v = match cfg.row_kind(row) {
            RowKind::Road => palette.road,
            RowKind::River => palette.river,
            RowKind::Start | RowKind::Bank | RowKind::Home => palette.bank,
        };
        frame.fill_rect(0, top, Frame::WIDTH as i32, bottom - top, v);
    }
    let objs = objects(state);
    let (frogs, rest): (Vec<&GameObject>, Vec<&GameObject>) =
        objs.iter().partition(|o| o.category == Category::Frog);
    for o in rest.into_iter().chain(frogs) {
        frame.fill_rect(o.x, o.y, o.w, o.h, palette.value(o.category));
    }
    frame
}

/// ITU-R 601 luma of a 210×160×3 interleaved RGB buffer.
pub fn to_grayscale(rgb: &[u8], height: usize, width: usize) -> Result<Frame, ObsError> {
    if height != Frame::HEIGHT || width != Frame::WIDTH {
        return Err(ObsError::Shape(format!(
            "expected {}x{}x3, got {height}x{width}x3",
            Frame::HEIGHT,
            Frame::WIDTH
        )));
    }
    if rgb.len() != height * width * 3 {
        return Err(ObsError::Shape(format!(
            "buffer holds {} bytes, expected {}",
            rgb.len(),
            height * width * 3
        )));
    }
    let pixels = rgb
        .chunks_exact(3)
        .map(|p| {
            let y = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
            y.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    Frame::from_pixels(pixels)
}

/// Region kept by [`crop`]; everything else becomes `fill`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropRect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Default for CropRect {
    fn default() -> Self {
        CropRect { x: 0, y: 0, w: Frame::WIDTH, h: Frame::HEIGHT }
    }
}

/// Blanks pixels outside `rect` while keeping frame coordinates. The default
/// rectangle covers the whole frame, so the renderer's output passes unchanged.
pub fn crop(frame: &Frame, rect: CropRect, fill: u8) -> Frame {
    let mut out = frame.clone();
    for y in 0..Frame::HEIGHT {
        for x in 0..Frame::WIDTH {
            let inside = x >= rect.x && x < rect.x + rect.w && y >= rect.y && y < rect.y + rect.h;
            if !inside {
                out.set(x, y, fill);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Action, EnvConfig};

    fn bare() -> EnvConfig {
        EnvConfig { lanes: vec![], ..EnvConfig::default() }
    }

    #[test]
    fn default_palette_is_valid() {
        PixelPalette::default().validate().unwrap();
        let bad = PixelPalette { turtle: 10, ..PixelPalette::default() };
        assert!(bad.validate().is_err());
        let dup = PixelPalette { log: 200, ..PixelPalette::default() };
        assert!(dup.validate().is_err());
    }

    #[test]
    fn frog_only_frame_has_49_frog_pixels() {
        let s = GameState::new(bare()).unwrap();
        let f = render(&s, &PixelPalette::default());
        assert_eq!(f.pixels().iter().filter(|&&v| v == 124).count(), 49);
        assert_eq!(f.get(79, 171), 124);
        assert_eq!(f.get(85, 177), 124);
        assert_ne!(f.get(86, 177), 124);
    }

    #[test]
    fn empty_state_is_background_only() {
        let mut s = GameState::new(EnvConfig { lives: 1, ..bare() }).unwrap();
        while !s.is_terminal() {
            s.step(Action::Noop).unwrap();
        }
        let p = PixelPalette::default();
        let f = render(&s, &p);
        assert!(f.pixels().iter().all(|&v| [p.road, p.river, p.bank].contains(&v)));
    }

    #[test]
    fn background_bands_follow_row_kinds() {
        let s = GameState::new(EnvConfig::default()).unwrap();
        let p = PixelPalette::default();
        let f = render(&s, &p);
        // Column 0 is outside the playfield, so only background is drawn there.
        assert_eq!(f.get(0, 200), p.bank);
        assert_eq!(f.get(0, 150), p.road);
        assert_eq!(f.get(0, 100), p.bank);
        assert_eq!(f.get(0, 60), p.river);
        assert_eq!(f.get(0, 5), p.bank);
    }

    #[test]
    fn grayscale_conversion() {
        let white = vec![255u8; 210 * 160 * 3];
        assert!(to_grayscale(&white, 210, 160).unwrap().pixels().iter().all(|&v| v == 255));
        let blue: Vec<u8> = (0..210 * 160).flat_map(|_| [0, 0, 255]).collect();
        // 0.114 * 255 = 29.07
        assert!(to_grayscale(&blue, 210, 160).unwrap().pixels().iter().all(|&v| v == 29));
        assert!(matches!(to_grayscale(&white, 210, 159), Err(ObsError::Shape(_))));
        assert!(to_grayscale(&white[1..], 210, 160).is_err());
    }

    #[test]
    fn pgm_round_trip() {
        let s = GameState::new(EnvConfig::default()).unwrap();
        let f = render(&s, &PixelPalette::default());
        let bytes = f.to_pgm();
        assert!(bytes.starts_with(b"P5\n160 210\n255\n"));
        assert_eq!(Frame::from_pgm(&bytes).unwrap(), f);
        assert!(Frame::from_pgm(&bytes[..100]).is_err());
    }

    #[test]
    fn default_crop_is_identity() {
        let s = GameState::new(EnvConfig::default()).unwrap();
        let f = render(&s, &PixelPalette::default());
        assert_eq!(crop(&f, CropRect::default(), 0), f);
        let c = crop(&f, CropRect { x: 0, y: 0, w: 160, h: 100 }, 0);
        assert_eq!(c.get(80, 174), 0);
    }
}
