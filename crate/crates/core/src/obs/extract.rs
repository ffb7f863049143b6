use super::frame::{Frame, PixelPalette};
use super::objects::{Category, GameObject};
use crate::env::FROG_SIZE;

/// A 4-connected foreground component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub area: usize,
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    /// Most frequent intensity inside the component; ties go to the lower value.
    pub dominant: u8,
}

impl Component {
    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }
}

/// Binarizes at `threshold` and labels 4-connected components in scan order.
pub fn components(frame: &Frame, threshold: u8) -> Vec<Component> {
    let (w, h) = (Frame::WIDTH, Frame::HEIGHT);
    let px = frame.pixels();
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    for start in 0..w * h {
        if seen[start] || px[start] < threshold {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut hist = [0usize; 256];
        let (mut x0, mut y0, mut x1, mut y1) = (w, h, 0, 0);
        let mut area = 0;
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            area += 1;
            hist[px[i] as usize] += 1;
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
            let mut visit = |j: usize| {
                if !seen[j] && px[j] >= threshold {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        let dominant = (0..256).max_by_key(|&v| (hist[v], std::cmp::Reverse(v))).unwrap() as u8;
        out.push(Component { area, x0, y0, x1, y1, dominant });
    }
    out
}

/// Frame-to-objects pipeline: binarize, label, drop specks, box, classify.
///
/// A solid 7×7 block of the frog intensity is always reported as the frog.
/// Everything else is classified by its dominant intensity. Overlapping
/// objects merge into one component, so the result is best-effort on noisy
/// or occluded frames.
pub fn extract(frame: &Frame, palette: &PixelPalette) -> Vec<GameObject> {
    let mut frogs = Vec::new();
    let mut rest = Vec::new();
    for c in components(frame, palette.threshold) {
        if c.area < palette.min_object_area {
            continue;
        }
        let (w, h) = (c.width() as i32, c.height() as i32);
        let is_frog_block = w == FROG_SIZE
            && h == FROG_SIZE
            && c.area == (FROG_SIZE * FROG_SIZE) as usize
            && c.dominant == palette.frog;
        let category = if is_frog_block { Category::Frog } else { palette.classify(c.dominant) };
        let obj = GameObject::new(category, c.x0 as i32, c.y0 as i32, w, h);
        if category == Category::Frog {
            frogs.push(obj);
        } else {
            rest.push(obj);
        }
    }
    frogs.extend(rest);
    frogs
}
