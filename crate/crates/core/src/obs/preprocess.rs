use super::frame::Frame;
use super::ObsError;

pub const OUT_SIZE: usize = 84;
pub const STACK: usize = 4;

/// Source pixels and weights contributing to each output cell along one axis.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let lo = i as f64 * scale;
            let hi = (i + 1) as f64 * scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            (first..last)
                .filter_map(|k| {
                    let overlap = (hi.min(k as f64 + 1.0) - lo.max(k as f64)).max(0.0);
                    (overlap > 0.0).then_some((k, overlap / scale))
                })
                .collect()
        })
        .collect()
}

/// Area-averages one frame down to 84×84 with intensities scaled to `[0, 1]`.
pub fn downsample(frame: &Frame) -> Vec<f32> {
    let wy = area_weights(Frame::HEIGHT, OUT_SIZE);
    let wx = area_weights(Frame::WIDTH, OUT_SIZE);
    let mut out = Vec::with_capacity(OUT_SIZE * OUT_SIZE);
    for ys in &wy {
        for xs in &wx {
            let mut acc = 0.0;
            for &(y, ay) in ys {
                for &(x, ax) in xs {
                    acc += ay * ax * frame.get(x, y) as f64;
                }
            }
            out.push((acc / 255.0).clamp(0.0, 1.0) as f32);
        }
    }
    out
}

/// Stacks four consecutive frames into an 84×84×4 tensor (height, width,
/// time), oldest frame in channel 0.
pub fn preprocess(frames: &[Frame]) -> Result<Vec<f32>, ObsError> {
    if frames.len() != STACK {
        return Err(ObsError::Shape(format!("expected {STACK} frames, got {}", frames.len())));
    }
    let planes: Vec<Vec<f32>> = frames.iter().map(downsample).collect();
    let mut out = Vec::with_capacity(OUT_SIZE * OUT_SIZE * STACK);
    for i in 0..OUT_SIZE * OUT_SIZE {
        for plane in &planes {
            out.push(plane[i]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for (src, dst) in [(210, 84), (160, 84)] {
            for cell in area_weights(src, dst) {
                let s: f64 = cell.iter().map(|(_, w)| w).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_frames() {
        let zeros = vec![Frame::filled(0); 4];
        let t = preprocess(&zeros).unwrap();
        assert_eq!(t.len(), 84 * 84 * 4);
        assert!(t.iter().all(|&v| v == 0.0));
        let full = vec![Frame::filled(255); 4];
        assert!(preprocess(&full).unwrap().iter().all(|&v| (v - 1.0).abs() < 1e-6));
    }

    #[test]
    fn identical_frames_give_identical_channels() {
        let mut f = Frame::filled(16);
        f.fill_rect(79, 171, 7, 7, 124);
        f.fill_rect(10, 50, 40, 7, 160);
        let t = preprocess(&vec![f; 4]).unwrap();
        for px in t.chunks_exact(4) {
            assert!(px.iter().all(|&v| v == px[0]));
        }
    }

    #[test]
    fn channel_order_is_time_order() {
        let frames: Vec<Frame> = (0..4).map(|i| Frame::filled(i * 50)).collect();
        let t = preprocess(&frames).unwrap();
        let expected: Vec<f32> = (0..4).map(|i| (i * 50) as f32 / 255.0).collect();
        for (got, want) in t[..4].iter().zip(expected) {
            assert!((got - want).abs() < 1e-6);
        }
    }

    #[test]
    fn wrong_count_is_an_error() {
        assert!(preprocess(&vec![Frame::filled(0); 3]).is_err());
    }

    #[test]
    fn block_average_matches_manual_sum() {
        // Output cell (0, 0) covers rows [0, 2.5) and columns [0, 160/84).
        let mut f = Frame::filled(0);
        f.set(0, 0, 255);
        let plane = downsample(&f);
        let sy = 210.0 / 84.0;
        let sx = 160.0 / 84.0;
        let want = 1.0 / (sy * sx);
        assert!((plane[0] as f64 - want).abs() < 1e-6);
    }
}
