use frogger_core::env::{Action, EnvConfig, GameState};
use frogger_core::obs::{extract, objects, render, Frame, GameObject, PixelPalette};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// True when two boxes overlap or touch along an edge (4-adjacency).
fn touching(a: &GameObject, b: &GameObject) -> bool {
    let sep_x = a.x + a.w < b.x || b.x + b.w < a.x;
    let sep_y = a.y + a.h < b.y || b.y + b.h < a.y;
    let corner_only = (a.x + a.w == b.x || b.x + b.w == a.x) && (a.y + a.h == b.y || b.y + b.h == a.y);
    !(sep_x || sep_y || corner_only)
}

fn separated(objs: &[GameObject]) -> bool {
    objs.iter()
        .enumerate()
        .all(|(i, a)| objs[i + 1..].iter().all(|b| !touching(a, b)))
}

fn sorted(mut v: Vec<GameObject>) -> Vec<GameObject> {
    v.sort();
    v
}

fn random_state(rng: &mut ChaCha8Rng) -> GameState {
    let cfg = EnvConfig { seed: rng.gen(), ..EnvConfig::default() };
    let mut s = GameState::new(cfg).unwrap();
    for _ in 0..rng.gen_range(0..40) {
        if s.is_terminal() {
            break;
        }
        s.step(Action::ALL[rng.gen_range(0..5)]).unwrap();
    }
    if !s.is_terminal() {
        let rows = s.config().lane_y_table.len();
        s.place_frog(rng.gen_range(8.0..145.0f64).floor(), rng.gen_range(0..rows));
    }
    s
}

#[test]
fn extract_inverts_render_on_separated_states() {
    let palette = PixelPalette::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 1000 {
        attempts += 1;
        assert!(attempts < 100_000, "could not sample enough separated states");
        let s = random_state(&mut rng);
        let objs = objects(&s);
        if !separated(&objs) {
            continue;
        }
        let got = extract(&render(&s, &palette), &palette);
        assert_eq!(sorted(got), sorted(objs), "state {:x}", s.state_hash());
        checked += 1;
    }
}

#[test]
fn four_pixel_blobs_are_always_dropped() {
    let palette = PixelPalette::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let mut f = Frame::filled(palette.road);
        let (x, y) = (rng.gen_range(0..150), rng.gen_range(0..200));
        let value = [palette.car, palette.log, palette.turtle, palette.frog][rng.gen_range(0..4)];
        if rng.gen() {
            f.fill_rect(x, y, 2, 2, value);
        } else {
            f.fill_rect(x, y, 4, 1, value);
        }
        assert!(extract(&f, &palette).is_empty());
    }
}

#[test]
fn default_start_goldens() {
    let s = GameState::new(EnvConfig::default()).unwrap();
    let frame = render(&s, &PixelPalette::default());
    assert_eq!(s.state_hash(), STATE_HASH_GOLDEN, "got {:#x}", s.state_hash());
    assert_eq!(frame.digest(), FRAME_DIGEST_GOLDEN, "got {:#x}", frame.digest());
}

const STATE_HASH_GOLDEN: u64 = 0xce76_ab7a_45f1_577d;
const FRAME_DIGEST_GOLDEN: u64 = 0xc823_ad8c_3918_a951;
