//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Built with `harness = false`.

use std::error::Error;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use frogger_core::dqn::{grad_check, run_benchmark, LossBatch, MiniBenchmark, QNet, N_ACTIONS};
use frogger_core::env::{Action, EnvConfig, GameState, RowKind, Snapshot, FROG_SIZE};
use frogger_core::llm::{
    build_prompt, build_reflection_prompt, parse_action, run_reflexion, token_reward_correlation, Cassette,
    CassetteTransport, EpisodeOptions, PastSteps, PromptConfig, PromptMode, Reward, ScriptedTransport,
    Trajectory, TrajectoryStep,
};
use frogger_core::obs::{extract, objects, render, Frame, GameObject, PixelPalette};
use frogger_core::replay::{priority, PrioritizedBuffer, Transition};
use frogger_core::search::{brute_dfs, cost_curve, replay_plan_noisy, SearchConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, Box<dyn Error>>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+).into());
        }
    };
}

fn within(t: Instant, limit: Duration, what: &str) -> Result<(), Box<dyn Error>> {
    ensure!(t.elapsed() < limit, "{what} took {:.1?}, limit {limit:?}", t.elapsed());
    Ok(())
}

fn determinism() -> Outcome {
    let t = Instant::now();
    let cfg = EnvConfig { seed: 7, sticky_prob: 0.25, ..EnvConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut state = GameState::new(cfg.clone())?;
    // (snapshot, actions taken after it) per checkpoint, grouped by episode.
    let mut pending: Vec<(Snapshot, Vec<Action>)> = Vec::new();
    let (mut checked, mut episodes) = (0, 0);
    let mut flush = |pending: &mut Vec<(Snapshot, Vec<Action>)>, end: u64| -> Result<(), Box<dyn Error>> {
        for (snap, actions) in pending.drain(..) {
            let mut s = snap.restore()?;
            for a in actions {
                s.step(a)?;
            }
            ensure!(s.state_hash() == end, "replay from snapshot diverged");
            checked += 1;
        }
        Ok(())
    };
    for step in 0..10_000 {
        if step % 100 == 0 {
            pending.push((state.snapshot(), Vec::new()));
        }
        let a = Action::ALL[rng.gen_range(0..5)];
        state.step(a)?;
        for (_, actions) in pending.iter_mut() {
            actions.push(a);
        }
        if state.is_terminal() {
            flush(&mut pending, state.state_hash())?;
            episodes += 1;
            state = GameState::new(EnvConfig { seed: 7 + episodes, ..cfg.clone() })?;
        }
    }
    flush(&mut pending, state.state_hash())?;
    ensure!(checked == 100, "checked {checked} snapshots");
    within(t, Duration::from_secs(10), "determinism")?;
    Ok(format!("{checked} snapshots over {episodes} finished episodes, {:.1?}", t.elapsed()))
}

fn no_lanes() -> EnvConfig {
    EnvConfig { lanes: vec![], ..EnvConfig::default() }
}

/// Default layout with the road traffic removed; the river keeps its platforms.
fn river_only() -> EnvConfig {
    let d = EnvConfig::default();
    EnvConfig { lanes: d.lanes.iter().filter(|l| l.object_category.is_platform()).cloned().collect(), ..d }
}

fn rewards() -> Outcome {
    let cfg = river_only();
    let river = (1..cfg.home_row()).find(|&r| cfg.row_kind(r) == RowKind::River).ok_or("no river row")?;
    let mut s = GameState::new(cfg.clone())?;
    // Rows below the river are empty of traffic: one point per new row.
    for row in 1..river {
        let r = s.step(Action::Up)?;
        ensure!(r.reward == 1.0, "row {row}: reward {}", r.reward);
    }
    ensure!(s.step(Action::Down)?.reward == 0.0 && s.step(Action::Up)?.reward == 0.0, "revisited row scored");
    // Wait until no platform in the river row comes within one tick of the
    // frog's column, then jump in.
    let lane = cfg.lanes.iter().find(|l| l.row == river).ok_or("no river lane")?;
    let reach = lane.speed.ceil() as i32 + 1;
    let clear = |s: &GameState| {
        let (lo, hi) = (s.frog_x() - reach, s.frog_x() + FROG_SIZE + reach);
        s.lane_pieces().iter().filter(|p| p.row == river).all(|p| p.x + p.w < lo || p.x > hi)
    };
    let mut waited = 0;
    while !clear(&s) {
        s.step(Action::Noop)?;
        waited += 1;
        ensure!(waited < 1000 && s.max_row_this_life() == river - 1, "no gap in the river row");
    }
    let r = s.step(Action::Up)?;
    ensure!(r.info.life_lost && r.reward == 0.0, "river without a platform did not kill");
    ensure!((s.frog_x(), s.frog_y()) == (79, 171), "frog not reset: {:?}", (s.frog_x(), s.frog_y()));
    ensure!(s.lives_left() == cfg.lives - 1 && s.timer_remaining() == cfg.timer_ticks, "life or timer not reset");
    ensure!(s.step(Action::Up)?.reward == 1.0, "new life does not re-earn rows");

    let cfg = no_lanes();
    let road_rows = cfg.home_row() - 1;
    let bay_x = |b: usize| ((cfg.bay_xs[b][0] + cfg.bay_xs[b][1]) / 2 - 3) as f64;
    let mut s = GameState::new(cfg.clone())?;
    s.place_frog(bay_x(2), road_rows);
    let r = s.step(Action::Up)?;
    ensure!(r.reward == cfg.bay_entry_reward && r.info.bay_entered == Some(2), "bay fill: {:?}", r);
    ensure!(s.bays_filled() == [false, false, true, false, false], "bay not marked");
    ensure!((s.frog_x(), s.frog_y()) == (79, 171), "frog not reset after bay");
    s.place_frog(bay_x(2), road_rows);
    ensure!(s.step(Action::Up)?.info.life_lost, "entering a filled bay did not kill");

    let mut s = GameState::new(cfg.clone())?;
    for b in 0..4 {
        s.fill_bay(b);
    }
    let timer = 101;
    s.set_timer(timer);
    s.place_frog(bay_x(4), road_rows);
    let r = s.step(Action::Up)?;
    // The tick's decrement happens before the bonus is read.
    let seconds = ((timer - 1) / cfg.ticks_per_second) as f64;
    let want = cfg.bay_entry_reward + 100.0 + 2.0 * seconds;
    ensure!(r.reward == want, "all-bays reward {} want {want}", r.reward);
    ensure!(r.info.level_completed && s.level() == 1 && s.bays_filled() == [false; 5], "level not completed");
    Ok(format!("rows, death reset, bay {} and all-bays {want} verified", cfg.bay_entry_reward))
}

fn touching(a: &GameObject, b: &GameObject) -> bool {
    let sep_x = a.x + a.w < b.x || b.x + b.w < a.x;
    let sep_y = a.y + a.h < b.y || b.y + b.h < a.y;
    let corner = (a.x + a.w == b.x || b.x + b.w == a.x) && (a.y + a.h == b.y || b.y + b.h == a.y);
    !(sep_x || sep_y || corner)
}

fn extraction() -> Outcome {
    let t = Instant::now();
    let palette = PixelPalette::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut checked, mut drawn) = (0, 0);
    while checked < 1000 {
        drawn += 1;
        ensure!(drawn < 100_000, "too few separated states");
        let mut s = GameState::new(EnvConfig { seed: rng.gen(), ..EnvConfig::default() })?;
        for _ in 0..rng.gen_range(0..40) {
            if s.is_terminal() {
                break;
            }
            s.step(Action::ALL[rng.gen_range(0..5)])?;
        }
        if !s.is_terminal() {
            let rows = s.config().lane_y_table.len();
            s.place_frog(rng.gen_range(8.0..145.0f64).floor(), rng.gen_range(0..rows));
        }
        let mut want = objects(&s);
        if want.iter().enumerate().any(|(i, a)| want[i + 1..].iter().any(|b| touching(a, b))) {
            continue;
        }
        let mut got = extract(&render(&s, &palette), &palette);
        want.sort();
        got.sort();
        ensure!(got == want, "state {:#x}: extracted objects differ", s.state_hash());
        checked += 1;
    }
    for i in 0..200 {
        let mut f = Frame::filled(palette.road);
        let (x, y) = (rng.gen_range(0..150), rng.gen_range(0..200));
        if i % 2 == 0 {
            f.fill_rect(x, y, 2, 2, palette.car);
        } else {
            f.fill_rect(x, y, 4, 1, palette.log);
        }
        ensure!(extract(&f, &palette).is_empty(), "4-px blob at ({x}, {y}) kept");
    }
    within(t, Duration::from_secs(30), "extraction")?;
    Ok(format!("{checked} states round-tripped, 200 blobs dropped, {:.1?}", t.elapsed()))
}

fn cost_explosion() -> Outcome {
    let t = Instant::now();
    let root = GameState::new(EnvConfig::default())?;
    let pts = cost_curve(&root, 8, &SearchConfig::default())?;
    ensure!(pts.iter().all(|p| p.reached), "not every score reached");
    for w in pts.windows(2) {
        ensure!(w[1].nodes >= w[0].nodes, "nodes drop from score {} to {}", w[0].score, w[1].score);
    }
    let nodes = |score: u32| pts.iter().find(|p| p.score == score).map(|p| p.nodes).unwrap_or(0);
    let ratio = nodes(7) as f64 / nodes(6) as f64;
    ensure!(ratio >= 3.0, "nodes(7)/nodes(6) = {ratio:.2}");
    ensure!(nodes(8) <= 1_000_000, "score 8 needed {} nodes", nodes(8));
    within(t, Duration::from_secs(300), "cost curve")?;
    Ok(format!("nodes(6) {} nodes(7) {} ratio {ratio:.2} nodes(8) {}, {:.1?}", nodes(6), nodes(7), nodes(8), t.elapsed()))
}

fn sticky_fragility() -> Outcome {
    let root = GameState::new(EnvConfig::default())?;
    let r = brute_dfs(&root, &SearchConfig { target_score: 6.0, ..SearchConfig::default() })?;
    ensure!(r.achieved_score >= 6.0, "deterministic plan scored {}", r.achieved_score);
    ensure!(replay_plan_noisy(&root, &r.plan, 0.0, 0)? == r.achieved_score, "deterministic replay differs");
    let mut ok = 0;
    for seed in 0..200 {
        if replay_plan_noisy(&root, &r.plan, 0.25, seed)? >= 6.0 {
            ok += 1;
        }
    }
    let rate = ok as f64 / 200.0;
    ensure!(rate < 0.8, "success rate {rate:.3} under sticky actions");
    Ok(format!("plan of {} actions succeeds in {ok}/200 sticky replays", r.plan.len()))
}

fn per_statistics() -> Outcome {
    let t = Instant::now();
    let tr = |reward: f64| Transition {
        state: vec![0.0; 2],
        action: Action::Noop,
        reward,
        next_state: vec![0.0; 2],
        done: false,
        is_demo: true,
    };
    let mut b = PrioritizedBuffer::new(2, 2)?;
    b.push(tr(0.0), Some(3.0))?;
    b.push(tr(1.0), Some(1.0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 100_000;
    let mut first = 0;
    for _ in 0..n {
        if b.sample(1, 0.4, &mut rng)?.transitions[0].reward == 0.0 {
            first += 1;
        }
    }
    let freq = first as f64 / n as f64;
    ensure!((freq - 0.75).abs() <= 0.01, "3:1 frequency {freq}");
    let p = priority(0.5, 0.01, 0.6)?;
    ensure!((p - 0.6677).abs() <= 1e-4, "priority {p}");
    let mut big = PrioritizedBuffer::new(8000, 2)?;
    big.preload_demos(vec![tr(0.0); 1657])?;
    let occ = format!("{:.1}%", big.occupancy() * 100.0);
    ensure!(occ == "20.7%", "occupancy {occ}");
    ensure!(big.iter().all(|(_, p, _)| p == 5.0), "demo priority not 5.0");
    within(t, Duration::from_secs(10), "PER checks")?;
    Ok(format!("frequency {freq:.4}, priority {p:.4}, occupancy {occ}"))
}

fn gradients() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input = rng.gen_range(3..12);
        let hidden = [rng.gen_range(4..16), rng.gen_range(4..16)];
        let net = QNet::new(input, &hidden, seed);
        ensure!(net.param_count() <= 2000, "instance {seed} too large");
        let n = rng.gen_range(1..10);
        let batch = LossBatch {
            inputs: (0..n).map(|_| (0..input).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
            actions: (0..n).map(|_| Action::ALL[rng.gen_range(0..N_ACTIONS)]).collect(),
            targets: (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect(),
            weights: (0..n).map(|_| rng.gen_range(0.1..1.0)).collect(),
        };
        let e = grad_check(&net, &batch, 1.0)?;
        ensure!(e < 1e-4, "instance {seed}: relative error {e:e}");
        worst = worst.max(e);
    }
    within(t, Duration::from_secs(60), "gradient checks")?;
    Ok(format!("max relative error {worst:.2e} over 10 instances"))
}

fn sample_efficiency() -> Outcome {
    let t = Instant::now();
    let bench = MiniBenchmark::default();
    let rows = run_benchmark(&bench)?;
    let (mut faster, mut higher) = (0, 0);
    let mut lines = Vec::new();
    for r in &rows {
        let never = usize::MAX;
        let (v, d) = (r.vanilla.episodes_to_threshold.unwrap_or(never), r.demo.episodes_to_threshold.unwrap_or(never));
        if d < v {
            faster += 1;
        }
        if r.demo.final_mean > r.vanilla.final_mean {
            higher += 1;
        }
        let show = |x: Option<usize>| x.map(|n| n.to_string()).unwrap_or_else(|| "never".into());
        lines.push(format!(
            "seed {}: to-threshold {} vs {}, final {:.2} vs {:.2}",
            r.seed,
            show(r.demo.episodes_to_threshold),
            show(r.vanilla.episodes_to_threshold),
            r.demo.final_mean,
            r.vanilla.final_mean
        ));
    }
    for l in &lines {
        println!("      {l} (demo vs vanilla)");
    }
    let n = rows.len();
    ensure!(faster * 5 >= 4 * n, "demo reached the threshold sooner in {faster}/{n} seeds");
    ensure!(higher * 5 >= 4 * n, "demo final-window mean higher in {higher}/{n} seeds");
    within(t, Duration::from_secs(1800), "benchmark")?;
    Ok(format!("sooner {faster}/{n}, higher {higher}/{n}, {:.0?}", t.elapsed()))
}

const EXPERT: &str = include_str!("fixtures/expert_step55.txt");
const EXPLORE: &str = include_str!("fixtures/explore_step56.txt");
const DEVELOPER: &str = include_str!("fixtures/reflection_developer.txt");
const RESPONSE_UP: &str = include_str!("fixtures/response_up.txt");
const RESPONSE_LEFT: &str = include_str!("fixtures/response_left.txt");
const FEEDBACK: &str = include_str!("fixtures/reflection_output.json");

fn record(step: usize, action: Action, reward: Reward, line: &str) -> TrajectoryStep {
    let objects_text = line.split_once("game objects: ").map(|(_, o)| o.to_string()).unwrap_or_default();
    TrajectoryStep { step, action, reward, objects_text, ..TrajectoryStep::default() }
}

fn prompt_fidelity() -> Outcome {
    let line = EXPERT.lines().next().unwrap_or_default();
    let history = vec![record(55, Action::Noop, Reward::Int(0), line)];
    let cfg = PromptConfig { past_steps: PastSteps::Last(0), show_rewards: true, ..PromptConfig::default() };
    ensure!(build_prompt(&history, 55, &cfg)[0].content == EXPERT, "expert prompt differs");

    let lines: Vec<&str> = EXPLORE.lines().collect();
    let history =
        vec![record(2, Action::Noop, Reward::Int(0), lines[0]), record(56, Action::Up, Reward::Float(0.0), lines[1])];
    let cfg = PromptConfig { past_steps: PastSteps::All, show_rewards: true, mode: PromptMode::Explore, ..cfg };
    ensure!(build_prompt(&history, 56, &cfg)[0].content == EXPLORE, "explore prompt differs");

    let t = Trajectory::from_plan(&EnvConfig::default(), &[Action::Up])?;
    let msgs = build_reflection_prompt(&t)?;
    ensure!(msgs[0].content == DEVELOPER, "reflection developer message differs");

    let up = parse_action(RESPONSE_UP)?.0;
    let left = parse_action(RESPONSE_LEFT)?.0;
    ensure!(up == Action::Up && left == Action::Left, "parsed {up} and {left}");
    Ok("expert, explore and reflection goldens byte-equal; UP and LEFT recovered".into())
}

fn offline_loop() -> Outcome {
    let env = EnvConfig::mini();
    let cfg = PromptConfig::default();
    let opts = EpisodeOptions { step_cap: 80, ..EpisodeOptions::default() };
    let replies: Vec<String> = ["UP", "LEFT", "UP", "NOOP", "UP", "RIGHT", "UP"]
        .iter()
        .map(|a| format!(r#"{{"game_state": "", "reasoning": "", "action": "{a}"}}"#))
        .collect();
    let game = ScriptedTransport::new(replies).with_critique(FEEDBACK.to_string());
    let mut rec = CassetteTransport::record(Box::new(game));
    let recorded = run_reflexion(&env, &cfg, &mut rec, opts)?;
    let dir = tempfile::tempdir()?;
    let tape = dir.path().join("cassette.json");
    rec.cassette.save(&tape)?;

    let mut files = Vec::new();
    for run in 0..2 {
        let loaded = Cassette::load(&tape)?;
        let mut play = CassetteTransport::replay(loaded);
        let o = run_reflexion(&env, &cfg, &mut play, opts)?;
        ensure!(o == recorded, "replay {run} differs from the recording");
        let mut bytes = Vec::new();
        for (name, traj) in [("round1", &o.first), ("round2", &o.second)] {
            let p = dir.path().join(format!("{run}_{name}.jsonl"));
            traj.save(&p)?;
            bytes.push(std::fs::read(&p)?);
        }
        files.push(bytes);
    }
    ensure!(files[0] == files[1], "trajectory files differ between replays");
    let r = token_reward_correlation(&[(1.0, 1.0), (2.0, 3.0), (3.0, 2.0), (4.0, 4.0)])?;
    ensure!((r - 0.8).abs() <= 1e-9, "correlation {r}");
    Ok(format!(
        "two replays identical ({} + {} actions), r = {r:.12}",
        recorded.first.actions(),
        recorded.second.actions()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("environment determinism and snapshots", determinism),
        ("reward structure", rewards),
        ("render/extract round trip", extraction),
        ("brute cost explosion", cost_explosion),
        ("sticky-action fragility", sticky_fragility),
        ("prioritized replay statistics", per_statistics),
        ("gradient correctness", gradients),
        ("demo-guided sample efficiency", sample_efficiency),
        ("prompt fidelity", prompt_fidelity),
        ("offline LLM loop", offline_loop),
    ];
    let only: Vec<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect())
        .unwrap_or_default();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()).into())
        });
        match outcome {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
