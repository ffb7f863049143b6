use frogger_core::dqn::{encode_episode, EncoderConfig, TrainConfig};
use frogger_core::env::{Action, EnvConfig};
use frogger_core::llm::Trajectory;
use frogger_core::replay::{ingest_trajectory, ReplayError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> TrainConfig {
    TrainConfig { encoder: EncoderConfig { slots: 12, ..EncoderConfig::default() }, ..TrainConfig::default() }
}

#[test]
fn matches_direct_encoding() {
    let env = EnvConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dir = tempfile::tempdir().unwrap();
    let mut total = 0;
    for k in 0..10 {
        let plan: Vec<Action> = (0..40).map(|_| Action::ALL[rng.gen_range(0..5)]).collect();
        let traj = Trajectory::from_plan(&env, &plan).unwrap();
        let path = dir.path().join(format!("ep{k}.jsonl"));
        traj.save(&path).unwrap();

        let got = ingest_trajectory(&path, &cfg()).unwrap();
        let want = encode_episode(&env, &cfg(), &plan[..traj.actions()]).unwrap();
        assert_eq!(got.len(), traj.actions());
        assert_eq!(got, want);
        assert!(got.last().unwrap().done && got.iter().rev().skip(1).all(|t| !t.done));
        assert!(got.iter().all(|t| t.is_demo));
        total += got.len();
    }
    assert!(total > 0);
}

#[test]
fn corrupted_line_is_reported() {
    let env = EnvConfig::default();
    let traj = Trajectory::from_plan(&env, &[Action::Up, Action::Up, Action::Left]).unwrap();
    let mut lines: Vec<String> = traj.to_jsonl().lines().map(str::to_string).collect();
    lines[3] = lines[3].replace("Car at", "Bus at");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    std::fs::write(&path, lines.join("\n")).unwrap();
    match ingest_trajectory(&path, &cfg()) {
        Err(ReplayError::Ingest { line, .. }) => assert_eq!(line, 4),
        other => panic!("unexpected {other:?}"),
    }
}
