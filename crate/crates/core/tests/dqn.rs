use frogger_core::dqn::{batch_demo_share, train, MiniBenchmark, TrainConfig};
use frogger_core::env::EnvConfig;

#[test]
fn random_policy_scores_single_digits() {
    let cfg = TrainConfig {
        epsilon_start: 1.0,
        epsilon_end: 1.0,
        episodes: 30,
        learning_starts: 1_000_000,
        eval_every: 0,
        seed: 11,
        ..TrainConfig::default()
    };
    let out = train(&EnvConfig::default(), &cfg, Vec::new()).unwrap();
    assert_eq!(out.metrics.len(), 30);
    assert!(out.metrics.iter().all(|m| m.mean_loss.is_none()));
    let mean = out.metrics.iter().map(|m| m.reward).sum::<f64>() / 30.0;
    assert!(mean > 0.0 && mean < 10.0, "random mean {mean}");
}

#[test]
fn demo_share_of_batches_decays() {
    let mut b = MiniBenchmark::default();
    b.train.episodes = 120;
    b.train.eval_every = 0;
    let demos = b.demo_transitions().unwrap();
    let out = train(&b.env, &b.train, demos).unwrap();
    assert_eq!(out.initial_demo_fraction, 1.0);
    // Demonstrations fill the buffer before any episode, then get diluted.
    let (early, late) = batch_demo_share(&out.metrics, 0.1).unwrap();
    assert!(early > late, "early {early} late {late}");
    assert!(out.metrics.last().unwrap().demo_fraction < out.metrics[0].demo_fraction);
}

#[test]
fn benchmark_seed_runs_both_arms() {
    let mut b = MiniBenchmark::default();
    b.train.episodes = 20;
    b.seeds = vec![3];
    let demos = b.demo_transitions().unwrap();
    let r = b.run_seed(3, &demos).unwrap();
    assert_eq!((r.vanilla.episodes, r.demo.episodes), (20, 20));
    assert_eq!(r.seed, 3);
    assert!(r.demo_batch_share.is_some());
}
