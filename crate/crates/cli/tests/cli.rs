use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use frogger_core::dqn::{metrics_csv, EpisodeMetrics};
use frogger_core::env::{Action, EnvConfig, GameState};
use frogger_core::llm::PromptConfig;

fn frogger(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frogger")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn brute_target_one_is_a_single_up() {
    // Oracle: among single actions from the start state only UP scores.
    let root = GameState::new(EnvConfig::default()).unwrap();
    let scoring: Vec<u8> = Action::ALL
        .iter()
        .filter(|&&a| root.clone().step(a).unwrap().reward >= 1.0)
        .map(|a| a.code())
        .collect();
    assert_eq!(scoring, vec![Action::Up.code()]);

    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[search]\ntarget_score = 1.0\n");
    let out = dir.path().join("out");
    let o = frogger(&["brute", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let plan: Vec<u8> = serde_json::from_str(&fs::read_to_string(out.join("brute_seed0/plan.json")).unwrap()).unwrap();
    assert_eq!(plan, scoring);
    assert!(out.join("brute_seed0/cost_curve.csv").exists());
    assert!(out.join("brute_seed0/plan.jsonl").exists());
}

#[test]
fn brute_budget_exhausted_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[brute]\ncurve = false\n[search]\ntarget_score = 8.0\nmax_expansions = 1\n");
    let o = frogger(&["brute", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[search\ntarget_score = ");
    let o = frogger(&["brute", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    let wrong_kind = write(dir.path(), "k.toml", "kind = \"llm\"\n");
    assert_eq!(frogger(&["brute", "--config", &wrong_kind]).status.code(), Some(1));
    assert_eq!(frogger(&["brute", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(frogger(&["--help"]).status.code(), Some(0));
}

const LLM_CFG: &str = r#"
[env]
preset = "mini"
[llm]
step_cap = 12
responses = ['{"action": "UP"}', '{"action": "LEFT"}', 'no json here', '{"action": 1}']
critique = '{"reasoning": "r", "observations": ["died early"], "advices": ["wait for gaps"]}'
"#;

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn scripted_llm_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", LLM_CFG);
    let cassette = dir.path().join("tape.json");
    let mut runs = Vec::new();
    for i in 0..3 {
        let out = dir.path().join(format!("o{i}"));
        let o = frogger(&["llm", "--config", &cfg, "--out", out.to_str().unwrap(), "--cassette", cassette.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        runs.push((stdout(&o), read_all(&out.join("llm"))));
    }
    // First run records the cassette, later runs replay it.
    assert!(cassette.exists());
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[1], runs[2]);
    let summary = &runs[0].0;
    assert!(summary.starts_with("config,seed,round,episodic_reward,steps,completion_tokens_median,parse_failures"));
    assert_eq!(summary.lines().count(), 2);
}

#[test]
fn grid_expands_to_six_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", LLM_CFG);
    let out = dir.path().join("o");
    let o = frogger(&["llm", "--config", &cfg, "--grid", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let labels: Vec<String> = PromptConfig::default().grid().iter().map(|c| c.label()).collect();
    assert_eq!(labels.len(), 6);
    let s = stdout(&o);
    let rows: Vec<&str> = s.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    for (row, label) in rows.iter().zip(&labels) {
        assert!(row.starts_with(&format!("{label},")), "{row}");
        assert!(out.join(format!("llm/{label}_seed0.jsonl")).exists());
    }
}

#[test]
fn reflection_writes_two_trajectories_and_feedback() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", LLM_CFG);
    let out = dir.path().join("o");
    let o = frogger(&["llm", "--config", &cfg, "--reflection", "--seed", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let label = PromptConfig::default().label();
    let llm = out.join("llm");
    assert!(llm.join(format!("{label}_seed4.jsonl")).exists());
    assert!(llm.join(format!("{label}_seed4_round2.jsonl")).exists());
    let fb: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(llm.join(format!("{label}_seed4_feedback.json"))).unwrap()).unwrap();
    assert_eq!(fb["advices"][0], "wait for gaps");
    let s = stdout(&o);
    assert_eq!(s.lines().count(), 3);
    assert!(s.lines().nth(2).unwrap().contains(",4,2,"));
}

#[test]
fn transport_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", LLM_CFG);
    // An empty cassette replays nothing, so the first request misses.
    let tape = write(dir.path(), "tape.json", "{\"entries\": {}}");
    let o = frogger(&["llm", "--config", &cfg, "--cassette", &tape, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

fn metrics(rewards: &[f64]) -> String {
    let rows: Vec<EpisodeMetrics> = rewards
        .iter()
        .enumerate()
        .map(|(i, &r)| EpisodeMetrics {
            episode: i,
            steps: 10,
            reward: r,
            mean_loss: None,
            epsilon: 1.0,
            demo_fraction: 0.0,
            batch_demo_fraction: None,
            eval_reward: Some(r),
        })
        .collect();
    metrics_csv(&rows)
}

#[test]
fn report_relative_difference() {
    let dir = tempfile::tempdir().unwrap();
    // Final 10% of 20 episodes is the last two.
    let mut a = vec![1.0; 18];
    a.extend([20.0, 28.0]);
    let mut b = vec![1.0; 18];
    b.extend([15.0, 15.0]);
    let (final_a, final_b) = (24.0, 15.0);
    let expected = format!("{:+.1}%", (final_a - final_b) / final_b * 100.0);
    let pa = write(dir.path(), "a.csv", &metrics(&a));
    let pb = write(dir.path(), "b.csv", &metrics(&b));
    let o = frogger(&["report", &pa, &pb, "--threshold", "12"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains(&format!("relative difference: {expected}")), "{s}");
    assert_eq!(expected, "+60.0%");
    // Both runs first evaluate >= 12 on episode index 18.
    assert_eq!(s.lines().filter(|l| l.split_whitespace().nth(3) == Some("19")).count(), 2, "{s}");

    let o = frogger(&["report", &pa, &pa]);
    assert!(stdout(&o).contains("relative difference: +0.0%"));
}

#[test]
fn ingest_and_analyze_read_brute_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[env]\npreset = \"mini\"\n[search]\ntarget_score = 4.0\n[brute]\ncurve = false\n[train]\nbuffer_capacity = 100\n",
    );
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();
    assert_eq!(frogger(&["brute", "--config", &cfg, "--out", o]).status.code(), Some(0));
    let plan: Vec<u8> = serde_json::from_str(&fs::read_to_string(out.join("brute_seed0/plan.json")).unwrap()).unwrap();
    let demos = format!("{o}/brute_seed*/plan.jsonl");
    let r = frogger(&["ingest", "--config", &cfg, "--demos", &demos, "--out", o]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let n = plan.len();
    let expected = format!("transitions {n}, capacity 100, occupancy {:.1}%", n as f64);
    assert!(stdout(&r).contains(&expected), "{}", stdout(&r));
    let csv = fs::read_to_string(out.join("ingest/buffer.csv")).unwrap();
    assert_eq!(csv.lines().count(), n + 1);

    let r = frogger(&["analyze", &demos, "--out", o]);
    assert_eq!(r.status.code(), Some(0));
    // One trajectory cannot define a correlation.
    assert!(stdout(&r).contains("pearson r undefined"));
    assert!(out.join("analyze/token_reward.csv").exists());
}
