use anyhow::{Context, Result};
use frogger_core::llm::{token_reward_correlation, Trajectory};
use serde::Serialize;

use crate::train::expand_globs;
use crate::{Exit, Outputs};

#[derive(Serialize)]
struct Point {
    file: String,
    config: String,
    completion_tokens: u64,
    median_completion_tokens: f64,
    episodic_reward: f64,
}

/// Token-versus-reward scatter over recorded trajectories, with the Pearson
/// coefficient of median completion tokens against episodic reward.
pub fn run(inputs: &[String], out: &Outputs) -> Result<Exit> {
    let mut points = Vec::new();
    for f in expand_globs(inputs)? {
        let t = Trajectory::load(&f).with_context(|| format!("loading {}", f.display()))?;
        points.push(Point {
            file: f.display().to_string(),
            config: t.header.config.label(),
            completion_tokens: t.completion_tokens(),
            median_completion_tokens: t.median_completion_tokens(),
            episodic_reward: t.total_reward(),
        });
    }
    let dir = out.dir("analyze")?;
    let mut w = csv::Writer::from_path(dir.join("token_reward.csv"))?;
    for p in &points {
        w.serialize(p)?;
    }
    w.flush()?;
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.median_completion_tokens, p.episodic_reward)).collect();
    match token_reward_correlation(&pairs) {
        Ok(r) => println!("episodes {}, pearson r {r:.4}", points.len()),
        Err(e) => println!("episodes {}, pearson r undefined ({e})", points.len()),
    }
    Ok(Exit::Success)
}
