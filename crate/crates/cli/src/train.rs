use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use frogger_core::dqn::{
    batch_demo_share, metrics_csv, parse_metrics_csv, relative_difference, save_checkpoint, train, Checkpoint,
    RunSummary, TrainConfig,
};
use frogger_core::replay::{ingest_trajectory, PrioritizedBuffer, Transition};

use crate::config::ExperimentConfig;
use crate::pool::run_pool;
use crate::{Exit, Outputs};

pub fn expand_globs(patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in patterns {
        let mut hits: Vec<PathBuf> = glob::glob(p).with_context(|| format!("bad pattern {p}"))?.collect::<Result<_, _>>()?;
        if hits.is_empty() {
            bail!("{p} matches no files");
        }
        hits.sort();
        files.extend(hits);
    }
    Ok(files)
}

fn load_demos(pattern: &str, cfg: &TrainConfig) -> Result<Vec<Transition>> {
    let mut demos = Vec::new();
    for f in expand_globs(&[pattern.to_string()])? {
        demos.extend(ingest_trajectory(&f, cfg).with_context(|| format!("ingesting {}", f.display()))?);
    }
    Ok(demos)
}

/// One training run per seed; demonstrations, when given, are preloaded into
/// every run's buffer.
pub fn run(cfg: &ExperimentConfig, demos: Option<&str>, out: &Outputs) -> Result<Exit> {
    let pattern = demos.or(cfg.demos.glob.as_deref());
    let demo_set = match pattern {
        Some(p) => load_demos(p, &cfg.train)?,
        None => Vec::new(),
    };
    if !demo_set.is_empty() {
        println!("preloading {} demonstration transitions", demo_set.len());
    }
    let results = run_pool(cfg.seeds.len(), cfg.workers, |i| -> Result<RunSummary> {
        let seed = cfg.seeds[i];
        let tc = TrainConfig { seed, ..cfg.train.clone() };
        let o = train(&cfg.env, &tc, demo_set.clone())?;
        let dir = out.dir(&format!("train_seed{seed}"))?;
        std::fs::write(dir.join("metrics.csv"), metrics_csv(&o.metrics))?;
        save_checkpoint(&dir.join("checkpoint.fqn"), &Checkpoint { env: cfg.env.clone(), train: tc, net: o.net })?;
        Ok(RunSummary::new(&format!("seed{seed}"), &o.metrics, cfg.report.window, cfg.report.threshold))
    });
    println!("run,episodes,final_mean,episodes_to_threshold");
    for r in results {
        let r = r?;
        println!("{},{},{:.3},{}", r.name, r.episodes, r.final_mean, fmt_opt(r.episodes_to_threshold));
    }
    Ok(Exit::Success)
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map(|n| n.to_string()).unwrap_or_else(|| "never".into())
}

fn metrics_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("metrics.csv")
    } else {
        p.to_path_buf()
    }
}

/// Compares run `a` against baseline `b`.
pub fn report(cfg: &ExperimentConfig, a: &Path, b: &Path) -> Result<Exit> {
    let mut rows = Vec::new();
    for p in [a, b] {
        let path = metrics_path(p);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let metrics = parse_metrics_csv(&text)?;
        if metrics.is_empty() {
            bail!("{} has no episodes", path.display());
        }
        let share = batch_demo_share(&metrics, cfg.report.window);
        rows.push((RunSummary::new(&p.display().to_string(), &metrics, cfg.report.window, cfg.report.threshold), share));
    }
    println!(
        "threshold {}, final window {:.0}% of episodes",
        cfg.report.threshold,
        cfg.report.window * 100.0
    );
    println!("{:<40} {:>8} {:>11} {:>22} {:>18}", "run", "episodes", "final_mean", "episodes_to_threshold", "batch_demo_share");
    for (r, share) in &rows {
        let share = share.map(|(e, l)| format!("{e:.3}->{l:.3}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<40} {:>8} {:>11.3} {:>22} {:>18}",
            r.name,
            r.episodes,
            r.final_mean,
            fmt_opt(r.episodes_to_threshold),
            share
        );
    }
    let d = relative_difference(rows[0].0.final_mean, rows[1].0.final_mean);
    println!("relative difference: {:+.1}%", d * 100.0);
    Ok(Exit::Success)
}

/// Preloads demonstrations into a fresh buffer and dumps it.
pub fn ingest(cfg: &ExperimentConfig, demos: &str, out: &Outputs) -> Result<Exit> {
    let set = load_demos(demos, &cfg.train)?;
    let mut buf = PrioritizedBuffer::with_params(
        cfg.train.buffer_capacity,
        cfg.train.input_len(),
        cfg.train.alpha,
        cfg.train.priority_epsilon,
    )?;
    let n = set.len();
    buf.preload_demos(set)?;
    let dir = out.dir("ingest")?;
    std::fs::write(dir.join("buffer.csv"), buf.diagnostic_csv())?;
    println!("transitions {n}, capacity {}, occupancy {:.1}%", buf.capacity(), buf.occupancy() * 100.0);
    Ok(Exit::Success)
}
