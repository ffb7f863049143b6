use std::fs;

use anyhow::Result;
use frogger_core::env::GameState;
use frogger_core::llm::Trajectory;
use frogger_core::search::{chained_search, cost_curve, cost_curve_csv, plan_json, SearchResult};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::pool::run_pool;
use crate::{Exit, Outputs};

#[derive(Serialize)]
struct Summary<'a> {
    seed: u64,
    #[serde(flatten)]
    result: &'a SearchResult,
}

/// One search per seed from the configured start state; the seed only
/// drives the seeded-random expansion order. Writes the plan as an action-code array,
/// the plan replayed as a trajectory (usable as a demonstration) and, when
/// enabled, the cost curve up to the target score.
pub fn run(cfg: &ExperimentConfig, out: &Outputs) -> Result<Exit> {
    let results = run_pool(cfg.seeds.len(), cfg.workers, |i| -> Result<SearchResult> {
        let seed = cfg.seeds[i];
        let root = GameState::new(cfg.env.clone())?;
        let search = frogger_core::search::SearchConfig { seed, ..cfg.search.clone() };
        let dir = out.dir(&format!("brute_seed{seed}"))?;
        if cfg.brute.curve && cfg.brute.segments == 1 {
            let max = search.target_score.ceil() as u32;
            fs::write(dir.join("cost_curve.csv"), cost_curve_csv(&cost_curve(&root, max, &search)?))?;
        }
        let r = chained_search(&root, &search, cfg.brute.segments)?;
        fs::write(dir.join("plan.json"), plan_json(&r.plan))?;
        fs::write(dir.join("result.json"), serde_json::to_string_pretty(&Summary { seed, result: &r })?)?;
        Trajectory::from_plan(&cfg.env, &r.plan)?.save(&dir.join("plan.jsonl"))?;
        Ok(r)
    });
    let mut exit = Exit::Success;
    println!("seed,reached,score,plan_length,nodes");
    for (seed, r) in cfg.seeds.iter().zip(results) {
        let r = r?;
        println!("{seed},{},{},{},{}", r.target_reached, r.achieved_score, r.plan.len(), r.nodes_expanded);
        if !r.target_reached {
            exit = Exit::Limits;
        }
    }
    Ok(exit)
}
