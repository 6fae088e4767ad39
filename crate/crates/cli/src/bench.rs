//! Benchmark campaigns: seeded trials, support-recovery scoring, per-grid
//! cost values and timing, aggregated per algorithm.
//!
//! Trials may run concurrently (`L0PATH_THREADS` caps the pool); results are
//! collected and reduced in trial order so aggregates are bit-reproducible
//! regardless of thread count.

use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Result};
use l0path_core::csbr::{csbr, StoppingRule};
use l0path_core::dict::Dictionary;
use l0path_core::l0pd::{l0pd, L0pdConfig};
use l0path_core::path::PathResult;
use l0path_core::problems::{draw_instance_with, Scenario};
use l0path_core::select::{default_grid, score_trial};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Csbr,
    L0pd,
}

impl Algo {
    pub fn name(&self) -> &'static str {
        match self {
            Algo::Csbr => "csbr",
            Algo::L0pd => "l0pd",
        }
    }

    pub fn parse_list(text: &str) -> Result<Vec<Algo>> {
        text.split(',')
            .map(|s| match s.trim() {
                "csbr" => Ok(Algo::Csbr),
                "l0pd" => Ok(Algo::L0pd),
                other => Err(anyhow!("unknown algorithm {other:?} (expected csbr|l0pd)")),
            })
            .collect()
    }

    /// Early-stop factor on the smallest grid λ: the continuation solver
    /// stops right at the grid floor, the polygon solver explores further
    /// down (half the floor on medium problems, 0.8 of it above 500 rows).
    pub fn lambda_stop_factor(&self, rows: usize) -> f64 {
        match self {
            Algo::Csbr => 1.0,
            Algo::L0pd => {
                if rows > 500 {
                    0.8
                } else {
                    0.5
                }
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub lambda1: f64,
    pub se: usize,
    pub tp: usize,
    pub order: usize,
    pub grid_index: usize,
    pub mdlc_se: usize,
    pub mdlc_tp: usize,
    pub mdlc_order: usize,
    pub skipped_grid_points: usize,
    pub segments: usize,
    /// `Ĵ` at each grid point; `null` where the path does not cover it.
    pub j_values: Vec<Option<f64>>,
    /// Polygon invariant check (path-descent runs only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polygon_valid: Option<bool>,
    pub solve_ms: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Aggregate {
    pub se: f64,
    pub tp: f64,
    pub order: f64,
    pub mdlc_se: f64,
    pub mdlc_tp: f64,
    pub mdlc_order: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgoReport {
    pub name: String,
    pub lambda_stop_factor: f64,
    pub aggregate: Aggregate,
    /// Mean `Ĵ` per grid index over the trials that covered it.
    pub mean_j_per_grid_point: Vec<f64>,
    pub all_polygons_valid: Option<bool>,
    pub trials: Vec<TrialRecord>,
    /// Mean solve time and its per-grid-point normalization.
    pub timing: TimingReport,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TimingReport {
    pub mean_solve_ms: f64,
    pub total_solve_ms: f64,
    pub mean_solve_ms_per_grid_point: f64,
}

fn solve_one(
    algo: Algo,
    dict: &Dictionary,
    obs: &l0path_core::dict::Observation,
    lambda_stop: f64,
) -> Result<(PathResult, Option<bool>)> {
    match algo {
        Algo::Csbr => {
            let rule = StoppingRule {
                lambda_stop,
                ..StoppingRule::default()
            };
            let path = csbr(dict, obs, &rule).map_err(|e| anyhow!("csbr failed: {e:?}"))?;
            Ok((path, None))
        }
        Algo::L0pd => {
            let cfg = L0pdConfig {
                lambda_stop,
                ..L0pdConfig::for_dictionary(dict)
            };
            let out = l0pd(dict, obs, &cfg).map_err(|e| anyhow!("l0pd failed: {e:?}"))?;
            let valid = out.polygon.check_invariants().is_ok();
            Ok((out.path, Some(valid)))
        }
    }
}

/// Runs `trials` seeded trials of one scenario for one algorithm.
pub fn run_algo(
    scenario: &Scenario,
    dict: &Arc<Dictionary>,
    algo: Algo,
    trials: u64,
) -> Result<AlgoReport> {
    let factor = algo.lambda_stop_factor(dict.rows());
    let records: Result<Vec<TrialRecord>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let inst = draw_instance_with(scenario, dict, trial);
            let grid = default_grid(dict, &inst.obs)
                .map_err(|e| anyhow!("trial {trial}: degenerate grid: {e}"))?;
            let lambda_stop = factor * grid.min();
            let started = Instant::now();
            let (path, polygon_valid) = solve_one(algo, dict, &inst.obs, lambda_stop)?;
            let solve_ms = started.elapsed().as_secs_f64() * 1e3;
            let scores = score_trial(&inst.support_star, &path, &grid, dict.rows())
                .map_err(|e| anyhow!("trial {trial}: scoring failed: {e}"))?;
            let j_values = grid
                .values()
                .iter()
                .map(|&l| path.value_at(l).ok())
                .collect();
            Ok(TrialRecord {
                trial,
                lambda1: grid.max(),
                se: scores.se,
                tp: scores.tp,
                order: scores.order,
                grid_index: scores.grid_index,
                mdlc_se: scores.mdlc_se,
                mdlc_tp: scores.mdlc_tp,
                mdlc_order: scores.mdlc_order,
                skipped_grid_points: scores.skipped_grid_points,
                segments: path.segment_count(),
                j_values,
                polygon_valid,
                solve_ms,
            })
        })
        .collect();
    let records = records?;

    // Fixed-order reduction keeps aggregates reproducible.
    let t = trials as f64;
    let mut agg = Aggregate::default();
    for r in &records {
        agg.se += r.se as f64 / t;
        agg.tp += r.tp as f64 / t;
        agg.order += r.order as f64 / t;
        agg.mdlc_se += r.mdlc_se as f64 / t;
        agg.mdlc_tp += r.mdlc_tp as f64 / t;
        agg.mdlc_order += r.mdlc_order as f64 / t;
    }
    let grid_points = records.first().map_or(0, |r| r.j_values.len());
    let mut mean_j = vec![0.0f64; grid_points];
    for i in 0..grid_points {
        let mut sum = 0.0;
        let mut count = 0usize;
        for r in &records {
            if let Some(v) = r.j_values[i] {
                sum += v;
                count += 1;
            }
        }
        mean_j[i] = if count > 0 { sum / count as f64 } else { f64::NAN };
    }
    let all_polygons_valid = match algo {
        Algo::L0pd => Some(records.iter().all(|r| r.polygon_valid == Some(true))),
        Algo::Csbr => None,
    };
    let total_solve_ms: f64 = records.iter().map(|r| r.solve_ms).sum();
    let timing = TimingReport {
        mean_solve_ms: total_solve_ms / t,
        total_solve_ms,
        mean_solve_ms_per_grid_point: total_solve_ms / t / grid_points.max(1) as f64,
    };
    Ok(AlgoReport {
        name: algo.name().to_string(),
        lambda_stop_factor: factor,
        aggregate: agg,
        mean_j_per_grid_point: mean_j,
        all_polygons_valid,
        trials: records,
        timing,
    })
}
