//! Monte Carlo estimate of the free space reachable through a cover.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate_pairs, resolve_env, run_seed};
use crate::bubbles::BubbleCover;
use crate::distance_field::{DistanceOracle, Environment};
use crate::error::{Error, Result};
use crate::graph::build_intersection_graph;
use crate::point::Point;
use crate::samplers::{brm, ebg, rbg, SamplerConfig, SamplerKind, Termination};
use crate::spatial::BubbleGrid;

/// `n` uniform workspace points whose distance is at least `clearance`.
pub fn free_samples(oracle: &DistanceOracle, n: usize, clearance: f64, seed: u64) -> Result<Vec<Point>> {
    let ws = oracle.workspace();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_draws = 1000 * n.max(1);
    let mut out = Vec::with_capacity(n);
    let mut draws = 0;
    while out.len() < n {
        if draws == max_draws {
            return Err(Error::SamplingSaturated { attempts: draws, context: "free-space Monte Carlo samples".into() });
        }
        draws += 1;
        let y = ws.sample_uniform(&mut rng);
        if oracle.evaluate_uncounted(&y) >= clearance {
            out.push(y);
        }
    }
    Ok(out)
}

/// Bubbles in the connected components that hold `seed_point` or the cover's
/// seed bubble.
pub fn reachable_mask(cover: &BubbleCover, seed_point: &Point) -> Vec<bool> {
    let graph = build_intersection_graph(cover);
    let mut mask = vec![false; cover.len()];
    let mut stack: Vec<usize> = cover
        .bubbles
        .iter()
        .enumerate()
        .filter(|(_, b)| b.contains_point(seed_point))
        .map(|(i, _)| i)
        .chain(cover.seed_index)
        .collect();
    while let Some(i) = stack.pop() {
        if std::mem::replace(&mut mask[i], true) {
            continue;
        }
        stack.extend(graph.neighbors(i).iter().map(|&(j, _)| j).filter(|&j| !mask[j]));
    }
    mask
}

fn covered_fraction(cover: &BubbleCover, mask: &[bool], samples: &[Point], region: &crate::Workspace) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut index = BubbleGrid::new(region, 64);
    for (i, b) in cover.bubbles.iter().enumerate().filter(|(i, _)| mask[*i]) {
        index.insert(i, b);
    }
    let hit = samples.iter().filter(|y| index.candidates(y).any(|i| cover.bubbles[i].contains_point(y))).count();
    hit as f64 / samples.len() as f64
}

/// Fraction of `n_mc` samples with distance at least `clearance` lying in
/// the part of the cover connected to `seed_point`.
pub fn reachable_area(
    cover: &BubbleCover,
    oracle: &DistanceOracle,
    n_mc: usize,
    clearance: f64,
    seed: u64,
    seed_point: &Point,
) -> Result<f64> {
    if cover.is_empty() {
        return Ok(0.0);
    }
    let samples = free_samples(oracle, n_mc, clearance, seed)?;
    Ok(covered_fraction(cover, &reachable_mask(cover, seed_point), &samples, oracle.workspace()))
}

/// Linearly interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AreaConfig {
    pub environments: Vec<String>,
    pub samplers: Vec<SamplerKind>,
    pub n_locations: usize,
    /// Iterations (BRM: samples) per run.
    pub budget: usize,
    pub record_every: usize,
    pub n_mc: usize,
    /// Minimum distance of the Monte Carlo samples; defaults to `sampler.eps`,
    /// the space a robot of that footprint can occupy.
    pub clearance: Option<f64>,
    /// Total EBG directions per expansion in this study; falls back to
    /// `sampler.n_directions`.
    pub ebg_directions: Option<usize>,
    pub seed: u64,
    pub sampler: SamplerConfig,
    pub output: Option<std::path::PathBuf>,
}

impl Default for AreaConfig {
    fn default() -> Self {
        Self {
            environments: vec!["room2d".into()],
            samplers: vec![SamplerKind::Brm, SamplerKind::Rbg, SamplerKind::Ebg],
            n_locations: 20,
            budget: 3000,
            record_every: 50,
            n_mc: 10_000,
            clearance: None,
            ebg_directions: Some(8),
            seed: 0,
            sampler: SamplerConfig::default(),
            output: None,
        }
    }
}

impl AreaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.environments.is_empty() || self.samplers.is_empty() {
            return Err(Error::InvalidInput("environments and samplers must be nonempty".into()));
        }
        if self.n_locations == 0 || self.record_every == 0 || self.budget < self.record_every || self.n_mc == 0 {
            return Err(Error::InvalidInput(
                "n_locations, record_every and n_mc must be >= 1 and budget >= record_every".into(),
            ));
        }
        if self.ebg_directions.is_some_and(|n| n < 2) {
            return Err(Error::InvalidInput("ebg_directions must be >= 2".into()));
        }
        self.sampler.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaRow {
    pub env: String,
    pub algorithm: SamplerKind,
    pub iteration: usize,
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
}

pub const AREA_HEADER: &str = "env,algorithm,iteration,q10,median,q90";

pub fn area_csv(rows: &[AreaRow]) -> String {
    let mut out = String::from(AREA_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(out, "{},{},{},{},{},{}", r.env, r.algorithm.name(), r.iteration, r.q10, r.median, r.q90)
            .expect("string write");
    }
    out
}

fn grow(oracle: &DistanceOracle, kind: SamplerKind, at: &Point, cfg: &AreaConfig, seed: u64) -> Result<BubbleCover> {
    let sampler = SamplerConfig {
        seed,
        n_sample: cfg.budget,
        max_iterations: Some(cfg.budget),
        max_bubbles: Some(cfg.budget + 1),
        n_directions: cfg.ebg_directions.or(cfg.sampler.n_directions),
        ..cfg.sampler.clone()
    };
    match kind {
        SamplerKind::Brm => brm(oracle, oracle.workspace(), &sampler),
        SamplerKind::Rbg => rbg(oracle, oracle.workspace(), at, &sampler, Termination::QueueEmpty),
        SamplerKind::Ebg => ebg(oracle, at, &sampler, Termination::QueueEmpty),
    }
}

/// Reachable-area curves: for every sampler, `n_locations` runs from random
/// seed locations, each recorded every `record_every` iterations, summarized
/// by the 10%, 50% and 90% quantiles across locations.
pub fn area_sweep(cfg: &AreaConfig) -> Result<Vec<AreaRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for spec in &cfg.environments {
        let env: Environment = resolve_env(spec)?;
        let oracle = env.oracle();
        let ws = *env.workspace();
        let samples = free_samples(&oracle, cfg.n_mc, cfg.clearance.unwrap_or(cfg.sampler.eps), cfg.seed)?;
        let locations: Vec<Point> =
            generate_pairs(&oracle, &ws, cfg.n_locations, cfg.sampler.eps, cfg.sampler.r_min, cfg.seed)?
                .into_iter()
                .map(|(s, _)| s)
                .collect();
        let checkpoints: Vec<usize> = (1..=cfg.budget / cfg.record_every).map(|k| k * cfg.record_every).collect();
        for &kind in &cfg.samplers {
            let curves: Vec<Vec<f64>> = locations
                .par_iter()
                .enumerate()
                .map(|(l, at)| {
                    let cover = grow(&oracle.detached(), kind, at, cfg, run_seed(cfg.seed, l))?;
                    Ok(checkpoints
                        .iter()
                        .map(|&it| {
                            let prefix = cover.prefix_at(it);
                            covered_fraction(&prefix, &reachable_mask(&prefix, at), &samples, &ws)
                        })
                        .collect())
                })
                .collect::<Result<_>>()?;
            for (k, &iteration) in checkpoints.iter().enumerate() {
                let mut at_k: Vec<f64> = curves.iter().map(|c| c[k]).collect();
                at_k.sort_by(f64::total_cmp);
                rows.push(AreaRow {
                    env: env.name.clone(),
                    algorithm: kind,
                    iteration,
                    q10: quantile(&at_k, 0.1),
                    median: quantile(&at_k, 0.5),
                    q90: quantile(&at_k, 0.9),
                });
            }
        }
    }
    Ok(rows)
}
