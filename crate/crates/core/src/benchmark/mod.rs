//! Randomized planning trials and the reachable-area study.

mod area;
mod envs;

pub use area::{area_csv, area_sweep, free_samples, quantile, reachable_area, reachable_mask, AreaConfig, AreaRow};
pub use envs::*;

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{prm_star, rrt_star, BaselineConfig};
use crate::bubbles::{make_bubble, BubbleCover};
use crate::distance_field::{DistanceOracle, Environment, Workspace};
use crate::error::{Error, Result};
use crate::graph::{build_intersection_graph, shortest_bubble_path, BubblePath};
use crate::point::Point;
use crate::samplers::{brm, ebg, rbg, SamplerConfig, SamplerKind, Termination};
use crate::trajopt::{plan_trajectory, trajectory_length, CostSpec, PlannedTrajectory, TrajoptConfig};

/// Built-in name or path to an environment JSON file.
pub fn resolve_env(spec: &str) -> Result<Environment> {
    match builtin(spec) {
        Some(env) => Ok(env),
        None => Environment::load(Path::new(spec)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Brm,
    Rbg,
    Ebg,
    PrmStar,
    RrtStar,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Algorithm::Brm, Algorithm::Rbg, Algorithm::Ebg, Algorithm::PrmStar, Algorithm::RrtStar];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Brm => "brm",
            Algorithm::Rbg => "rbg",
            Algorithm::Ebg => "ebg",
            Algorithm::PrmStar => "prm_star",
            Algorithm::RrtStar => "rrt_star",
        }
    }

    pub fn sampler(&self) -> Option<SamplerKind> {
        match self {
            Algorithm::Brm => Some(SamplerKind::Brm),
            Algorithm::Rbg => Some(SamplerKind::Rbg),
            Algorithm::Ebg => Some(SamplerKind::Ebg),
            _ => None,
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    #[default]
    Length,
    Snap,
}

impl CostKind {
    pub fn spec(&self) -> CostSpec {
        match self {
            CostKind::Length => CostSpec::length(),
            CostKind::Snap => CostSpec::snap(),
        }
    }
}

impl FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "length" => Ok(CostKind::Length),
            "snap" => Ok(CostKind::Snap),
            _ => Err(Error::InvalidInput(format!("unknown cost {s:?}, expected length or snap"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Built-in names or environment file paths.
    pub environments: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    pub n_pairs: usize,
    pub n_seeds: usize,
    /// Iteration budgets: BRM and PRM* sample counts, RBG and RRT* loop
    /// iterations, EBG queue pops.
    pub budgets: Vec<usize>,
    pub cost: CostKind,
    /// Seeds pair generation; run `s` uses seed `seed + s`.
    pub seed: u64,
    pub sampler: SamplerConfig,
    pub baseline: BaselineConfig,
    pub trajopt: TrajoptConfig,
    /// Off by default: `wall_time_s` is then written as 0 so reruns are
    /// byte-identical.
    pub record_time: bool,
    pub output: Option<std::path::PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            environments: vec!["room2d".into()],
            algorithms: Algorithm::ALL.to_vec(),
            n_pairs: 20,
            n_seeds: 3,
            budgets: vec![250, 500, 1000],
            cost: CostKind::Length,
            seed: 0,
            sampler: SamplerConfig::default(),
            baseline: BaselineConfig::default(),
            trajopt: TrajoptConfig::default(),
            record_time: false,
            output: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.into()));
        if self.environments.is_empty() {
            return bad("no environments");
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms");
        }
        if self.n_pairs == 0 || self.n_seeds == 0 {
            return bad("n_pairs and n_seeds must be >= 1");
        }
        if self.budgets.is_empty() || self.budgets.contains(&0) {
            return bad("budgets must be a nonempty list of positive integers");
        }
        self.sampler.validate()?;
        self.baseline.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub env: String,
    pub algorithm: Algorithm,
    pub pair_id: usize,
    pub seed: u64,
    pub budget: usize,
    pub success: bool,
    pub unique_queries: u64,
    pub total_queries: u64,
    /// Arc length of the planned path; NaN on failure.
    pub raw_cost: f64,
    pub normalized_cost: f64,
    pub wall_time_s: f64,
}

pub const BENCH_HEADER: &str =
    "env,algorithm,pair_id,seed,budget,success,unique_queries,total_queries,raw_cost,normalized_cost,wall_time_s";

fn fmt_opt(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        String::new()
    }
}

pub fn records_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(BENCH_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.env,
            r.algorithm.name(),
            r.pair_id,
            r.seed,
            r.budget,
            r.success,
            r.unique_queries,
            r.total_queries,
            fmt_opt(r.raw_cost),
            fmt_opt(r.normalized_cost),
            r.wall_time_s
        )
        .expect("string write");
    }
    out
}

/// `n` start/goal pairs whose endpoints both admit a seed bubble and lie at
/// least a tenth of the workspace diagonal apart.
pub fn generate_pairs(
    oracle: &DistanceOracle,
    workspace: &Workspace,
    n: usize,
    eps: f64,
    r_min: f64,
    seed: u64,
) -> Result<Vec<(Point, Point)>> {
    const MAX_DRAWS_PER_POINT: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min_sep = 0.1 * workspace.diagonal();
    let clear = |y: &Point| oracle.evaluate_uncounted(y) - eps > r_min;
    let draw = |rng: &mut ChaCha8Rng, accept: &dyn Fn(&Point) -> bool, what: &str| {
        for _ in 0..MAX_DRAWS_PER_POINT {
            let y = workspace.sample_uniform(rng);
            if accept(&y) {
                return Ok(y);
            }
        }
        Err(Error::SamplingSaturated { attempts: MAX_DRAWS_PER_POINT, context: what.to_string() })
    };
    let mut pairs = Vec::with_capacity(n);
    for i in 0..n {
        let start = draw(&mut rng, &clear, &format!("start of pair {i}: no point with clearance > eps + r_min"))?;
        let goal = draw(
            &mut rng,
            &|y| clear(y) && y.distance(&start) >= min_sep,
            &format!("goal of pair {i}: no clear point {min_sep:.3} m from the start"),
        )?;
        pairs.push((start, goal));
    }
    Ok(pairs)
}

/// Graph search and trajectory optimization on a finished cover.
pub fn plan_in_cover(
    cover: &BubbleCover,
    start: &Point,
    goal: &Point,
    cfg: &TrajoptConfig,
) -> Result<(BubblePath, PlannedTrajectory)> {
    let graph = build_intersection_graph(cover);
    let path = shortest_bubble_path(&graph, start, goal)?;
    let planned = plan_trajectory(cover, &path, start, goal, cfg)?;
    Ok((path, planned))
}

/// Prepend bubbles centered at the query endpoints, the way PRM* adds them
/// to its roadmap. They are recorded at iteration 0.
pub fn with_endpoint_bubbles(
    cover: BubbleCover,
    oracle: &DistanceOracle,
    start: &Point,
    goal: &Point,
    cfg: &SamplerConfig,
) -> Result<BubbleCover> {
    let mut out = BubbleCover::new(cover.dim);
    for (y, which) in [(start, "start"), (goal, "goal")] {
        let b = make_bubble(oracle, y, cfg.eps, cfg.r_min)?
            .ok_or_else(|| Error::SeedNotFree(format!("{which} {y:?}")))?;
        out.push(b, 0);
    }
    out.seed_index = Some(0);
    out.bubbles.extend(cover.bubbles);
    out.added_at.extend(cover.added_at);
    out.saturated = cover.saturated;
    Ok(out)
}

/// Run seed for one (base seed, pair) combination.
fn run_seed(seed: u64, pair_id: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (pair_id as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

struct Run<'a> {
    env_index: usize,
    env: &'a Environment,
    base: &'a DistanceOracle,
    algorithm: Algorithm,
    pair_id: usize,
    pair: (Point, Point),
    seed: u64,
    budget: usize,
}

/// One planning attempt; returns the path length on success.
pub fn plan_once(
    oracle: &DistanceOracle,
    workspace: &Workspace,
    algorithm: Algorithm,
    budget: usize,
    seed: u64,
    start: &Point,
    goal: &Point,
    cfg: &BenchConfig,
) -> Result<f64> {
    let mut trajopt = cfg.trajopt.clone();
    trajopt.cost = cfg.cost.spec().fit_order(trajopt.order);
    let sampler = SamplerConfig { seed, max_iterations: Some(budget), max_bubbles: Some(budget + 1), ..cfg.sampler.clone() };
    let baseline = BaselineConfig { n_samples: budget, seed, ..cfg.baseline.clone() };
    let cover = match algorithm {
        Algorithm::Brm => {
            let sampler = SamplerConfig { n_sample: budget, ..sampler };
            with_endpoint_bubbles(brm(oracle, workspace, &sampler)?, oracle, start, goal, &sampler)?
        }
        Algorithm::Rbg => rbg(oracle, workspace, start, &sampler, Termination::GoalContained(*goal))?,
        Algorithm::Ebg => ebg(oracle, start, &sampler, Termination::GoalContained(*goal))?,
        Algorithm::PrmStar => return prm_star(oracle, workspace, &baseline, start, goal)?.cost().ok_or(Error::Disconnected),
        Algorithm::RrtStar => return rrt_star(oracle, workspace, &baseline, start, goal)?.cost().ok_or(Error::Disconnected),
    };
    let (_, planned) = plan_in_cover(&cover, start, goal, &trajopt)?;
    Ok(trajectory_length(&planned.trajectory))
}

fn execute(run: &Run, cfg: &BenchConfig) -> BenchRecord {
    let oracle = run.base.fork();
    let t0 = Instant::now();
    let (start, goal) = &run.pair;
    let result = plan_once(&oracle, run.env.workspace(), run.algorithm, run.budget, run_seed(run.seed, run.pair_id), start, goal, cfg);
    let wall = t0.elapsed().as_secs_f64();
    let counts = oracle.counts();
    BenchRecord {
        env: run.env.name.clone(),
        algorithm: run.algorithm,
        pair_id: run.pair_id,
        seed: run.seed,
        budget: run.budget,
        success: result.is_ok(),
        unique_queries: counts.unique,
        total_queries: counts.total,
        raw_cost: result.unwrap_or(f64::NAN),
        normalized_cost: f64::NAN,
        wall_time_s: if cfg.record_time { wall } else { 0.0 },
    }
}

/// Divide each successful cost by the worst successful cost of its
/// (env, pair) group.
pub fn normalize_costs(records: &mut [BenchRecord]) {
    let mut worst: std::collections::HashMap<(String, usize), f64> = Default::default();
    for r in records.iter().filter(|r| r.success) {
        let w = worst.entry((r.env.clone(), r.pair_id)).or_insert(0.0);
        *w = w.max(r.raw_cost);
    }
    for r in records.iter_mut() {
        r.normalized_cost = match worst.get(&(r.env.clone(), r.pair_id)) {
            Some(&w) if r.success && w > 0.0 => r.raw_cost / w,
            Some(_) if r.success => 1.0,
            _ => f64::NAN,
        };
    }
}

/// Full factorial sweep over environment, algorithm, pair, seed and budget.
/// Failed runs are recorded, not raised. Rows come back in sweep order
/// regardless of thread scheduling.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let envs: Vec<Environment> = cfg.environments.iter().map(|e| resolve_env(e)).collect::<Result<_>>()?;
    let bases: Vec<DistanceOracle> = envs.iter().map(Environment::oracle).collect();
    let mut runs = Vec::new();
    for (env_index, env) in envs.iter().enumerate() {
        let pairs = generate_pairs(&bases[env_index], env.workspace(), cfg.n_pairs, cfg.sampler.eps, cfg.sampler.r_min, cfg.seed)?;
        for &algorithm in &cfg.algorithms {
            for (pair_id, pair) in pairs.iter().enumerate() {
                for s in 0..cfg.n_seeds as u64 {
                    for &budget in &cfg.budgets {
                        runs.push(Run {
                            env_index,
                            env,
                            base: &bases[env_index],
                            algorithm,
                            pair_id,
                            pair: *pair,
                            seed: cfg.seed + s,
                            budget,
                        });
                    }
                }
            }
        }
    }
    let mut keyed: Vec<(usize, BenchRecord)> =
        runs.par_iter().enumerate().map(|(i, run)| (i, execute(run, cfg))).collect();
    keyed.sort_by_key(|(i, _)| *i);
    debug_assert!(runs.iter().zip(&keyed).all(|(r, (_, rec))| envs[r.env_index].name == rec.env));
    let mut records: Vec<BenchRecord> = keyed.into_iter().map(|(_, r)| r).collect();
    normalize_costs(&mut records);
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance_field::{AnalyticScene, Primitive};

    fn square(prims: Vec<Primitive>) -> (DistanceOracle, Workspace) {
        let ws = Workspace::new(Point::xy(0.0, 0.0), Point::xy(4.0, 4.0)).unwrap();
        (DistanceOracle::analytic(AnalyticScene::new(ws, prims).unwrap()), ws)
    }

    #[test]
    fn pairs_are_valid_and_repeatable() {
        let (o, ws) = square(vec![Primitive::sphere(Point::xy(2.0, 2.0), 1.0)]);
        let a = generate_pairs(&o, &ws, 30, 0.1, 0.05, 7).unwrap();
        assert_eq!(a, generate_pairs(&o, &ws, 30, 0.1, 0.05, 7).unwrap());
        assert_ne!(a, generate_pairs(&o, &ws, 30, 0.1, 0.05, 8).unwrap());
        for (s, g) in &a {
            assert!(o.evaluate_uncounted(s) >= 0.15 && o.evaluate_uncounted(g) >= 0.15);
            assert!(s.distance(g) >= 0.1 * ws.diagonal());
        }
        assert_eq!(o.counts().total, 0);
    }

    #[test]
    fn blocked_scene_saturates() {
        let (o, ws) = square(vec![Primitive::aabb(Point::xy(-1.0, -1.0), Point::xy(5.0, 5.0))]);
        let err = generate_pairs(&o, &ws, 1, 0.1, 0.05, 0).unwrap_err();
        assert!(matches!(err, Error::SamplingSaturated { attempts: 10_000, .. }), "{err}");
    }

    #[test]
    fn worst_run_normalizes_to_one() {
        let rec = |pair_id, success, raw_cost| BenchRecord {
            env: "e".into(),
            algorithm: Algorithm::Brm,
            pair_id,
            seed: 0,
            budget: 1,
            success,
            unique_queries: 0,
            total_queries: 0,
            raw_cost,
            normalized_cost: f64::NAN,
            wall_time_s: 0.0,
        };
        let mut rs = vec![rec(0, true, 2.0), rec(0, true, 4.0), rec(0, false, f64::NAN), rec(1, true, 3.0)];
        normalize_costs(&mut rs);
        assert_eq!(rs[0].normalized_cost, 0.5);
        assert_eq!(rs[1].normalized_cost, 1.0);
        assert!(rs[2].normalized_cost.is_nan());
        assert_eq!(rs[3].normalized_cost, 1.0);
        let csv = records_csv(&rs[2..3]);
        assert_eq!(csv.lines().nth(1).unwrap(), "e,brm,0,0,1,false,0,0,,,0");
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{}\"", a.name()));
        }
        assert!("prm".parse::<Algorithm>().is_err());
    }
}
