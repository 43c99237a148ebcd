//! `bubblecover`: build covers, plan, explore and run benchmark sweeps.
//!
//! Exit codes: 0 ok, 2 invalid configuration, 3 infeasible seed, 4 start and
//! goal disconnected, 5 trajectory solver failure. The last stdout line of
//! every run is a JSON object.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bubblecover::benchmark::{
    area_csv, area_sweep, records_csv, resolve_env, run_benchmark, with_endpoint_bubbles, AreaConfig, BenchConfig,
    CostKind,
};
use bubblecover::frontier::{explore, FrontierConfig};
use bubblecover::graph::{build_intersection_graph, shortest_bubble_path};
use bubblecover::samplers::{brm, ebg, rbg, SamplerConfig, SamplerKind, Termination};
use bubblecover::trajopt::{plan_trajectory, trajectory_length, TrajoptConfig};
use bubblecover::{BubbleCover, DistanceOracle, Environment, Error, Point};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "bubblecover", version, about = "Safe bubble covers and trajectory planning on distance fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shared {
    /// Environment JSON file or built-in name (room2d, corridor2d, clutter3d).
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; its parent directory must exist.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file overriding the subcommand's defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a bubble cover.
    Cover {
        #[command(flatten)]
        shared: Shared,
        #[arg(long, value_parser = parse_kind)]
        algo: SamplerKind,
        /// Seed point for rbg and ebg, e.g. `1.5,2`.
        #[arg(long, value_parser = parse_point)]
        start: Option<Point>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        r_min: Option<f64>,
        #[arg(long)]
        n_sample: Option<usize>,
        #[arg(long)]
        n_explore: Option<usize>,
        #[arg(long)]
        max_bubbles: Option<usize>,
    },
    /// Build a cover, search it and optimize a trajectory.
    Plan {
        #[command(flatten)]
        shared: Shared,
        #[arg(long, value_parser = parse_point)]
        start: Point,
        #[arg(long, value_parser = parse_point)]
        goal: Point,
        #[arg(long, value_parser = parse_cost, default_value = "length")]
        cost: CostKind,
        #[arg(long, value_parser = parse_kind, default_value = "ebg")]
        algo: SamplerKind,
        /// Points per segment in the polyline CSV.
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Explore an unknown scene with simulated scans.
    Explore {
        #[command(flatten)]
        shared: Shared,
        #[arg(long, value_parser = parse_point)]
        start: Point,
        #[arg(long, value_parser = parse_point)]
        goal: Point,
    },
    /// Randomized planning trials, one CSV row per run.
    Bench {
        #[command(flatten)]
        shared: Shared,
    },
    /// Reachable-area curves.
    Area {
        #[command(flatten)]
        shared: Shared,
    },
}

fn parse_point(s: &str) -> Result<Point, String> {
    Point::parse_csv(s).map_err(|e| e.to_string())
}

fn parse_kind(s: &str) -> Result<SamplerKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_cost(s: &str) -> Result<CostKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::SeedNotFree(_) | Error::PoseInObstacle | Error::InfeasibleEndpoint { .. } => 3,
            Error::Disconnected | Error::StartNotCovered | Error::GoalNotCovered | Error::ExplorationStuck(_) => 4,
            Error::NotConverged { .. } | Error::InconsistentEqualities(_) => 5,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn check_out(out: Option<&Path>) -> Result<(), Failure> {
    if let Some(out) = out {
        let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(config_error(format!("output directory {} does not exist", parent.display())));
        }
    }
    Ok(())
}

fn load_env(shared: &Shared) -> Result<Environment, Failure> {
    let spec = shared.env.as_deref().ok_or_else(|| config_error("--env is required"))?;
    Ok(resolve_env(spec)?)
}

/// Write `text` to `out`, or print it when no file is given.
fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| config_error(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn out_field(out: Option<&Path>) -> Value {
    out.map_or(Value::Null, |p| json!(p.display().to_string()))
}

fn grow(
    oracle: &DistanceOracle,
    env: &Environment,
    kind: SamplerKind,
    start: Option<&Point>,
    cfg: &SamplerConfig,
    term: Termination,
) -> Result<BubbleCover, Failure> {
    let seed_point = || start.ok_or_else(|| config_error(format!("--start is required for {}", kind.name())));
    Ok(match kind {
        SamplerKind::Brm => brm(oracle, env.workspace(), cfg)?,
        SamplerKind::Rbg => rbg(oracle, env.workspace(), seed_point()?, cfg, term)?,
        SamplerKind::Ebg => ebg(oracle, seed_point()?, cfg, term)?,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_cover(
    shared: &Shared,
    algo: SamplerKind,
    start: Option<&Point>,
    eps: Option<f64>,
    r_min: Option<f64>,
    n_sample: Option<usize>,
    n_explore: Option<usize>,
    max_bubbles: Option<usize>,
) -> Result<Value, Failure> {
    let mut cfg: SamplerConfig = load_config(shared.config.as_deref())?;
    cfg.seed = shared.seed.unwrap_or(cfg.seed);
    cfg.eps = eps.unwrap_or(cfg.eps);
    cfg.r_min = r_min.unwrap_or(cfg.r_min);
    cfg.n_sample = n_sample.unwrap_or(cfg.n_sample);
    cfg.n_explore = n_explore.unwrap_or(cfg.n_explore);
    cfg.max_bubbles = max_bubbles.or(cfg.max_bubbles);
    check_out(shared.out.as_deref())?;
    let env = load_env(shared)?;
    let oracle = env.oracle();
    let cover = grow(&oracle, &env, algo, start, &cfg, Termination::BubbleCount)?;
    emit(shared.out.as_deref(), &cover.to_json())?;
    let counts = oracle.counts();
    Ok(json!({
        "command": "cover",
        "algo": algo.name(),
        "n_bubbles": cover.len(),
        "saturated": cover.saturated,
        "unique_queries": counts.unique,
        "total_queries": counts.total,
        "out": out_field(shared.out.as_deref()),
    }))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PlanConfig {
    sampler: SamplerConfig,
    trajopt: TrajoptConfig,
}

fn polyline_path(out: &Path) -> PathBuf {
    let csv = out.with_extension("csv");
    if csv == out {
        let stem = out.file_stem().map_or("trajectory".into(), |s| s.to_string_lossy().into_owned());
        out.with_file_name(format!("{stem}_polyline.csv"))
    } else {
        csv
    }
}

fn cmd_plan(
    shared: &Shared,
    start: &Point,
    goal: &Point,
    cost: CostKind,
    algo: SamplerKind,
    samples: usize,
) -> Result<Value, Failure> {
    let mut cfg: PlanConfig = load_config(shared.config.as_deref())?;
    cfg.sampler.seed = shared.seed.unwrap_or(cfg.sampler.seed);
    cfg.trajopt.cost = cost.spec().fit_order(cfg.trajopt.order);
    if samples < 2 {
        return Err(config_error("--samples must be >= 2"));
    }
    check_out(shared.out.as_deref())?;
    let env = load_env(shared)?;
    let oracle = env.oracle();
    let cover = match algo {
        SamplerKind::Brm => {
            let cover = brm(&oracle, env.workspace(), &cfg.sampler)?;
            with_endpoint_bubbles(cover, &oracle, start, goal, &cfg.sampler)?
        }
        kind => grow(&oracle, &env, kind, Some(start), &cfg.sampler, Termination::GoalContained(*goal))?,
    };
    let graph = build_intersection_graph(&cover);
    let path = shortest_bubble_path(&graph, start, goal)?;
    let planned = plan_trajectory(&cover, &path, start, goal, &cfg.trajopt)?;
    let traj = &planned.trajectory;
    let polyline = shared.out.as_deref().map(polyline_path);
    emit(shared.out.as_deref(), &traj.to_json())?;
    if let Some(p) = &polyline {
        std::fs::write(p, traj.polyline_csv(samples)).map_err(|e| config_error(format!("{}: {e}", p.display())))?;
    }
    let counts = oracle.counts();
    Ok(json!({
        "command": "plan",
        "algo": algo.name(),
        "n_bubbles": cover.len(),
        "path_bubbles": path.len(),
        "total_weight": path.total_weight,
        "raw_cost": planned.cost,
        "length": trajectory_length(traj),
        "unique_queries": counts.unique,
        "out": out_field(shared.out.as_deref()),
        "polyline": out_field(polyline.as_deref()),
    }))
}

fn cmd_explore(shared: &Shared, start: &Point, goal: &Point) -> Result<Value, Failure> {
    let mut cfg: FrontierConfig = load_config(shared.config.as_deref())?;
    cfg.sampler.seed = shared.seed.unwrap_or(cfg.sampler.seed);
    check_out(shared.out.as_deref())?;
    let env = load_env(shared)?;
    let episode = explore(env.source.clone(), *start, *goal, cfg)?;
    emit(shared.out.as_deref(), &episode.trace_jsonl())?;
    let last = episode.trace.last();
    Ok(json!({
        "command": "explore",
        "steps": episode.trace.len(),
        "reached": episode.reached,
        "observed_fraction": last.map_or(0.0, |r| r.observed_fraction),
        "out": out_field(shared.out.as_deref()),
    }))
}

/// Resolve the CSV destination: `--out` wins over the config's `output`.
fn sweep_out(shared: &Shared, configured: Option<PathBuf>) -> Result<Option<PathBuf>, Failure> {
    let out = shared.out.clone().or(configured);
    check_out(out.as_deref())?;
    Ok(out)
}

fn cmd_bench(shared: &Shared) -> Result<Value, Failure> {
    let mut cfg: BenchConfig = load_config(shared.config.as_deref())?;
    if let Some(env) = &shared.env {
        cfg.environments = vec![env.clone()];
    }
    cfg.seed = shared.seed.unwrap_or(cfg.seed);
    let out = sweep_out(shared, cfg.output.take())?;
    let records = run_benchmark(&cfg).map_err(|e| config_error(e.to_string()))?;
    emit(out.as_deref(), &records_csv(&records))?;
    Ok(json!({
        "command": "bench",
        "rows": records.len(),
        "successes": records.iter().filter(|r| r.success).count(),
        "out": out_field(out.as_deref()),
    }))
}

fn cmd_area(shared: &Shared) -> Result<Value, Failure> {
    let mut cfg: AreaConfig = load_config(shared.config.as_deref())?;
    if let Some(env) = &shared.env {
        cfg.environments = vec![env.clone()];
    }
    cfg.seed = shared.seed.unwrap_or(cfg.seed);
    let out = sweep_out(shared, cfg.output.take())?;
    let rows = area_sweep(&cfg).map_err(|e| config_error(e.to_string()))?;
    emit(out.as_deref(), &area_csv(&rows))?;
    Ok(json!({
        "command": "area",
        "rows": rows.len(),
        "out": out_field(out.as_deref()),
    }))
}

fn run(cli: Cli) -> Result<Value, Failure> {
    match &cli.command {
        Command::Cover { shared, algo, start, eps, r_min, n_sample, n_explore, max_bubbles } => {
            cmd_cover(shared, *algo, start.as_ref(), *eps, *r_min, *n_sample, *n_explore, *max_bubbles)
        }
        Command::Plan { shared, start, goal, cost, algo, samples } => {
            cmd_plan(shared, start, goal, *cost, *algo, *samples)
        }
        Command::Explore { shared, start, goal } => cmd_explore(shared, start, goal),
        Command::Bench { shared } => cmd_bench(shared),
        Command::Area { shared } => cmd_area(shared),
    }
}

fn fail(f: Failure) -> ExitCode {
    eprintln!("error: {}", f.message);
    println!("{}", json!({ "error": f.message, "exit_code": f.code }));
    ExitCode::from(f.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            eprint!("{e}");
            let first = e.to_string().lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ").to_string();
            println!("{}", json!({ "error": first, "exit_code": 2 }));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(f) => fail(f),
    }
}
