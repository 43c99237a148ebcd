//! Exploration of an initially unknown scene.
//!
//! A simulated range sensor marks cells of a fine visibility grid as observed
//! and records obstacle hits. Bubbles are built on the distance field of the
//! observed hits, with unknown space treated as free. A bubble is trusted
//! (and expanded by EBG) only when its whole clearance ball, radius plus
//! `eps`, is fully visible; the others are frontier bubbles, kept in the cover
//! but never expanded or traversed.
//!
//! Hits alone under-sample surfaces seen at grazing angles. Cells lying
//! entirely inside an obstacle are never observed, so requiring the clearance
//! ball to be observed, with `eps` raised by 1.5 cell diagonals, keeps every
//! obstacle thicker than one cell diagonal out of the trusted bubbles.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bubbles::{BubbleCover, SafeBubble};
use crate::distance_field::{DistanceOracle, FieldSource, GridField, Occupancy, Workspace};
use crate::error::{Error, Result};
use crate::graph::{build_intersection_graph, bubble_paths_from, containing_bubbles, BubblePath};
use crate::point::{Point, MAX_DIM};
use crate::samplers::{ebg_gated, fibonacci_sphere, SamplerConfig, Termination};
use crate::trajopt::{plan_trajectory, BezierTrajectory, TrajoptConfig};

/// Observed cells of a uniform grid over the workspace.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownRegion {
    pub workspace: Workspace,
    /// Cell edge length (m).
    pub spacing: f64,
    pub dims: Vec<usize>,
    pub observed: Vec<bool>,
    /// Cells where a sensor ray stopped on an obstacle.
    pub hits: Vec<bool>,
    pub poses: Vec<Point>,
}

impl KnownRegion {
    pub fn new(workspace: Workspace, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidInput(format!("visibility spacing {spacing} must be positive")));
        }
        let dims: Vec<usize> = workspace.extent().as_slice().iter().map(|e| (e / spacing).ceil().max(1.0) as usize).collect();
        let n = dims.iter().product();
        Ok(Self { workspace, spacing, dims, observed: vec![false; n], hits: vec![false; n], poses: Vec::new() })
    }

    /// Grid of the largest workspace extent divided by 512 (2D) or 64 (3D).
    pub fn for_workspace(workspace: Workspace) -> Self {
        let divisions = if workspace.dim() >= 3 { 64.0 } else { 512.0 };
        let longest = workspace.extent().as_slice().iter().copied().fold(0.0, f64::max);
        Self::new(workspace, longest / divisions).expect("positive extent")
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn cell_of(&self, y: &Point) -> Option<usize> {
        let mut lin = 0;
        for axis in (0..self.dims.len()).rev() {
            let u = ((y[axis] - self.workspace.lower[axis]) / self.spacing).floor();
            if !(u >= 0.0 && u < self.dims[axis] as f64) {
                return None;
            }
            lin = lin * self.dims[axis] + u as usize;
        }
        Some(lin)
    }

    fn multi_index(&self, mut lin: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for (axis, slot) in idx.iter_mut().enumerate().take(self.dims.len()) {
            *slot = lin % self.dims[axis];
            lin /= self.dims[axis];
        }
        idx
    }

    pub fn cell_center(&self, lin: usize) -> Point {
        let idx = self.multi_index(lin);
        let mut p = self.workspace.lower;
        for axis in 0..self.dims.len() {
            p[axis] += (idx[axis] as f64 + 0.5) * self.spacing;
        }
        p
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn observed_fraction(&self) -> f64 {
        self.observed_count() as f64 / self.len() as f64
    }

    /// Distance oracle over the observed hits with unknown cells counted as
    /// free. Values are capped at `cap`, which keeps the bubble at the sensor
    /// pose inside the scanned disc when `cap` is below the sensor range.
    pub fn known_oracle(&self, cap: f64) -> Result<DistanceOracle> {
        let occ = Occupancy::new(self.workspace.lower, self.spacing, self.dims.clone(), self.hits.clone())?;
        let mut field = GridField::from_occupancy(&occ, self.workspace)?;
        for v in &mut field.values {
            *v = v.min(cap);
        }
        Ok(DistanceOracle::grid(field))
    }

    /// Extra clearance for trusted bubbles: 1.5 cell diagonals.
    pub fn trust_margin(&self) -> f64 {
        1.5 * self.spacing * (self.dims.len() as f64).sqrt()
    }

    /// Linear indices of cells whose centers lie in the closed ball.
    fn cells_in(&self, b: &SafeBubble) -> Vec<usize> {
        let m = self.dims.len();
        let mut lo = [0usize; MAX_DIM];
        let mut hi = [0usize; MAX_DIM];
        for axis in 0..m {
            let to_index = |x: f64| ((x - self.workspace.lower[axis]) / self.spacing - 0.5).max(0.0);
            lo[axis] = to_index(b.center[axis] - b.radius).ceil() as usize;
            hi[axis] = (to_index(b.center[axis] + b.radius).floor() as usize).min(self.dims[axis] - 1);
            if lo[axis] > hi[axis] {
                return Vec::new();
            }
        }
        let mut out = Vec::new();
        let mut idx = lo;
        loop {
            let mut lin = 0;
            for axis in (0..m).rev() {
                lin = lin * self.dims[axis] + idx[axis];
            }
            if self.cell_center(lin).distance(&b.center) <= b.radius {
                out.push(lin);
            }
            let mut axis = 0;
            loop {
                if axis == m {
                    return out;
                }
                if idx[axis] < hi[axis] {
                    idx[axis] += 1;
                    break;
                }
                idx[axis] = lo[axis];
                axis += 1;
            }
        }
    }
}

fn true_distance(source: &FieldSource, y: &Point) -> f64 {
    match source {
        FieldSource::Analytic(s) => s.signed_distance(y),
        FieldSource::Grid(g) => g.conservative_distance(y),
    }
}

/// Ray directions at roughly `angular_resolution` radians apart.
fn scan_directions(dim: usize, angular_resolution: f64) -> Vec<Point> {
    if dim == 2 {
        let n = (std::f64::consts::TAU / angular_resolution).ceil() as usize;
        (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                Point::xy(a.cos(), a.sin())
            })
            .collect()
    } else {
        let n = (4.0 * std::f64::consts::PI / (angular_resolution * angular_resolution)).ceil() as usize;
        fibonacci_sphere(n)
    }
}

/// Cast rays from `pose` and mark every cell they cross as observed, up to
/// the first obstacle or `max_range`. The cell holding each hit point is
/// recorded as a hit.
pub fn simulate_scan(
    source: &FieldSource,
    region: &mut KnownRegion,
    pose: &Point,
    max_range: f64,
    angular_resolution: f64,
) -> Result<()> {
    pose.check_dim(region.dims.len())?;
    if !(max_range > 0.0) || !(angular_resolution > 0.0) {
        return Err(Error::InvalidInput("scan range and angular resolution must be positive".into()));
    }
    if true_distance(source, pose) <= 0.0 {
        return Err(Error::PoseInObstacle);
    }
    let step = 0.5 * region.spacing;
    for dir in scan_directions(region.dims.len(), angular_resolution) {
        let hit = match source {
            FieldSource::Analytic(scene) => scene.ray_cast(pose, &dir, max_range),
            FieldSource::Grid(g) => {
                let n = (max_range / step).ceil() as usize;
                (0..=n).map(|i| (i as f64 * step).min(max_range)).find(|&t| g.is_obstacle_at(&(*pose + dir * t)))
            }
        };
        let end = hit.unwrap_or(max_range);
        let n = (end / step).ceil() as usize;
        for i in 0..n {
            if let Some(c) = region.cell_of(&(*pose + dir * (i as f64 * step))) {
                region.observed[c] = true;
            }
        }
        match hit {
            Some(t) => {
                if let Some(c) = region.cell_of(&(*pose + dir * t)) {
                    region.observed[c] = true;
                    region.hits[c] = true;
                }
            }
            None => {
                if let Some(c) = region.cell_of(&(*pose + dir * max_range)) {
                    region.observed[c] = true;
                }
            }
        }
    }
    region.poses.push(*pose);
    Ok(())
}

/// True iff every cell whose center lies in the bubble has been observed.
pub fn is_fully_visible(bubble: &SafeBubble, region: &KnownRegion) -> bool {
    region.cells_in(bubble).into_iter().all(|c| region.observed[c])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontierConfig {
    pub sampler: SamplerConfig,
    pub max_range: f64,
    /// Angle between neighboring sensor rays (rad).
    pub angular_resolution: f64,
    /// Visibility cell size; defaults to the workspace extent / 512 (2D) or / 64 (3D).
    pub h_vis: Option<f64>,
    /// Weight of the distance-to-goal term when the goal is not yet visible.
    pub terminal_weight: f64,
    /// Intermediate targets sit this fraction of the radius from the chosen
    /// bubble's center toward the goal.
    pub approach_fraction: f64,
    pub max_steps: usize,
    pub trajopt: TrajoptConfig,
}

impl Default for FrontierConfig {
    fn default() -> Self {
        Self {
            sampler: SamplerConfig { r_min: 0.05, ..SamplerConfig::default() },
            max_range: 8.0,
            angular_resolution: 0.25_f64.to_radians(),
            h_vis: None,
            terminal_weight: 1.0,
            approach_fraction: 0.8,
            max_steps: 20,
            trajopt: TrajoptConfig::default(),
        }
    }
}

/// Cover with a per-bubble visibility flag.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierCover {
    pub cover: BubbleCover,
    pub fully_visible: Vec<bool>,
}

impl FrontierCover {
    pub fn n_frontier(&self) -> usize {
        self.fully_visible.iter().filter(|&&v| !v).count()
    }
}

/// Exploration state: the true scene, what has been seen of it and where the
/// agent stands.
#[derive(Debug, Clone)]
pub struct ExploreState {
    pub truth: FieldSource,
    pub region: KnownRegion,
    pub pose: Point,
    pub cfg: FrontierConfig,
}

impl ExploreState {
    pub fn new(truth: FieldSource, start: Point, cfg: FrontierConfig) -> Result<Self> {
        let ws = *truth.workspace();
        start.check_dim(ws.dim())?;
        let region = match cfg.h_vis {
            Some(h) => KnownRegion::new(ws, h)?,
            None => KnownRegion::for_workspace(ws),
        };
        Ok(Self { truth, region, pose: start, cfg })
    }
}

#[derive(Debug, Clone)]
pub struct ExploreStep {
    pub cover: FrontierCover,
    pub path: BubblePath,
    pub trajectory: BezierTrajectory,
    /// Where the agent ends up.
    pub target: Point,
    pub reached: bool,
}

/// One scan, cover and plan cycle; the agent then jumps to the end of the
/// planned trajectory.
///
/// The plan goes to the goal when a fully visible bubble holds it, otherwise
/// to the fully visible bubble minimizing path weight plus
/// `terminal_weight` times the goal's distance to its boundary.
pub fn explore_step(state: &mut ExploreState, goal: &Point) -> Result<ExploreStep> {
    let cfg = &state.cfg;
    goal.check_dim(state.region.dims.len())?;
    simulate_scan(&state.truth, &mut state.region, &state.pose, cfg.max_range, cfg.angular_resolution)?;

    let oracle = state.region.known_oracle(0.5 * cfg.max_range)?;
    let eps = cfg.sampler.eps + state.region.trust_margin();
    let sampler = SamplerConfig { eps, ..cfg.sampler.clone() };
    let region = &state.region;
    let trusted = |b: &SafeBubble| is_fully_visible(&SafeBubble::new(b.center, b.radius + eps), region);
    let (cover, fully_visible) = ebg_gated(&oracle, &state.pose, &sampler, Termination::QueueEmpty, &mut |b| trusted(b))
            .map_err(|e| match e {
                Error::SeedNotFree(_) => Error::ExplorationStuck("no bubble fits at the current pose".into()),
                other => other,
            })?;
    if !fully_visible[0] {
        return Err(Error::ExplorationStuck("the bubble at the current pose is not fully visible".into()));
    }
    let graph = build_intersection_graph(&cover);
    let sources: Vec<usize> =
        containing_bubbles(&cover, &state.pose)?.into_iter().filter(|&i| fully_visible[i]).collect();
    let paths = bubble_paths_from(&graph, &sources, &|i| fully_visible[i]);

    let reachable = || paths.iter().enumerate().filter_map(|(i, p)| p.as_ref().map(|p| (i, p)));
    let at_goal = reachable()
        .filter(|(i, _)| cover.bubbles[*i].contains_point(goal))
        .min_by(|a, b| a.1.total_weight.total_cmp(&b.1.total_weight).then(a.0.cmp(&b.0)));
    let (path, target, reached) = match at_goal {
        Some((_, p)) => (p.clone(), *goal, true),
        None => {
            let score = |i: usize, p: &BubblePath| p.total_weight + cfg.terminal_weight * cover.bubbles[i].distance_to(goal);
            let (best, p) = reachable()
                .min_by(|a, b| score(a.0, a.1).total_cmp(&score(b.0, b.1)).then(a.0.cmp(&b.0)))
                .ok_or_else(|| Error::ExplorationStuck("no fully visible bubble is reachable".into()))?;
            let b = cover.bubbles[best];
            let dir = (*goal - b.center).normalized().unwrap_or_else(|| Point::zeros(goal.dim()));
            (p.clone(), b.center + dir * (cfg.approach_fraction * b.radius), false)
        }
    };
    if !reached && target.distance(&state.pose) <= 1e-9 {
        return Err(Error::ExplorationStuck("the best visible bubble is the current position".into()));
    }
    let planned = plan_trajectory(&cover, &path, &state.pose, &target, &cfg.trajopt)?;
    state.pose = target;
    Ok(ExploreStep { cover: FrontierCover { cover, fully_visible }, path, trajectory: planned.trajectory, target, reached })
}

/// One line of the exploration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub pose: Point,
    pub n_bubbles: usize,
    pub n_frontier: usize,
    pub observed_fraction: f64,
    pub reached: bool,
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub trace: Vec<TraceRecord>,
    pub steps: Vec<ExploreStep>,
    pub reached: bool,
    /// Observed cell count after each step's scan.
    pub observed_counts: Vec<usize>,
}

impl Episode {
    pub fn trace_jsonl(&self) -> String {
        self.trace.iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect()
    }

    pub fn write_trace(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.trace_jsonl().as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Run [`explore_step`] until the goal is reached or `max_steps` steps pass.
pub fn explore(truth: FieldSource, start: Point, goal: Point, cfg: FrontierConfig) -> Result<Episode> {
    let max_steps = cfg.max_steps;
    let mut state = ExploreState::new(truth, start, cfg)?;
    let mut episode = Episode { trace: Vec::new(), steps: Vec::new(), reached: false, observed_counts: Vec::new() };
    for step in 1..=max_steps {
        let out = explore_step(&mut state, &goal)?;
        episode.observed_counts.push(state.region.observed_count());
        episode.trace.push(TraceRecord {
            step,
            pose: state.pose,
            n_bubbles: out.cover.cover.len(),
            n_frontier: out.cover.n_frontier(),
            observed_fraction: state.region.observed_fraction(),
            reached: out.reached,
        });
        let reached = out.reached;
        episode.steps.push(out);
        if reached {
            episode.reached = true;
            break;
        }
    }
    Ok(episode)
}
