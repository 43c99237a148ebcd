//! PRM* and RRT* over the same counted distance oracle as the bubble planners.
//!
//! Both planners treat a point as valid when its distance query is at least
//! `eps`, and an edge as valid when every one of its evenly spaced check points
//! is. Connection radii follow `gamma * (vol / zeta_m)^(1/m) * (log n / n)^(1/m)`
//! with `zeta_m` the unit-ball volume.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distance_field::{DistanceOracle, Workspace};
use crate::error::{Error, Result};
use crate::point::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// PRM* roadmap size or RRT* iteration count.
    pub n_samples: usize,
    /// Spacing of collision check points along an edge (m).
    pub edge_resolution: f64,
    pub eps: f64,
    pub gamma: f64,
    /// RRT* extension length (m).
    pub steer_eta: f64,
    /// Probability that an RRT* sample is the goal itself.
    pub goal_bias: f64,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { n_samples: 500, edge_resolution: 0.05, eps: 0.1, gamma: 2.0, steer_eta: 0.5, goal_bias: 0.05, seed: 0 }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.edge_resolution > 0.0) {
            return bad(format!("edge_resolution {} must be > 0", self.edge_resolution));
        }
        if !(self.gamma > 0.0) {
            return bad(format!("gamma {} must be > 0", self.gamma));
        }
        if !(self.steer_eta > 0.0) {
            return bad(format!("steer_eta {} must be > 0", self.steer_eta));
        }
        if !(self.eps >= 0.0) {
            return bad(format!("eps {} must be >= 0", self.eps));
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return bad(format!("goal_bias {} must lie in [0, 1]", self.goal_bias));
        }
        if self.n_samples == 0 {
            return bad("n_samples must be positive".into());
        }
        Ok(())
    }
}

/// Piecewise linear path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Polyline {
    pub points: Vec<Point>,
}

impl Polyline {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(&w[1])).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("polyline serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Record of every oracle query a baseline made, by purpose.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryLedger {
    /// Single-point validity checks.
    pub point_checks: usize,
    /// Length of every edge handed to [`edge_collision_check`].
    pub edge_lengths: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    /// `None` when no path was found.
    pub path: Option<Polyline>,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub ledger: QueryLedger,
}

impl BaselineOutcome {
    pub fn cost(&self) -> Option<f64> {
        self.path.as_ref().map(Polyline::length)
    }
}

/// Number of check points [`edge_collision_check`] queries on an edge.
pub fn edge_check_points(length: f64, resolution: f64) -> usize {
    (length / resolution).ceil() as usize + 1
}

/// Queries `ceil(|b - a| / resolution) + 1` evenly spaced points including
/// both endpoints; true iff every value is at least `eps`.
pub fn edge_collision_check(oracle: &DistanceOracle, a: &Point, b: &Point, resolution: f64, eps: f64) -> Result<bool> {
    if !(resolution > 0.0) {
        return Err(Error::InvalidInput(format!("edge resolution {resolution} must be > 0")));
    }
    let count = edge_check_points(a.distance(b), resolution);
    let mut free = true;
    for i in 0..count {
        let t = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
        let p = *a + (*b - *a) * t;
        if oracle.query(&p)? < eps {
            free = false;
        }
    }
    Ok(free)
}

fn unit_ball_volume(m: usize) -> f64 {
    match m {
        1 => 2.0,
        2 => std::f64::consts::PI,
        _ => 4.0 / 3.0 * std::f64::consts::PI,
    }
}

/// `gamma * (vol / zeta_m)^(1/m) * (log n / n)^(1/m)`.
pub fn connection_radius(workspace: &Workspace, gamma: f64, n: usize) -> f64 {
    let m = workspace.dim() as f64;
    let n = n.max(2) as f64;
    gamma * (workspace.volume() / unit_ball_volume(workspace.dim())).powf(1.0 / m) * (n.ln() / n).powf(1.0 / m)
}

struct Checker<'a> {
    oracle: &'a DistanceOracle,
    cfg: &'a BaselineConfig,
    ledger: QueryLedger,
}

impl Checker<'_> {
    fn point(&mut self, y: &Point) -> Result<bool> {
        self.ledger.point_checks += 1;
        Ok(self.oracle.query(y)? >= self.cfg.eps)
    }

    fn edge(&mut self, a: &Point, b: &Point) -> Result<bool> {
        self.ledger.edge_lengths.push(a.distance(b));
        edge_collision_check(self.oracle, a, b, self.cfg.edge_resolution, self.cfg.eps)
    }
}

/// Uniform hash of point indices for radius queries.
struct PointHash {
    cell: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl PointHash {
    fn new(cell: f64) -> Self {
        Self { cell, cells: HashMap::new() }
    }

    fn key(&self, y: &Point) -> Vec<i64> {
        y.as_slice().iter().map(|c| (c / self.cell).floor() as i64).collect()
    }

    fn insert(&mut self, id: usize, y: &Point) {
        let k = self.key(y);
        self.cells.entry(k).or_default().push(id);
    }

    /// Indices within distance `r` of `y`, ascending.
    fn within(&self, points: &[Point], y: &Point, r: f64) -> Vec<usize> {
        let base = self.key(y);
        let reach = (r / self.cell).ceil().max(1.0) as i64;
        let side = (2 * reach + 1) as usize;
        let mut out = Vec::new();
        let m = base.len();
        let total = side.pow(m as u32);
        for code in 0..total {
            let mut key = base.clone();
            let mut c = code;
            for k in key.iter_mut() {
                *k += (c % side) as i64 - reach;
                c /= side;
            }
            if let Some(ids) = self.cells.get(&key) {
                out.extend(ids.iter().copied().filter(|&i| points[i].distance(y) <= r));
            }
        }
        out.sort_unstable();
        out
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize, target: usize) -> Option<Vec<usize>> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut prev = vec![usize::MAX; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem(0.0, source));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if u == target {
            let mut path = vec![target];
            let mut cur = target;
            while cur != source {
                cur = prev[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = u;
                heap.push(HeapItem(nd, v));
            }
        }
    }
    None
}

fn check_endpoints(checker: &mut Checker, y_s: &Point, y_g: &Point, dim: usize) -> Result<()> {
    y_s.check_dim(dim)?;
    y_g.check_dim(dim)?;
    if !checker.point(y_s)? {
        return Err(Error::SeedNotFree(format!("start {y_s:?}")));
    }
    if !checker.point(y_g)? {
        return Err(Error::SeedNotFree(format!("goal {y_g:?}")));
    }
    Ok(())
}

/// PRM*: `n_samples` valid uniform samples plus start and goal, connected
/// within the PRM* radius, searched by Dijkstra on edge length.
pub fn prm_star(
    oracle: &DistanceOracle,
    workspace: &Workspace,
    cfg: &BaselineConfig,
    y_s: &Point,
    y_g: &Point,
) -> Result<BaselineOutcome> {
    cfg.validate()?;
    let dim = workspace.dim();
    let mut checker = Checker { oracle, cfg, ledger: QueryLedger::default() };
    check_endpoints(&mut checker, y_s, y_g, dim)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = vec![*y_s, *y_g];
    let max_draws = 100 * cfg.n_samples;
    let mut draws = 0;
    while points.len() < cfg.n_samples + 2 && draws < max_draws {
        draws += 1;
        let y = workspace.sample_uniform(&mut rng);
        if checker.point(&y)? {
            points.push(y);
        }
    }

    let n = points.len();
    let radius = connection_radius(workspace, cfg.gamma, n);
    let mut hash = PointHash::new(radius);
    for (i, p) in points.iter().enumerate() {
        hash.insert(i, p);
    }
    let mut adj = vec![Vec::new(); n];
    let mut n_edges = 0;
    for i in 0..n {
        for j in hash.within(&points, &points[i], radius) {
            if j <= i {
                continue;
            }
            if checker.edge(&points[i], &points[j])? {
                let w = points[i].distance(&points[j]);
                adj[i].push((j, w));
                adj[j].push((i, w));
                n_edges += 1;
            }
        }
    }
    let path = dijkstra(&adj, 0, 1).map(|idx| Polyline { points: idx.into_iter().map(|i| points[i]).collect() });
    Ok(BaselineOutcome { path, n_nodes: n, n_edges, ledger: checker.ledger })
}

struct Tree {
    points: Vec<Point>,
    parent: Vec<usize>,
    cost: Vec<f64>,
    children: Vec<Vec<usize>>,
}

impl Tree {
    fn reparent(&mut self, node: usize, new_parent: usize, new_cost: f64) {
        let old = self.parent[node];
        self.children[old].retain(|&c| c != node);
        self.parent[node] = new_parent;
        self.children[new_parent].push(node);
        let delta = new_cost - self.cost[node];
        let mut stack = vec![node];
        while let Some(u) = stack.pop() {
            self.cost[u] += delta;
            stack.extend(self.children[u].iter().copied());
        }
    }

    fn branch(&self, mut node: usize) -> Vec<Point> {
        let mut out = vec![self.points[node]];
        while node != 0 {
            node = self.parent[node];
            out.push(self.points[node]);
        }
        out.reverse();
        out
    }
}

/// RRT* with goal-biased sampling, parent selection and rewiring inside
/// the PRM* radius. Returns the cheapest branch that reached
/// the goal.
pub fn rrt_star(
    oracle: &DistanceOracle,
    workspace: &Workspace,
    cfg: &BaselineConfig,
    y_s: &Point,
    y_g: &Point,
) -> Result<BaselineOutcome> {
    cfg.validate()?;
    let dim = workspace.dim();
    let mut checker = Checker { oracle, cfg, ledger: QueryLedger::default() };
    check_endpoints(&mut checker, y_s, y_g, dim)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tree = Tree { points: vec![*y_s], parent: vec![0], cost: vec![0.0], children: vec![Vec::new()] };
    let mut hash = PointHash::new(cfg.steer_eta);
    hash.insert(0, y_s);
    // Nodes whose straight edge to the goal was verified.
    let mut goal_links: Vec<usize> = Vec::new();
    let mut n_edges = 0;

    for _ in 0..cfg.n_samples {
        let y_rand = if rng.random::<f64>() < cfg.goal_bias { *y_g } else { workspace.sample_uniform(&mut rng) };
        let nearest = (0..tree.points.len())
            .min_by(|&a, &b| tree.points[a].distance(&y_rand).total_cmp(&tree.points[b].distance(&y_rand)))
            .expect("tree has a root");
        let from = tree.points[nearest];
        let d = from.distance(&y_rand);
        if d == 0.0 {
            continue;
        }
        let y_new = if d <= cfg.steer_eta { y_rand } else { from + (y_rand - from) * (cfg.steer_eta / d) };
        if !checker.point(&y_new)? {
            continue;
        }
        let radius = connection_radius(workspace, cfg.gamma, tree.points.len() + 1);
        let mut near = hash.within(&tree.points, &y_new, radius);
        if !near.contains(&nearest) {
            near.push(nearest);
        }
        // Cheapest collision-free parent, nearest first among ties.
        near.sort_by(|&a, &b| {
            let ca = tree.cost[a] + tree.points[a].distance(&y_new);
            let cb = tree.cost[b] + tree.points[b].distance(&y_new);
            ca.total_cmp(&cb).then(a.cmp(&b))
        });
        let mut parent = None;
        for &c in &near {
            if checker.edge(&tree.points[c], &y_new)? {
                parent = Some(c);
                break;
            }
        }
        let Some(parent) = parent else { continue };
        let id = tree.points.len();
        let new_cost = tree.cost[parent] + tree.points[parent].distance(&y_new);
        tree.points.push(y_new);
        tree.parent.push(parent);
        tree.cost.push(new_cost);
        tree.children.push(Vec::new());
        tree.children[parent].push(id);
        hash.insert(id, &y_new);
        n_edges += 1;

        for &c in &near {
            if c == parent || c == 0 {
                continue;
            }
            let via = new_cost + y_new.distance(&tree.points[c]);
            if via < tree.cost[c] && checker.edge(&y_new, &tree.points[c])? {
                tree.reparent(c, id, via);
            }
        }

        let to_goal = y_new.distance(y_g);
        if to_goal <= cfg.steer_eta && (to_goal == 0.0 || checker.edge(&y_new, y_g)?) {
            goal_links.push(id);
        }
    }

    let best = goal_links
        .iter()
        .copied()
        .min_by(|&a, &b| {
            let ca = tree.cost[a] + tree.points[a].distance(y_g);
            let cb = tree.cost[b] + tree.points[b].distance(y_g);
            ca.total_cmp(&cb).then(a.cmp(&b))
        });
    let path = best.map(|node| {
        let mut points = tree.branch(node);
        if points.last() != Some(y_g) {
            points.push(*y_g);
        }
        Polyline { points }
    });
    Ok(BaselineOutcome { path, n_nodes: tree.points.len(), n_edges, ledger: checker.ledger })
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
    fn edge_point_count() {
        let (oracle, _) = square(vec![]);
        assert!(edge_collision_check(&oracle, &Point::xy(1.0, 1.0), &Point::xy(2.0, 1.0), 0.05, 0.1).unwrap());
        assert_eq!(oracle.counts().total, 21);
        assert_eq!(edge_check_points(0.0, 0.05), 1);
        assert_eq!(edge_check_points(0.051, 0.05), 3);
        assert!(edge_collision_check(&oracle, &Point::xy(0.0, 0.0), &Point::xy(1.0, 0.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn wall_blocks_edge() {
        let (oracle, _) = square(vec![Primitive::aabb(Point::xy(1.9, 0.0), Point::xy(2.1, 4.0))]);
        assert!(!edge_collision_check(&oracle, &Point::xy(1.0, 2.0), &Point::xy(3.0, 2.0), 0.05, 0.1).unwrap());
        assert!(edge_collision_check(&oracle, &Point::xy(0.5, 1.0), &Point::xy(0.5, 3.0), 0.05, 0.1).unwrap());
    }

    #[test]
    fn radius_shrinks_with_samples() {
        let ws = Workspace::new(Point::xy(0.0, 0.0), Point::xy(10.0, 10.0)).unwrap();
        let r500 = connection_radius(&ws, 2.0, 500);
        let expect = 2.0 * (100.0 / std::f64::consts::PI).sqrt() * (500f64.ln() / 500.0).sqrt();
        assert!((r500 - expect).abs() < 1e-12);
        assert!(connection_radius(&ws, 2.0, 5000) < r500);
    }

    #[test]
    fn polyline_round_trip() {
        let p = Polyline { points: vec![Point::xy(0.0, 0.0), Point::xy(3.0, 4.0), Point::xy(3.0, 5.0)] };
        assert_eq!(p.length(), 6.0);
        let text = p.to_json();
        assert!(text.contains("\"points\""));
        assert_eq!(Polyline::from_json(&text).unwrap(), p);
    }

    #[test]
    fn invalid_endpoints_are_errors() {
        let (oracle, ws) = square(vec![Primitive::sphere(Point::xy(2.0, 2.0), 0.5)]);
        let cfg = BaselineConfig { n_samples: 20, ..Default::default() };
        assert!(prm_star(&oracle, &ws, &cfg, &Point::xy(2.0, 2.0), &Point::xy(0.5, 0.5)).is_err());
        assert!(rrt_star(&oracle, &ws, &cfg, &Point::xy(0.5, 0.5), &Point::xy(2.1, 2.0)).is_err());
    }
}
