//! Intersection graph of a bubble cover and the discrete bubble-path search.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bubbles::{hausdorff, BubbleCover, SafeBubble};
use crate::error::{Error, Result};
use crate::point::Point;

/// Undirected overlap graph. `edges` holds `(i, j, hausdorff(B_i, B_j))` with
/// `i < j`; moving along an edge from `a` to `b` costs `hausdorff(B_a, B_b)`,
/// which differs from the stored weight when `b < a` and the radii differ.
#[derive(Debug, Clone)]
pub struct IntersectionGraph {
    pub nodes: BubbleCover,
    pub edges: Vec<(usize, usize, f64)>,
    /// Per-node `(neighbor, cost of moving to it)`, sorted by neighbor.
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

impl IntersectionGraph {
    fn from_pairs(cover: &BubbleCover, mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        let b = &cover.bubbles;
        let mut adjacency = vec![Vec::new(); b.len()];
        let edges = pairs
            .into_iter()
            .map(|(i, j)| {
                adjacency[i].push((j, hausdorff(&b[i], &b[j])));
                adjacency[j].push((i, hausdorff(&b[j], &b[i])));
                (i, j, hausdorff(&b[i], &b[j]))
            })
            .collect();
        for list in &mut adjacency {
            list.sort_unstable_by_key(|&(n, _)| n);
        }
        Self { nodes: cover.clone(), edges, adjacency }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Cost of moving from `i` to `j`, if they overlap.
    pub fn cost(&self, i: usize, j: usize) -> Option<f64> {
        self.adjacency[i]
            .binary_search_by_key(&j, |&(n, _)| n)
            .ok()
            .map(|k| self.adjacency[i][k].1)
    }
}

/// Overlap graph using a uniform hash with cells twice the largest radius.
pub fn build_intersection_graph(cover: &BubbleCover) -> IntersectionGraph {
    let b = &cover.bubbles;
    let max_r = b.iter().map(|x| x.radius).fold(0.0, f64::max);
    if b.len() < 2 || !(max_r > 0.0) {
        return build_intersection_graph_exhaustive(cover);
    }
    let cell = 2.0 * max_r;
    let key = |p: &Point| {
        let mut k = [0i64; 3];
        for (a, c) in p.as_slice().iter().enumerate() {
            k[a] = (c / cell).floor() as i64;
        }
        k
    };
    let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, x) in b.iter().enumerate() {
        buckets.entry(key(&x.center)).or_default().push(i);
    }
    let dz = if cover.dim == 3 { -1..=1 } else { 0..=0 };
    let mut pairs = Vec::new();
    for (i, x) in b.iter().enumerate() {
        let k = key(&x.center);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in dz.clone() {
                    let Some(list) = buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) else { continue };
                    pairs.extend(list.iter().filter(|&&j| j > i && x.overlaps(&b[j])).map(|&j| (i, j)));
                }
            }
        }
    }
    IntersectionGraph::from_pairs(cover, pairs)
}

/// All-pairs overlap test.
pub fn build_intersection_graph_exhaustive(cover: &BubbleCover) -> IntersectionGraph {
    let b = &cover.bubbles;
    let mut pairs = Vec::new();
    for i in 0..b.len() {
        for j in i + 1..b.len() {
            if b[i].overlaps(&b[j]) {
                pairs.push((i, j));
            }
        }
    }
    IntersectionGraph::from_pairs(cover, pairs)
}

/// Indices of bubbles whose closed ball contains `y`.
pub fn containing_bubbles(cover: &BubbleCover, y: &Point) -> Result<Vec<usize>> {
    y.check_dim(cover.dim)?;
    Ok(cover.bubbles.iter().enumerate().filter(|(_, b)| b.contains_point(y)).map(|(i, _)| i).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BubblePath {
    pub indices: Vec<usize>,
    pub total_weight: f64,
}

impl BubblePath {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn bubbles<'a>(&'a self, cover: &'a BubbleCover) -> impl Iterator<Item = &'a SafeBubble> + 'a {
        self.indices.iter().map(|&i| &cover.bubbles[i])
    }

    pub fn to_file(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone)]
struct Label {
    weight: f64,
    path: Vec<usize>,
}

impl Label {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.path.len().cmp(&other.path.len()))
            .then_with(|| self.path.cmp(&other.path))
    }
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

/// Minimum total weight path from a bubble containing `start` to one
/// containing `goal`. Ties go to fewer bubbles, then to the lexicographically
/// smallest index sequence.
pub fn shortest_bubble_path(graph: &IntersectionGraph, start: &Point, goal: &Point) -> Result<BubblePath> {
    let sources = containing_bubbles(&graph.nodes, start)?;
    if sources.is_empty() {
        return Err(Error::StartNotCovered);
    }
    let targets = containing_bubbles(&graph.nodes, goal)?;
    if targets.is_empty() {
        return Err(Error::GoalNotCovered);
    }
    let mut is_target = vec![false; graph.len()];
    for &t in &targets {
        is_target[t] = true;
    }
    let mut found = None;
    label_search(graph, &sources, &|_| true, &mut |label| {
        let u = *label.path.last().expect("labels are nonempty");
        if is_target[u] {
            found = Some(BubblePath { indices: label.path.clone(), total_weight: label.weight });
            return true;
        }
        false
    });
    found.ok_or(Error::Disconnected)
}

/// Best path from any of `sources` to every node, moving only through nodes
/// for which `allowed` holds. Unreachable nodes get `None`.
pub fn bubble_paths_from(
    graph: &IntersectionGraph,
    sources: &[usize],
    allowed: &dyn Fn(usize) -> bool,
) -> Vec<Option<BubblePath>> {
    let mut out = vec![None; graph.len()];
    label_search(graph, sources, allowed, &mut |label| {
        let u = *label.path.last().expect("labels are nonempty");
        out[u] = Some(BubblePath { indices: label.path.clone(), total_weight: label.weight });
        false
    });
    out
}

/// Dijkstra on `(weight, hops, index sequence)` labels. `settle` sees every
/// node's final label in order and may stop the search by returning true.
fn label_search(
    graph: &IntersectionGraph,
    sources: &[usize],
    allowed: &dyn Fn(usize) -> bool,
    settle: &mut dyn FnMut(&Label) -> bool,
) {
    let mut best: Vec<Option<Label>> = vec![None; graph.len()];
    let mut done = vec![false; graph.len()];
    let mut heap = BinaryHeap::new();
    for &s in sources.iter().filter(|&&s| allowed(s)) {
        let l = Label { weight: 0.0, path: vec![s] };
        best[s] = Some(l.clone());
        heap.push(Reverse(l));
    }
    while let Some(Reverse(label)) = heap.pop() {
        let u = *label.path.last().expect("labels are nonempty");
        if done[u] {
            continue;
        }
        done[u] = true;
        if settle(&label) {
            return;
        }
        for &(v, w) in graph.neighbors(u) {
            if done[v] || !allowed(v) {
                continue;
            }
            let mut path = label.path.clone();
            path.push(v);
            let cand = Label { weight: label.weight + w, path };
            if best[v].as_ref().is_none_or(|b| cand < *b) {
                best[v] = Some(cand.clone());
                heap.push(Reverse(cand));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn b(x: f64, y: f64, r: f64) -> SafeBubble {
        SafeBubble::new(Point::xy(x, y), r)
    }

    fn chain() -> BubbleCover {
        BubbleCover::from_bubbles(2, vec![b(0.0, 0.0, 1.0), b(1.5, 0.0, 1.0), b(3.0, 0.0, 1.0)])
    }

    #[test]
    fn paths_to_every_node() {
        let g = build_intersection_graph(&chain());
        let all = bubble_paths_from(&g, &[0], &|_| true);
        assert_eq!(all[2].as_ref().unwrap().indices, vec![0, 1, 2]);
        assert_abs_diff_eq!(all[2].as_ref().unwrap().total_weight, 3.0, epsilon = 1e-12);
        let blocked = bubble_paths_from(&g, &[0], &|i| i != 1);
        assert!(blocked[2].is_none());
        assert_eq!(blocked[0].as_ref().unwrap().indices, vec![0]);
    }

    #[test]
    fn collinear_chain_edges() {
        let g = build_intersection_graph(&chain());
        let pairs: Vec<_> = g.edges.iter().map(|&(i, j, _)| (i, j)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2)]);
        let single = BubbleCover::from_bubbles(2, vec![b(0.0, 0.0, 1.0)]);
        assert!(build_intersection_graph(&single).edges.is_empty());
    }

    #[test]
    fn containing_is_closed() {
        let c = chain();
        assert_eq!(containing_bubbles(&c, &Point::xy(0.0, 0.0)).unwrap(), vec![0]);
        assert_eq!(containing_bubbles(&c, &Point::xy(1.0, 0.0)).unwrap(), vec![0, 1]);
        assert_eq!(containing_bubbles(&c, &Point::xy(4.0, 0.0)).unwrap(), vec![2]);
        assert!(containing_bubbles(&c, &Point::xyz(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn chain_path() {
        let g = build_intersection_graph(&chain());
        let p = shortest_bubble_path(&g, &Point::xy(0.0, 0.0), &Point::xy(3.0, 0.0)).unwrap();
        assert_eq!(p.indices, vec![0, 1, 2]);
        assert_abs_diff_eq!(p.total_weight, 3.0, epsilon = 1e-12);
        let same = shortest_bubble_path(&g, &Point::xy(0.1, 0.0), &Point::xy(-0.1, 0.0)).unwrap();
        assert_eq!(same.indices, vec![0]);
        assert_eq!(same.total_weight, 0.0);
    }

    #[test]
    fn search_errors() {
        let c = BubbleCover::from_bubbles(2, vec![b(0.0, 0.0, 1.0), b(5.0, 0.0, 1.0)]);
        let g = build_intersection_graph(&c);
        let err = |s, t| shortest_bubble_path(&g, &s, &t).unwrap_err();
        assert!(matches!(err(Point::xy(0.0, 0.0), Point::xy(5.0, 0.0)), Error::Disconnected));
        assert!(matches!(err(Point::xy(9.0, 0.0), Point::xy(5.0, 0.0)), Error::StartNotCovered));
        assert!(matches!(err(Point::xy(0.0, 0.0), Point::xy(9.0, 0.0)), Error::GoalNotCovered));
    }

    #[test]
    fn directed_cost() {
        let c = BubbleCover::from_bubbles(2, vec![b(0.0, 0.0, 2.0), b(2.5, 0.0, 1.0)]);
        let g = build_intersection_graph(&c);
        assert_abs_diff_eq!(g.cost(0, 1).unwrap(), 3.5);
        assert_abs_diff_eq!(g.cost(1, 0).unwrap(), 1.5);
        assert_eq!(g.edges[0].2, 3.5);
    }

    fn random_cover(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> BubbleCover {
        let bubbles = (0..n)
            .map(|_| {
                let c: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 6.0).collect();
                SafeBubble::new(Point::new(&c).unwrap(), 0.2 + rng.random::<f64>() * 1.5)
            })
            .collect();
        BubbleCover::from_bubbles(dim, bubbles)
    }

    #[test]
    fn hashed_graph_matches_all_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [2, 3] {
            for _ in 0..10 {
                let cover = random_cover(&mut rng, 100, dim);
                let a = build_intersection_graph(&cover);
                let e = build_intersection_graph_exhaustive(&cover);
                assert_eq!(a.edges, e.edges);
                assert_eq!(a.adjacency, e.adjacency);
            }
        }
    }

    /// Minimum over all simple paths, found by depth-first enumeration.
    fn enumerate_best(cover: &BubbleCover, start: &Point, goal: &Point) -> Option<(f64, Vec<usize>)> {
        let bs = &cover.bubbles;
        let n = bs.len();
        let mut best: Option<(f64, Vec<usize>)> = None;
        fn dfs(
            bs: &[SafeBubble],
            goal: &Point,
            path: &mut Vec<usize>,
            w: f64,
            best: &mut Option<(f64, Vec<usize>)>,
        ) {
            let u = *path.last().unwrap();
            if bs[u].contains_point(goal) {
                let better = match best {
                    None => true,
                    Some((bw, bp)) => {
                        w < *bw - 1e-12 || ((w - *bw).abs() <= 1e-12 && (path.len(), &*path) < (bp.len(), &*bp))
                    }
                };
                if better {
                    *best = Some((w, path.clone()));
                }
            }
            for v in 0..bs.len() {
                if !path.contains(&v) && bs[u].overlaps(&bs[v]) {
                    path.push(v);
                    dfs(bs, goal, path, w + hausdorff(&bs[u], &bs[v]), best);
                    path.pop();
                }
            }
        }
        for s in 0..n {
            if bs[s].contains_point(start) {
                dfs(bs, goal, &mut vec![s], 0.0, &mut best);
            }
        }
        best
    }

    #[test]
    fn dijkstra_matches_enumeration_on_small_covers() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        for trial in 0..400 {
            let n = 2 + trial % 7;
            let cover = random_cover(&mut rng, n, 2);
            let start = cover.bubbles[0].center;
            let goal = Point::xy(rng.random::<f64>() * 6.0, rng.random::<f64>() * 6.0);
            let g = build_intersection_graph(&cover);
            let got = shortest_bubble_path(&g, &start, &goal);
            match enumerate_best(&cover, &start, &goal) {
                Some((w, p)) => {
                    let got = got.unwrap();
                    assert_abs_diff_eq!(got.total_weight, w, epsilon = 1e-9);
                    assert_eq!(got.indices, p);
                    for pair in got.indices.windows(2) {
                        assert!(cover.bubbles[pair[0]].overlaps(&cover.bubbles[pair[1]]));
                    }
                    checked += 1;
                }
                None => assert!(got.is_err()),
            }
        }
        assert!(checked > 60, "only {checked} connected instances");
    }

    #[test]
    fn path_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = BubblePath { indices: vec![3, 1, 4], total_weight: 2.5 };
        let f = dir.path().join("path.json");
        p.to_file(&f).unwrap();
        assert_eq!(BubblePath::from_file(&f).unwrap(), p);
        let text = std::fs::read_to_string(&f).unwrap();
        assert!(text.contains("\"indices\"") && text.contains("\"total_weight\""));
    }
}
