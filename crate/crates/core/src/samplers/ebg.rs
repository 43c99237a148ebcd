use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{directions_with_count, SamplerConfig, Termination};
use crate::bubbles::{make_bubble, BubbleCover, SafeBubble};
use crate::distance_field::DistanceOracle;
use crate::error::{Error, Result};
use crate::point::Point;
use crate::spatial::BubbleGrid;

const DUPLICATE_TOL: f64 = 1e-9;

struct Candidate {
    bubble: SafeBubble,
    seq: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Largest radius first, then earliest insertion.
    fn cmp(&self, other: &Self) -> Ordering {
        self.bubble
            .radius
            .total_cmp(&other.bubble.radius)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Centers that have ever been queued, hashed on a 1e-6 lattice so near
/// duplicates are found by scanning neighboring cells.
#[derive(Default)]
struct SeenCenters {
    cells: HashMap<[i64; 3], Vec<Point>>,
}

impl SeenCenters {
    const CELL: f64 = 1e-6;

    fn key(p: &Point) -> [i64; 3] {
        let mut k = [0i64; 3];
        for (i, c) in p.as_slice().iter().enumerate() {
            k[i] = (c / Self::CELL).floor() as i64;
        }
        k
    }

    fn contains_near(&self, p: &Point) -> bool {
        let k = Self::key(p);
        let dz = if p.dim() == 3 { -1..=1 } else { 0..=0 };
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in dz.clone() {
                    let key = [k[0] + dx, k[1] + dy, k[2] + dz];
                    if let Some(v) = self.cells.get(&key) {
                        if v.iter().any(|q| q.distance(p) <= DUPLICATE_TOL) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    fn insert(&mut self, p: Point) {
        self.cells.entry(Self::key(&p)).or_default().push(p);
    }
}

/// True when `candidate` may join a cover whose bubbles are `existing`:
/// its center is no deeper than `k_overlap * radius` inside any of them.
pub(crate) fn passes_overlap_gate<'a>(
    existing: impl IntoIterator<Item = &'a SafeBubble>,
    candidate: &SafeBubble,
    k_overlap: f64,
) -> bool {
    let limit = -k_overlap * candidate.radius;
    existing.into_iter().all(|b| b.distance_to(&candidate.center) >= limit)
}

/// Expansive bubble graph grown from `y_seed`.
///
/// Candidates sit in a max-heap on radius (FIFO on ties). A popped candidate
/// is confirmed unless its center lies deeper than `k_overlap * r` inside an
/// already confirmed bubble. Confirming a bubble of radius `r` at `y` queues
/// the children centered at `y + r * e` for `n_explore^m` directions `e`,
/// dropping children that fail the radius gate or repeat a queued center.
/// `max_iterations` caps heap pops.
pub fn ebg(oracle: &DistanceOracle, y_seed: &Point, cfg: &SamplerConfig, term: Termination) -> Result<BubbleCover> {
    Ok(ebg_gated(oracle, y_seed, cfg, term, &mut |_| true)?.0)
}

/// EBG where a confirmed bubble is expanded only if `expand` accepts it.
/// Returns the cover and, per bubble, whether it was expanded.
pub(crate) fn ebg_gated(
    oracle: &DistanceOracle,
    y_seed: &Point,
    cfg: &SamplerConfig,
    term: Termination,
    expand: &mut dyn FnMut(&SafeBubble) -> bool,
) -> Result<(BubbleCover, Vec<bool>)> {
    cfg.validate()?;
    let workspace = *oracle.workspace();
    let dim = workspace.dim();
    y_seed.check_dim(dim)?;
    let seed = make_bubble(oracle, y_seed, cfg.eps, cfg.r_min)?
        .ok_or_else(|| Error::SeedNotFree(format!("{y_seed:?}")))?;

    let max_bubbles = cfg.max_bubbles_for(dim);
    let max_iterations = cfg.max_iterations();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut cover = BubbleCover::new(dim);
    let mut index = BubbleGrid::new(&workspace.inflated(0.1), 32);
    let mut seen = SeenCenters::default();
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    seen.insert(seed.center);
    heap.push(Candidate { bubble: seed, seq });

    let mut expanded = Vec::new();
    let mut iteration = 0usize;
    while iteration < max_iterations && !term.reached(&cover, max_bubbles) {
        let Some(Candidate { bubble, .. }) = heap.pop() else { break };
        iteration += 1;
        let confirmed = index.candidates(&bubble.center).map(|i| &cover.bubbles[i]);
        if !passes_overlap_gate(confirmed, &bubble, cfg.k_overlap) {
            continue;
        }
        index.insert(cover.len(), &bubble);
        // The seed is recorded at iteration 0 like in RBG.
        cover.push(bubble, if cover.is_empty() { 0 } else { iteration });
        let grow = expand(&bubble);
        expanded.push(grow);
        if !grow {
            continue;
        }
        for e in directions_with_count(dim, cfg.direction_count(dim), &mut rng) {
            let y = bubble.center + e * bubble.radius;
            if seen.contains_near(&y) {
                continue;
            }
            seen.insert(y);
            if let Some(child) = make_bubble(oracle, &y, cfg.eps, cfg.r_min)? {
                seq += 1;
                heap.push(Candidate { bubble: child, seq });
            }
        }
    }
    cover.seed_index = Some(0);
    cover.saturated = heap.is_empty();
    Ok((cover, expanded))
}
