use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use super::{conservative_margin, AnalyticScene, GridField, Workspace};
use crate::error::{Error, Result};
use crate::point::{Point, MAX_DIM};

/// Query points are considered identical after rounding to this grid (m).
const UNIQUE_QUANTUM: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldSource {
    Analytic(AnalyticScene),
    Grid(GridField),
}

impl FieldSource {
    pub fn workspace(&self) -> &Workspace {
        match self {
            FieldSource::Analytic(s) => &s.workspace,
            FieldSource::Grid(g) => &g.workspace,
        }
    }

    /// Margin applied by the oracle on top of the raw field value.
    pub fn margin(&self) -> f64 {
        match self {
            FieldSource::Analytic(_) => 0.0,
            FieldSource::Grid(g) => conservative_margin(g),
        }
    }

    #[inline]
    fn evaluate(&self, y: &Point) -> f64 {
        match self {
            FieldSource::Analytic(s) => s.signed_distance(y),
            FieldSource::Grid(g) => g.conservative_distance(y),
        }
    }
}

#[derive(Debug, Default)]
struct QueryStats {
    total: AtomicU64,
    out_of_domain: AtomicU64,
    unique: Mutex<HashSet<[i64; MAX_DIM]>>,
}

impl QueryStats {
    fn record(&self, key: [i64; MAX_DIM], out_of_domain: bool) {
        self.total.fetch_add(1, Ordering::Relaxed);
        if out_of_domain {
            self.out_of_domain.fetch_add(1, Ordering::Relaxed);
        }
        self.unique.lock().expect("query stats poisoned").insert(key);
    }

    fn snapshot(&self) -> QueryCounts {
        QueryCounts {
            total: self.total.load(Ordering::Relaxed),
            unique: self.unique.lock().expect("query stats poisoned").len() as u64,
            out_of_domain: self.out_of_domain.load(Ordering::Relaxed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QueryCounts {
    pub total: u64,
    pub unique: u64,
    pub out_of_domain: u64,
}

/// Counted distance oracle.
///
/// Cloning shares both the field and the counters. [`DistanceOracle::fork`]
/// shares the field but starts fresh counters that also feed the parent's.
#[derive(Debug, Clone)]
pub struct DistanceOracle {
    source: Arc<FieldSource>,
    lipschitz: f64,
    stats: Arc<QueryStats>,
    ancestors: Vec<Arc<QueryStats>>,
}

impl DistanceOracle {
    pub fn new(source: FieldSource) -> Self {
        Self::with_lipschitz(source, 1.0).expect("L = 1 is valid")
    }

    pub fn analytic(scene: AnalyticScene) -> Self {
        Self::new(FieldSource::Analytic(scene))
    }

    pub fn grid(field: GridField) -> Self {
        Self::new(FieldSource::Grid(field))
    }

    /// Distance fields are 1-Lipschitz; larger constants model other
    /// Lipschitz safety margins and only shrink bubbles.
    pub fn with_lipschitz(source: FieldSource, lipschitz: f64) -> Result<Self> {
        if !(lipschitz >= 1.0) {
            return Err(Error::InvalidInput(format!("Lipschitz constant {lipschitz} must be >= 1")));
        }
        Ok(Self {
            source: Arc::new(source),
            lipschitz,
            stats: Arc::default(),
            ancestors: Vec::new(),
        })
    }

    pub fn source(&self) -> &FieldSource {
        &self.source
    }

    pub fn workspace(&self) -> &Workspace {
        self.source.workspace()
    }

    pub fn dim(&self) -> usize {
        self.workspace().dim()
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Lower bound on the distance from `y` to the obstacle set. Every call
    /// counts as exactly one query.
    pub fn query(&self, y: &Point) -> Result<f64> {
        y.check_dim(self.dim())?;
        let out_of_domain = !self.workspace().contains(y);
        let key = quantize(y);
        self.stats.record(key, out_of_domain);
        for a in &self.ancestors {
            a.record(key, out_of_domain);
        }
        Ok(self.source.evaluate(y))
    }

    /// Same value as [`query`](Self::query) without touching the counters.
    /// Meant for verification code, not planners.
    pub fn evaluate_uncounted(&self, y: &Point) -> f64 {
        self.source.evaluate(y)
    }

    pub fn counts(&self) -> QueryCounts {
        self.stats.snapshot()
    }

    /// An oracle over the same field with zeroed counters. Queries made
    /// through the fork are also recorded in this oracle's counters.
    pub fn fork(&self) -> DistanceOracle {
        let mut ancestors = self.ancestors.clone();
        ancestors.push(self.stats.clone());
        DistanceOracle {
            source: self.source.clone(),
            lipschitz: self.lipschitz,
            stats: Arc::default(),
            ancestors,
        }
    }

    /// A fork that does not report to this oracle.
    pub fn detached(&self) -> DistanceOracle {
        DistanceOracle {
            source: self.source.clone(),
            lipschitz: self.lipschitz,
            stats: Arc::default(),
            ancestors: Vec::new(),
        }
    }
}

fn quantize(y: &Point) -> [i64; MAX_DIM] {
    let mut key = [0i64; MAX_DIM];
    for (k, c) in key.iter_mut().zip(y.as_slice()) {
        *k = (c / UNIQUE_QUANTUM).round() as i64;
    }
    key
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance_field::{Occupancy, Primitive};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ws2() -> Workspace {
        Workspace::new(Point::xy(-5.0, -5.0), Point::xy(5.0, 5.0)).unwrap()
    }

    fn sphere_oracle() -> DistanceOracle {
        let scene =
            AnalyticScene::new(ws2(), vec![Primitive::sphere(Point::xy(0.0, 0.0), 1.0)]).unwrap();
        DistanceOracle::analytic(scene)
    }

    #[test]
    fn analytic_queries() {
        let o = sphere_oracle();
        assert_eq!(o.query(&Point::xy(3.0, 0.0)).unwrap(), 2.0);
        let boxed = AnalyticScene::new(
            ws2(),
            vec![Primitive::aabb(Point::xy(1.0, 1.0), Point::xy(2.0, 2.0))],
        )
        .unwrap();
        let o2 = DistanceOracle::analytic(boxed);
        assert!((o2.query(&Point::xy(0.0, 0.0)).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(o.source().margin(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let o = sphere_oracle();
        assert!(matches!(
            o.query(&Point::xyz(0.0, 0.0, 0.0)),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
        assert_eq!(o.counts().total, 0);
    }

    #[test]
    fn out_of_domain_is_flagged_not_rejected() {
        let o = sphere_oracle();
        let v = o.query(&Point::xy(9.0, 0.0)).unwrap();
        assert_eq!(v, 8.0);
        assert_eq!(o.counts().out_of_domain, 1);
    }

    #[test]
    fn counters_are_exact() {
        let o = sphere_oracle();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Point> = (0..100).map(|_| ws2().sample_uniform(&mut rng)).collect();
        for p in &pts {
            o.query(p).unwrap();
        }
        for p in &pts[..10] {
            o.query(p).unwrap();
        }
        let c = o.counts();
        assert_eq!(c.total, 110);
        assert_eq!(c.unique, 100);
    }

    #[test]
    fn counters_exact_under_concurrency() {
        use rayon::prelude::*;
        let o = sphere_oracle();
        (0..10_000u32).into_par_iter().for_each(|i| {
            let p = Point::xy((i % 100) as f64 * 0.01, 0.5);
            o.query(&p).unwrap();
        });
        let c = o.counts();
        assert_eq!(c.total, 10_000);
        assert_eq!(c.unique, 100);
    }

    #[test]
    fn forks_feed_parent_counts() {
        let o = sphere_oracle();
        let a = o.fork();
        let b = o.fork();
        a.query(&Point::xy(2.0, 0.0)).unwrap();
        b.query(&Point::xy(2.0, 0.0)).unwrap();
        b.query(&Point::xy(3.0, 0.0)).unwrap();
        assert_eq!(a.counts().total, 1);
        assert_eq!(b.counts().total, 2);
        assert_eq!(o.counts().total, 3);
        assert_eq!(o.counts().unique, 2);
        let d = o.detached();
        d.query(&Point::xy(4.0, 0.0)).unwrap();
        assert_eq!(o.counts().total, 3);
    }

    #[test]
    fn lipschitz_below_one_rejected() {
        let scene = AnalyticScene::new(ws2(), vec![]).unwrap();
        assert!(DistanceOracle::with_lipschitz(FieldSource::Analytic(scene), 0.5).is_err());
    }

    /// One obstacle cell; the reported value at off-node points lies in
    /// `[true - h*sqrt(m)/2, true]` where true is the brute-force distance to
    /// the obstacle cell center.
    #[test]
    fn grid_single_cell_bounds() {
        let h = 0.25;
        let dims = vec![20, 16];
        let mut occupied = vec![false; 320];
        occupied[7 + 20 * 9] = true;
        let occ = Occupancy::new(Point::xy(0.0, 0.0), h, dims, occupied).unwrap();
        let obstacle = occ.node_center(&[7, 9]);
        let field = GridField::from_occupancy(&occ, occ.extent_workspace().unwrap()).unwrap();
        let o = DistanceOracle::grid(field);
        let delta = h * 2f64.sqrt() / 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ws = *o.workspace();
        for _ in 0..5000 {
            let y = ws.sample_uniform(&mut rng);
            let truth = y.distance(&obstacle);
            let v = o.query(&y).unwrap();
            if v > -h {
                assert!(v <= truth + 1e-9, "{v} > {truth}");
                assert!(v >= truth - delta - 1e-9 - outside_penalty(&y, &ws, h), "{v} << {truth}");
            }
        }
    }

    // Points within half a cell of the workspace border fall outside the
    // node lattice and take the clamp penalty on top of the margin.
    fn outside_penalty(y: &Point, ws: &Workspace, h: f64) -> f64 {
        let mut sq = 0.0;
        for i in 0..y.dim() {
            let lo = ws.lower[i] + h / 2.0;
            let hi = ws.upper[i] - h / 2.0;
            let d = if y[i] < lo { lo - y[i] } else if y[i] > hi { y[i] - hi } else { 0.0 };
            sq += d * d;
        }
        2.0 * sq.sqrt()
    }
}
