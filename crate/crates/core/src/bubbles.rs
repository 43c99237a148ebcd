//! Safe bubbles: balls certified obstacle-free by a single distance query.
//!
//! For a constraint `l(y) = d(y) - eps >= 0` with Lipschitz constant `L`,
//! every point of the ball centered at `y` with radius `l(y) / L` satisfies
//! the constraint as well.

use serde::{Deserialize, Serialize};

use crate::distance_field::DistanceOracle;
use crate::error::{Error, Result};
use crate::point::Point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafeBubble {
    pub center: Point,
    pub radius: f64,
}

impl SafeBubble {
    pub fn new(center: Point, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Signed distance from `y` to the bubble boundary, `|y - c| - r`.
    #[inline]
    pub fn distance_to(&self, y: &Point) -> f64 {
        y.distance(&self.center) - self.radius
    }

    /// Closed-ball membership.
    #[inline]
    pub fn contains_point(&self, y: &Point) -> bool {
        y.distance(&self.center) <= self.radius
    }

    /// Strict overlap: tangent bubbles do not overlap.
    #[inline]
    pub fn overlaps(&self, other: &SafeBubble) -> bool {
        self.center.distance(&other.center) < self.radius + other.radius
    }

    /// Whether `self` lies inside `outer`.
    #[inline]
    pub fn is_inside(&self, outer: &SafeBubble) -> bool {
        self.center.distance(&outer.center) <= outer.radius - self.radius
    }

    /// Closest point of the closed ball to `y`.
    pub fn project(&self, y: &Point) -> Point {
        let d = *y - self.center;
        let n = d.norm();
        if n <= self.radius {
            *y
        } else {
            self.center + d * (self.radius / n)
        }
    }
}

/// Build the safe bubble at `y`, or `None` if its radius does not exceed
/// `r_min`. Makes exactly one oracle query.
pub fn make_bubble(oracle: &DistanceOracle, y: &Point, eps: f64, r_min: f64) -> Result<Option<SafeBubble>> {
    let d = oracle.query(y)?;
    let radius = (d - eps) / oracle.lipschitz();
    Ok((radius > r_min).then(|| SafeBubble::new(*y, radius)))
}

pub fn point_to_bubble_distance(y: &Point, b: &SafeBubble) -> Result<f64> {
    y.check_dim(b.dim())?;
    Ok(b.distance_to(y))
}

pub fn overlaps(bi: &SafeBubble, bj: &SafeBubble) -> bool {
    bi.overlaps(bj)
}

/// Whether `inner` is contained in `outer`.
pub fn contains(inner: &SafeBubble, outer: &SafeBubble) -> bool {
    inner.is_inside(outer)
}

/// Edge weight between overlapping bubbles: `| |c_i - c_j| + r_i - r_j |`,
/// the worst-case distance from a point of `bi` to `bj` (exact unless `bi`
/// is nested inside `bj`, where the formula is still applied as written).
#[inline]
pub fn hausdorff(bi: &SafeBubble, bj: &SafeBubble) -> f64 {
    (bi.center.distance(&bj.center) + bi.radius - bj.radius).abs()
}

/// Ordered set of bubbles.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleCover {
    pub dim: usize,
    pub bubbles: Vec<SafeBubble>,
    /// Index of the bubble containing the seed point, when there is one.
    pub seed_index: Option<usize>,
    /// Set when rejection sampling gave up before the termination condition.
    pub saturated: bool,
    /// Sampler iteration at which each bubble was added; 0 marks a seed bubble.
    pub added_at: Vec<usize>,
}

impl BubbleCover {
    pub fn new(dim: usize) -> Self {
        Self { dim, bubbles: Vec::new(), seed_index: None, saturated: false, added_at: Vec::new() }
    }

    pub fn from_bubbles(dim: usize, bubbles: Vec<SafeBubble>) -> Self {
        let added_at = (1..=bubbles.len()).collect();
        Self { dim, bubbles, seed_index: None, saturated: false, added_at }
    }

    pub fn len(&self) -> usize {
        self.bubbles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bubbles.is_empty()
    }

    pub fn push(&mut self, b: SafeBubble, iteration: usize) {
        self.bubbles.push(b);
        self.added_at.push(iteration);
    }

    /// The cover as it stood after `iteration` sampler iterations.
    pub fn prefix_at(&self, iteration: usize) -> BubbleCover {
        let n = self.added_at.partition_point(|&it| it <= iteration);
        BubbleCover {
            dim: self.dim,
            bubbles: self.bubbles[..n].to_vec(),
            seed_index: self.seed_index.filter(|&s| s < n),
            saturated: false,
            added_at: self.added_at[..n].to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for b in &self.bubbles {
            b.center.check_dim(self.dim)?;
            if !(b.radius > 0.0) || !b.center.is_finite() {
                return Err(Error::InvalidInput(format!("invalid bubble {b:?}")));
            }
        }
        if let Some(s) = self.seed_index {
            if s >= self.bubbles.len() {
                return Err(Error::InvalidInput(format!("seed_index {s} out of range")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CoverFile::from(self)).expect("cover serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CoverFile = serde_json::from_str(text)?;
        let cover = BubbleCover {
            seed_index: file.seed_index,
            ..BubbleCover::from_bubbles(file.dim, file.bubbles)
        };
        cover.validate()?;
        Ok(cover)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoverFile {
    dim: usize,
    bubbles: Vec<SafeBubble>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed_index: Option<usize>,
}

impl From<&BubbleCover> for CoverFile {
    fn from(c: &BubbleCover) -> Self {
        CoverFile { dim: c.dim, bubbles: c.bubbles.clone(), seed_index: c.seed_index }
    }
}
