//! Bubble cover construction.
//!
//! - [`brm`]: bubble roadmap, independent uniform centers.
//! - [`rbg`]: rapidly exploring bubble graph, grows toward samples drawn
//!   outside the current cover.
//! - [`ebg`]: expansive bubble graph, largest-first expansion with an
//!   overlap gate.

mod brm;
mod directions;
mod ebg;
mod rbg;

pub use brm::brm;
pub use directions::{directions_with_count, expansion_directions, fibonacci_sphere, uniform_directions};
pub use ebg::ebg;
pub(crate) use ebg::ebg_gated;
pub use rbg::{rbg, steer};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Footprint radius subtracted from every distance query (m).
    pub eps: f64,
    /// Bubbles must be strictly larger than this (m).
    pub r_min: f64,
    /// BRM sample count.
    pub n_sample: usize,
    /// EBG directions per dimension; each expansion tries `n_explore^m`.
    pub n_explore: usize,
    /// Total EBG directions per expansion, replacing `n_explore^m` when set.
    pub n_directions: Option<usize>,
    /// EBG overlap factor in [0, 1].
    pub k_overlap: f64,
    /// RBG sampling box growth, as a fraction of the workspace extent per side.
    pub inflation: f64,
    /// Defaults to 1000 in 2D and 3000 in 3D.
    pub max_bubbles: Option<usize>,
    /// Consecutive failures before RBG gives up. Defaults to `10 * max_bubbles`.
    pub max_rejections: Option<usize>,
    /// Cap on RBG loop iterations or EBG queue pops.
    pub max_iterations: Option<usize>,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            eps: 0.1,
            r_min: 0.05,
            n_sample: 1000,
            n_explore: 4,
            n_directions: None,
            k_overlap: 0.5,
            inflation: 0.1,
            max_bubbles: None,
            max_rejections: None,
            max_iterations: None,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.eps >= 0.0) {
            return bad(format!("eps {} must be >= 0", self.eps));
        }
        if !(self.r_min > 0.0) {
            return bad(format!("r_min {} must be > 0", self.r_min));
        }
        if self.n_explore < 2 {
            return bad(format!("n_explore {} must be >= 2", self.n_explore));
        }
        if self.n_directions.is_some_and(|n| n < 2) {
            return bad("n_directions must be >= 2".into());
        }
        if !(0.0..=1.0).contains(&self.k_overlap) {
            return bad(format!("k_overlap {} must lie in [0, 1]", self.k_overlap));
        }
        if !(self.inflation >= 0.0) {
            return bad(format!("inflation {} must be >= 0", self.inflation));
        }
        if self.max_bubbles == Some(0) {
            return bad("max_bubbles must be positive".into());
        }
        Ok(())
    }

    pub fn direction_count(&self, dim: usize) -> usize {
        self.n_directions.unwrap_or(self.n_explore.pow(dim as u32))
    }

    pub fn max_bubbles_for(&self, dim: usize) -> usize {
        self.max_bubbles.unwrap_or(if dim >= 3 { 3000 } else { 1000 })
    }

    pub fn max_rejections_for(&self, dim: usize) -> usize {
        self.max_rejections.unwrap_or(10 * self.max_bubbles_for(dim))
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iterations.unwrap_or(usize::MAX)
    }
}

/// When an iterative sampler stops. Every mode also honors
/// `max_iterations`; `BubbleCount` and `GoalContained` stop at `max_bubbles`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    BubbleCount,
    GoalContained(Point),
    /// Run EBG until its queue drains (RBG: until saturation).
    QueueEmpty,
}

impl Termination {
    pub(crate) fn reached(&self, cover: &crate::bubbles::BubbleCover, max_bubbles: usize) -> bool {
        match self {
            Termination::BubbleCount => cover.len() >= max_bubbles,
            Termination::GoalContained(g) => {
                cover.len() >= max_bubbles
                    || cover.bubbles.last().is_some_and(|b| b.contains_point(g))
            }
            Termination::QueueEmpty => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Brm,
    Rbg,
    Ebg,
}

impl SamplerKind {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::Brm => "brm",
            SamplerKind::Rbg => "rbg",
            SamplerKind::Ebg => "ebg",
        }
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brm" => Ok(SamplerKind::Brm),
            "rbg" => Ok(SamplerKind::Rbg),
            "ebg" => Ok(SamplerKind::Ebg),
            other => Err(Error::InvalidInput(format!("unknown sampler {other:?}"))),
        }
    }
}
