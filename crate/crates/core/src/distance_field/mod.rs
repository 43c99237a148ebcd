//! Distance oracles over 2D/3D workspaces.
//!
//! Two sources are supported: analytic scenes (unions of spheres and boxes,
//! exact signed distance) and grid fields built from occupancy grids by an
//! exact Euclidean distance transform. Both are wrapped by [`DistanceOracle`],
//! which reports a lower bound on the distance to the obstacle set and keeps
//! exact query counters.

mod analytic;
mod env;
mod grid;
mod oracle;
mod pgm;

pub use analytic::{AnalyticScene, Primitive};
pub use env::{EnvFile, Environment, OccupancySpec};
pub use grid::{conservative_margin, euclidean_distance_transform, GridField, Occupancy};
pub use oracle::{DistanceOracle, FieldSource, QueryCounts};
pub use pgm::{read_pgm, Pgm};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;

/// Axis-aligned workspace box in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWorkspace")]
pub struct Workspace {
    pub lower: Point,
    pub upper: Point,
}

#[derive(Deserialize)]
struct RawWorkspace {
    lower: Point,
    upper: Point,
}

impl TryFrom<RawWorkspace> for Workspace {
    type Error = Error;
    fn try_from(raw: RawWorkspace) -> Result<Self> {
        Workspace::new(raw.lower, raw.upper)
    }
}

impl Workspace {
    pub fn new(lower: Point, upper: Point) -> Result<Self> {
        lower.check_dim(upper.dim())?;
        if lower.as_slice().iter().zip(upper.as_slice()).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidInput(format!(
                "workspace lower {lower:?} must be strictly below upper {upper:?}"
            )));
        }
        Ok(Self { lower, upper })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn extent(&self) -> Point {
        self.upper - self.lower
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn volume(&self) -> f64 {
        self.extent().as_slice().iter().product()
    }

    pub fn center(&self) -> Point {
        (self.lower + self.upper) * 0.5
    }

    pub fn contains(&self, y: &Point) -> bool {
        y.as_slice()
            .iter()
            .zip(self.lower.as_slice().iter().zip(self.upper.as_slice()))
            .all(|(c, (l, u))| l <= c && c <= u)
    }

    /// Grow the box by `fraction` of its extent on every side.
    pub fn inflated(&self, fraction: f64) -> Workspace {
        let pad = self.extent() * fraction;
        Workspace { lower: self.lower - pad, upper: self.upper + pad }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let mut p = self.lower;
        for i in 0..self.dim() {
            p[i] = self.lower[i] + rng.random::<f64>() * (self.upper[i] - self.lower[i]);
        }
        p
    }
}
