//! Environment files: JSON describing either an analytic scene or an
//! occupancy grid stored as a PGM image.
//!
//! ```json
//! {"workspace": {"lower": [0, 0], "upper": [10, 10]},
//!  "analytic": [{"sphere": {"center": [5, 5], "radius": 1}}]}
//!
//! {"workspace": {"lower": [0, 0], "upper": [10, 10]},
//!  "occupancy": {"pgm": "map.pgm", "spacing": 0.05, "origin": [0, 0],
//!                "obstacle_threshold": 50}}
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_pgm, AnalyticScene, DistanceOracle, FieldSource, GridField, Occupancy, Primitive, Workspace};
use crate::error::{Error, Result};
use crate::point::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub workspace: Workspace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic: Option<Vec<Primitive>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupancy: Option<OccupancySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupancySpec {
    /// Relative paths resolve against the environment file's directory.
    pub pgm: PathBuf,
    pub spacing: f64,
    /// Lower-left corner of the map, in meters.
    pub origin: Point,
    /// Pixels at or below this value are obstacles.
    pub obstacle_threshold: u16,
}

/// A loaded environment: workspace plus distance field source.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub name: String,
    pub source: FieldSource,
}

impl Environment {
    pub fn analytic(name: impl Into<String>, scene: AnalyticScene) -> Self {
        Self { name: name.into(), source: FieldSource::Analytic(scene) }
    }

    pub fn workspace(&self) -> &Workspace {
        self.source.workspace()
    }

    pub fn scene(&self) -> Option<&AnalyticScene> {
        match &self.source {
            FieldSource::Analytic(s) => Some(s),
            FieldSource::Grid(_) => None,
        }
    }

    pub fn oracle(&self) -> DistanceOracle {
        DistanceOracle::new(self.source.clone())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: EnvFile =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fallback = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        Self::from_file(file, base, fallback)
    }

    pub fn from_file(file: EnvFile, base_dir: &Path, fallback_name: Option<String>) -> Result<Self> {
        let name = file.name.or(fallback_name).unwrap_or_else(|| "env".into());
        let source = match (file.analytic, file.occupancy) {
            (Some(prims), None) => FieldSource::Analytic(AnalyticScene::new(file.workspace, prims)?),
            (None, Some(spec)) => {
                let occ = spec.load(base_dir)?;
                FieldSource::Grid(GridField::from_occupancy(&occ, file.workspace)?)
            }
            _ => {
                return Err(Error::InvalidInput(
                    "environment needs exactly one of \"analytic\" or \"occupancy\"".into(),
                ))
            }
        };
        Ok(Self { name, source })
    }

    /// File form of an analytic environment. Grid environments reference an
    /// external image and are not round-tripped.
    pub fn to_file(&self) -> Option<EnvFile> {
        self.scene().map(|s| EnvFile {
            name: Some(self.name.clone()),
            workspace: s.workspace,
            analytic: Some(s.primitives.clone()),
            occupancy: None,
        })
    }
}

impl OccupancySpec {
    pub fn load(&self, base_dir: &Path) -> Result<Occupancy> {
        let path = if self.pgm.is_absolute() { self.pgm.clone() } else { base_dir.join(&self.pgm) };
        let pgm = read_pgm(&path)?;
        self.origin.check_dim(2)?;
        let mut occupied = vec![false; pgm.width * pgm.height];
        for row in 0..pgm.height {
            // Image rows run top to bottom; grid rows run along +y.
            let iy = pgm.height - 1 - row;
            for ix in 0..pgm.width {
                occupied[ix + pgm.width * iy] = pgm.pixels[row * pgm.width + ix] <= self.obstacle_threshold;
            }
        }
        Occupancy::new(self.origin, self.spacing, vec![pgm.width, pgm.height], occupied)
    }
}
