//! Piecewise Bezier trajectories kept inside a bubble path.
//!
//! Each path bubble gets one segment whose control points are constrained to
//! the bubble, so the convex hull property keeps the whole segment inside.

mod bezier;
mod problem;
mod solver;

use std::fmt::Write as _;
use std::path::Path;

pub use bezier::{bernstein_gram, difference_matrix, BezierSegment};
pub use problem::{assemble_problem, default_durations, segment_cost_matrix, ConvexProblem, CostSpec};
pub use solver::{solve, Solution, SolverSettings};

use serde::{Deserialize, Serialize};

use crate::bubbles::BubbleCover;
use crate::error::{Error, Result};
use crate::graph::BubblePath;
use crate::point::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajoptConfig {
    /// Bezier order of every segment.
    pub order: usize,
    pub cost: CostSpec,
    /// Nominal speed setting segment durations `r_p / v0`.
    pub v0: f64,
    pub solver: SolverSettings,
}

impl Default for TrajoptConfig {
    fn default() -> Self {
        Self { order: 5, cost: CostSpec::length(), v0: 1.0, solver: SolverSettings::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BezierTrajectory {
    pub segments: Vec<BezierSegment>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryFile {
    #[serde(rename = "K")]
    order: usize,
    segments: Vec<SegmentFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentFile {
    controls: Vec<Point>,
    duration: f64,
}

impl BezierTrajectory {
    pub fn order(&self) -> usize {
        self.segments.first().map_or(0, |s| s.order())
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Point at global time `t`.
    pub fn eval(&self, t: f64) -> Result<Point> {
        let total = self.duration();
        if !(0.0..=total).contains(&t) {
            return Err(Error::OutOfRange { t, duration: total });
        }
        let mut start = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            if t <= start + seg.duration || i + 1 == self.segments.len() {
                return Ok(seg.eval_unit(((t - start) / seg.duration).clamp(0.0, 1.0)));
            }
            start += seg.duration;
        }
        unreachable!("nonempty trajectory")
    }

    pub fn to_json(&self) -> String {
        let file = TrajectoryFile {
            order: self.order(),
            segments: self
                .segments
                .iter()
                .map(|s| SegmentFile { controls: s.controls.clone(), duration: s.duration })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("trajectory serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TrajectoryFile = serde_json::from_str(text)?;
        let segments = file
            .segments
            .into_iter()
            .map(|s| {
                let seg = BezierSegment::new(s.controls, s.duration)?;
                if seg.order() != file.order {
                    return Err(Error::InvalidInput(format!("segment of order {} in a K={} file", seg.order(), file.order)));
                }
                Ok(seg)
            })
            .collect::<Result<_>>()?;
        Ok(Self { segments })
    }

    pub fn to_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// `samples` evenly spaced rows `t,y1,..,ym` with a header line.
    pub fn polyline_csv(&self, samples: usize) -> String {
        let m = self.segments[0].dim();
        let mut out = String::from("t");
        for i in 1..=m {
            write!(out, ",y{i}").unwrap();
        }
        out.push('\n');
        let total = self.duration();
        let count = samples.max(2);
        for i in 0..count {
            let t = total * i as f64 / (count - 1) as f64;
            let y = self.eval(t.min(total)).expect("t within duration");
            write!(out, "{t}").unwrap();
            for c in y.as_slice() {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Arc length by adaptive Simpson quadrature of the speed on every segment.
pub fn trajectory_length(traj: &BezierTrajectory) -> f64 {
    traj.segments
        .iter()
        .map(|seg| {
            if seg.order() == 0 {
                return 0.0;
            }
            let vel = seg.derivative().expect("order >= 1");
            let speed = |s: f64| vel.eval_unit(s).norm() * seg.duration;
            let scale = seg.controls.windows(2).map(|w| w[0].distance(&w[1])).sum::<f64>();
            if scale == 0.0 {
                return 0.0;
            }
            // Four coarse panels keep a symmetric speed profile from fooling
            // the first Simpson comparison.
            (0..4)
                .map(|i| {
                    let (a, b) = (i as f64 / 4.0, (i + 1) as f64 / 4.0);
                    let (fa, fm, fb) = (speed(a), speed(0.5 * (a + b)), speed(b));
                    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
                    simpson(&speed, a, b, fa, fm, fb, whole, 1e-10 * scale, 40)
                })
                .sum()
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Optimized trajectory with its raw quadratic cost.
#[derive(Debug, Clone)]
pub struct PlannedTrajectory {
    pub trajectory: BezierTrajectory,
    pub cost: f64,
    pub iterations: usize,
}

/// Assemble and solve the trajectory problem along `path`.
pub fn plan_trajectory(
    cover: &BubbleCover,
    path: &BubblePath,
    y_s: &Point,
    y_g: &Point,
    cfg: &TrajoptConfig,
) -> Result<PlannedTrajectory> {
    let durations = default_durations(path, cover, cfg.v0)?;
    let problem = assemble_problem(path, cover, y_s, y_g, cfg.order, cfg.cost, &durations)?;
    let sol = solve(&problem, &cfg.solver)?;
    Ok(PlannedTrajectory { trajectory: to_trajectory(&problem, &sol), cost: sol.objective, iterations: sol.iterations })
}

pub fn to_trajectory(problem: &ConvexProblem, sol: &Solution) -> BezierTrajectory {
    let kp1 = problem.order + 1;
    let segments = problem
        .durations
        .iter()
        .enumerate()
        .map(|(p, &t)| {
            let controls = (0..kp1)
                .map(|k| {
                    let row = sol.x.row(p * kp1 + k);
                    Point::new(&row.iter().copied().collect::<Vec<_>>()).expect("valid dimension")
                })
                .collect();
            BezierSegment { controls, duration: t }
        })
        .collect();
    BezierTrajectory { segments }
}

#[cfg(test)]
mod tests;
