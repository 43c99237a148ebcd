use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::bezier::{bernstein_gram, difference_matrix, falling};
use crate::bubbles::{BubbleCover, SafeBubble};
use crate::error::{Error, Result};
use crate::graph::BubblePath;
use crate::point::Point;

/// Which derivative is penalized and how many derivatives match at junctions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    pub d_cost: usize,
    pub r_cont: usize,
}

impl CostSpec {
    /// Squared speed, a length surrogate.
    pub fn length() -> Self {
        Self { d_cost: 1, r_cont: 4 }
    }

    pub fn snap() -> Self {
        Self { d_cost: 4, r_cont: 4 }
    }

    /// Lower `r_cont` to `K - 1` when the order cannot carry it.
    pub fn fit_order(self, order: usize) -> Self {
        Self { r_cont: self.r_cont.min(order.saturating_sub(1)), ..self }
    }

    pub fn validate(&self, order: usize) -> Result<()> {
        if self.d_cost == 0 || self.d_cost > order {
            return Err(Error::InvalidInput(format!("d_cost {} must lie in [1, K={order}]", self.d_cost)));
        }
        if self.r_cont + 1 > order {
            return Err(Error::InvalidInput(format!("r_cont {} needs K >= r_cont + 1, K={order}", self.r_cont)));
        }
        Ok(())
    }
}

impl std::str::FromStr for CostSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "length" => Ok(Self::length()),
            "snap" => Ok(Self::snap()),
            other => Err(Error::InvalidInput(format!("unknown cost {other:?}, expected length or snap"))),
        }
    }
}

/// Quadratic program over control points with ball constraints.
///
/// Variables are the control points `b_k^p` stacked as row `p * (K + 1) + k`
/// of an `n x m` matrix. The cost is `sum over coordinates of x^T Q x`; the
/// equalities `A x = b` are shared by all coordinates with per-coordinate
/// right-hand sides. Rows of `A` have unit norm.
#[derive(Debug, Clone)]
pub struct ConvexProblem {
    pub dim: usize,
    pub order: usize,
    pub durations: Vec<f64>,
    pub cost: CostSpec,
    pub q: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    /// One ball per control point.
    pub balls: Vec<SafeBubble>,
}

impl ConvexProblem {
    pub fn n_segments(&self) -> usize {
        self.durations.len()
    }

    pub fn n_vars(&self) -> usize {
        self.balls.len()
    }

    pub fn index(&self, p: usize, k: usize) -> usize {
        p * (self.order + 1) + k
    }

    /// `sum_c x_c^T Q x_c`.
    pub fn objective(&self, x: &DMatrix<f64>) -> f64 {
        (x.transpose() * &self.q * x).trace()
    }

    /// Largest absolute entry of `A x - b`.
    pub fn equality_residual(&self, x: &DMatrix<f64>) -> f64 {
        (&self.a * x - &self.b).amax()
    }

    /// Largest amount by which a control point leaves its ball.
    pub fn ball_violation(&self, x: &DMatrix<f64>) -> f64 {
        self.balls
            .iter()
            .enumerate()
            .map(|(i, ball)| {
                let p = Point::new(&x.row(i).iter().copied().collect::<Vec<_>>()).expect("valid row");
                ball.distance_to(&p).max(0.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Segment durations `r_p / v0`.
pub fn default_durations(path: &BubblePath, cover: &BubbleCover, v0: f64) -> Result<Vec<f64>> {
    if !(v0 > 0.0) {
        return Err(Error::InvalidInput(format!("nominal speed {v0} must be positive")));
    }
    Ok(path.bubbles(cover).map(|b| b.radius / v0).collect())
}

/// Integral of the squared `d`-th derivative of one segment as a quadratic
/// form in its control points (one coordinate).
pub fn segment_cost_matrix(order: usize, d: usize, duration: f64) -> DMatrix<f64> {
    let diff = difference_matrix(order, d);
    let gram = bernstein_gram(order - d);
    let scale = falling(order, d).powi(2) / duration.powi(2 * d as i32 - 1);
    diff.transpose() * gram * diff * scale
}

pub fn assemble_problem(
    path: &BubblePath,
    cover: &BubbleCover,
    y_s: &Point,
    y_g: &Point,
    order: usize,
    cost: CostSpec,
    durations: &[f64],
) -> Result<ConvexProblem> {
    cost.validate(order)?;
    if path.is_empty() {
        return Err(Error::InvalidInput("empty bubble path".into()));
    }
    if durations.len() != path.len() {
        return Err(Error::InvalidInput(format!(
            "{} durations for a path of {} bubbles",
            durations.len(),
            path.len()
        )));
    }
    if let Some(t) = durations.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::InvalidInput(format!("segment duration {t} must be positive")));
    }
    let dim = cover.dim;
    y_s.check_dim(dim)?;
    y_g.check_dim(dim)?;
    let bubbles: Vec<SafeBubble> = path.bubbles(cover).copied().collect();
    let first = bubbles[0];
    let last = bubbles[bubbles.len() - 1];
    if !first.contains_point(y_s) {
        return Err(Error::InfeasibleEndpoint { which: "start", distance: first.distance_to(y_s) });
    }
    if !last.contains_point(y_g) {
        return Err(Error::InfeasibleEndpoint { which: "goal", distance: last.distance_to(y_g) });
    }

    let np = bubbles.len();
    let kp1 = order + 1;
    let n = np * kp1;
    let mut q = DMatrix::zeros(n, n);
    for (p, &t) in durations.iter().enumerate() {
        let block = segment_cost_matrix(order, cost.d_cost, t);
        q.view_mut((p * kp1, p * kp1), (kp1, kp1)).copy_from(&block);
    }
    // Symmetrize away rounding.
    let q = (&q + q.transpose()) * 0.5;

    let n_eq = 2 + (np - 1) * (cost.r_cont + 1);
    let mut a = DMatrix::zeros(n_eq, n);
    let mut b = DMatrix::zeros(n_eq, dim);
    a[(0, 0)] = 1.0;
    a[(1, n - 1)] = 1.0;
    for c in 0..dim {
        b[(0, c)] = y_s[c];
        b[(1, c)] = y_g[c];
    }
    let mut row = 2;
    for p in 0..np - 1 {
        for d in 0..=cost.r_cont {
            let diff = difference_matrix(d, d);
            let left = durations[p].powi(d as i32).recip();
            let right = durations[p + 1].powi(d as i32).recip();
            for j in 0..=d {
                a[(row, p * kp1 + order - d + j)] += diff[(0, j)] * left;
                a[(row, (p + 1) * kp1 + j)] -= diff[(0, j)] * right;
            }
            let norm = a.row(row).norm();
            a.row_mut(row).scale_mut(norm.recip());
            row += 1;
        }
    }

    let balls = bubbles.iter().flat_map(|bb| std::iter::repeat_n(*bb, kp1)).collect();
    Ok(ConvexProblem { dim, order, durations: durations.to_vec(), cost, q, a, b, balls })
}
