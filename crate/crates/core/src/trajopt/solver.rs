use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::problem::ConvexProblem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iterations: usize,
    /// Over-relaxation factor.
    pub alpha: f64,
    /// Largest ball violation accepted after polishing.
    pub ball_tol: f64,
    /// Largest equality residual accepted after polishing.
    pub equality_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol: 1e-8, max_iterations: 10_000, alpha: 1.6, ball_tol: 1e-9, equality_tol: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// `n x m` control points, one row per control point.
    pub x: DMatrix<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Affine set `{x : A x = b}` written as `x0 + N y` with orthonormal `N`.
pub(crate) struct AffineSet {
    pub x0: DMatrix<f64>,
    pub null: DMatrix<f64>,
}

impl AffineSet {
    pub(crate) fn new(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Self> {
        let (n_eq, n) = a.shape();
        // Pad to square so the SVD returns a full set of right singular vectors.
        let mut padded = DMatrix::zeros(n.max(n_eq), n);
        padded.view_mut((0, 0), (n_eq, n)).copy_from(a);
        let svd = padded.svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let smax = svd.singular_values.max();
        let thr = 1e-10 * smax.max(1e-300);
        let rank_rows: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > thr).collect();
        let null_rows: Vec<usize> = (0..v_t.nrows()).filter(|i| !rank_rows.contains(i)).collect();

        // Minimum-norm solution through the pseudo-inverse.
        let mut x0 = DMatrix::zeros(n, b.ncols());
        for &i in &rank_rows {
            let v = v_t.row(i).transpose();
            let av = a * &v;
            let coeff = av.transpose() * b / (svd.singular_values[i] * svd.singular_values[i]);
            x0 += &v * coeff;
        }
        let residual = (a * &x0 - b).amax();
        if residual > 1e-9 * b.amax().max(1.0) {
            return Err(Error::InconsistentEqualities(residual));
        }
        let mut null = DMatrix::zeros(n, null_rows.len());
        for (c, &i) in null_rows.iter().enumerate() {
            null.set_column(c, &v_t.row(i).transpose());
        }
        Ok(Self { x0, null })
    }

    pub(crate) fn project(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let d = x - &self.x0;
        &self.x0 + &self.null * (self.null.transpose() * d)
    }
}

fn project_balls(problem: &ConvexProblem, x: &mut DMatrix<f64>) {
    for (i, ball) in problem.balls.iter().enumerate() {
        let c = ball.center.as_slice();
        let mut n2 = 0.0;
        for j in 0..problem.dim {
            n2 += (x[(i, j)] - c[j]).powi(2);
        }
        let n = n2.sqrt();
        if n > ball.radius {
            let s = ball.radius / n;
            for j in 0..problem.dim {
                x[(i, j)] = c[j] + (x[(i, j)] - c[j]) * s;
            }
        }
    }
}

/// Minimize the quadratic cost over the affine set intersected with the
/// balls by ADMM on the splitting `x = z`, with `x` kept in the affine set
/// and `z` in the balls. The result is polished by alternating projections.
pub fn solve(problem: &ConvexProblem, settings: &SolverSettings) -> Result<Solution> {
    let n = problem.n_vars();
    let m = problem.dim;
    let affine = AffineSet::new(&problem.a, &problem.b)?;
    let f = affine.null.ncols();

    let q_scale = problem.q.amax().max(1e-300);
    let q = &problem.q / q_scale;
    let nt = affine.null.transpose();
    let h = &nt * &q * &affine.null;
    let eig = h.clone().symmetric_eigen();
    let lam = eig.eigenvalues.map(|l| l.max(0.0));
    let v = eig.eigenvectors;
    let vt = v.transpose();
    let g0 = &nt * (&q * &affine.x0) * 2.0;

    let geom = problem
        .balls
        .iter()
        .map(|b| b.center.as_slice().iter().fold(0.0f64, |a, c| a.max(c.abs())) + b.radius)
        .fold(1.0, f64::max);

    let mut rho = if f == 0 {
        1.0
    } else {
        let lmax = lam.max().max(1e-12);
        let lmin = lam.iter().copied().filter(|&l| l > 1e-12 * lmax).fold(lmax, f64::min);
        (lmax * lmin).sqrt().clamp(1e-6, 1e6)
    };

    let mut z = affine.x0.clone();
    project_balls(problem, &mut z);
    let mut u = DMatrix::zeros(n, m);
    let mut x = affine.x0.clone();
    let mut iterations = 0;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let alpha = settings.alpha;
    let polish_every = 25;

    while iterations < settings.max_iterations {
        iterations += 1;
        if f > 0 {
            let rhs = &nt * (&z - &u - &affine.x0) * rho - &g0;
            let mut w = &vt * rhs;
            for i in 0..f {
                let s = (2.0 * lam[i] + rho).recip();
                w.row_mut(i).scale_mut(s);
            }
            x = &affine.x0 + &affine.null * (&v * w);
        }
        let x_hat = &x * alpha + &z * (1.0 - alpha);
        let mut z_new = &x_hat + &u;
        project_balls(problem, &mut z_new);
        u += &x_hat - &z_new;

        primal = (&x - &z_new).amax();
        dual = rho * (&z_new - &z).amax();
        z = z_new;

        let eps_p = settings.tol * geom;
        let eps_d = settings.tol * (rho * u.amax()).max((&q * &x).amax() * 2.0).max(1.0);
        let converged = primal <= eps_p && dual <= eps_d;
        let polish_now = iterations % polish_every == 0
            && ((iterations / polish_every).is_power_of_two() || iterations % (16 * polish_every) == 0);
        if converged || polish_now {
            let mu = initial_multipliers(problem, &(&u * rho));
            if let Some(xp) = proximal_polish(problem, &q, &affine, &z, mu, geom) {
                if let Some(xp) = polish(problem, &affine, xp, settings) {
                    return Ok(Solution {
                        objective: problem.objective(&xp),
                        x: xp,
                        iterations,
                        primal_residual: primal,
                        dual_residual: dual,
                    });
                }
            }
        }
        if converged {
            let x = polish(problem, &affine, z, settings).ok_or(Error::NotConverged { iterations, primal, dual })?;
            return Ok(Solution { objective: problem.objective(&x), x, iterations, primal_residual: primal, dual_residual: dual });
        }
        if iterations % 25 == 0 && f > 0 {
            let ratio = (primal / eps_p) / (dual / eps_d).max(1e-300);
            if !(0.2..=5.0).contains(&ratio) {
                let new_rho = (rho * ratio.sqrt()).clamp(1e-8, 1e8);
                u *= rho / new_rho;
                rho = new_rho;
            }
        }
    }
    Err(Error::NotConverged { iterations, primal, dual })
}

/// Repeat the dual solve with the proximal anchor moved to the last answer
/// until the anchor stops moving.
fn proximal_polish(
    problem: &ConvexProblem,
    q: &DMatrix<f64>,
    affine: &AffineSet,
    z: &DMatrix<f64>,
    mu: Vec<f64>,
    geom: f64,
) -> Option<DMatrix<f64>> {
    let (mut x, mut mu) = newton_polish(problem, q, affine, z, mu, geom)?;
    for _ in 0..3 {
        let anchor = x;
        let (next, next_mu) = newton_polish(problem, q, affine, &anchor, mu, geom)?;
        let moved = (&next - &anchor).amax();
        x = next;
        mu = next_mu;
        if moved <= 1e-9 * geom {
            break;
        }
    }
    Some(x)
}

fn row_point(x: &DMatrix<f64>, i: usize, m: usize) -> [f64; 3] {
    let mut p = [0.0; 3];
    for (j, slot) in p.iter_mut().enumerate().take(m) {
        *slot = x[(i, j)];
    }
    p
}

/// Proximal weight toward the anchor; it only selects among minimizers in
/// directions the cost does not see.
const PROX: f64 = 1e-9;

/// Multiplier guesses from the ADMM dual `y_i = 2 mu_i (z_i - c_i)`.
fn initial_multipliers(problem: &ConvexProblem, y: &DMatrix<f64>) -> Vec<f64> {
    let m = problem.dim;
    problem
        .balls
        .iter()
        .enumerate()
        .map(|(i, ball)| row_point(y, i, m).iter().map(|v| v * v).sum::<f64>().sqrt() / (2.0 * ball.radius))
        .collect()
}

/// Near-exact solve through the Lagrangian dual of the ball constraints.
///
/// For multipliers `mu >= 0` the minimizer of
/// `x^T Q x + PROX |x - z|^2 + sum mu_i (|x_i - c_i|^2 - r_i^2)` over the
/// affine set is one linear solve. The dual function is concave in `mu` with
/// gradient equal to the ball gaps, so projected Newton with a
/// Levenberg-Marquardt ridge climbs it until complementarity holds.
fn newton_polish(
    problem: &ConvexProblem,
    q: &DMatrix<f64>,
    affine: &AffineSet,
    z: &DMatrix<f64>,
    mut mu: Vec<f64>,
    geom: f64,
) -> Option<(DMatrix<f64>, Vec<f64>)> {
    let n = problem.n_vars();
    let m = problem.dim;
    let f = affine.null.ncols();
    let nt = affine.null.transpose();
    let centers = DMatrix::from_fn(n, m, |i, j| problem.balls[i].center[j]);

    let gap = |x: &DMatrix<f64>, i: usize| -> f64 {
        let b = &problem.balls[i];
        let d2: f64 = (0..m).map(|j| (x[(i, j)] - b.center[j]).powi(2)).sum();
        d2 - b.radius * b.radius
    };
    // Minimizer, its factorization and the dual value.
    let solve_x = |mu: &[f64]| -> Option<(DMatrix<f64>, nalgebra::Cholesky<f64, nalgebra::Dyn>, f64)> {
        let mut p = q.clone();
        for i in 0..n {
            p[(i, i)] += mu[i] + PROX;
        }
        let chol = (&nt * &p * &affine.null).cholesky()?;
        let mc = DMatrix::from_fn(n, m, |i, j| mu[i] * centers[(i, j)] + PROX * z[(i, j)]);
        let rhs = &nt * (mc - &p * &affine.x0);
        let yv = if f == 0 { DMatrix::zeros(0, m) } else { chol.solve(&rhs) };
        let x = &affine.x0 + &affine.null * yv;
        let mut value = (x.transpose() * q * &x).trace() + PROX * (&x - z).norm_squared();
        for (i, &mi) in mu.iter().enumerate() {
            value += mi * gap(&x, i);
        }
        Some((x, chol, value))
    };
    let residual = |mu: &[f64], x: &DMatrix<f64>| -> f64 {
        (0..n).map(|i| if mu[i] > 0.0 { gap(x, i).abs() } else { gap(x, i).max(0.0) }).fold(0.0, f64::max)
    };
    let tol = 1e-10 * geom * geom;

    let (mut x, mut chol, mut value) = solve_x(&mu)?;
    let mut ridge = 1e-12;
    for _ in 0..100 {
        let res = residual(&mu, &x);
        if res <= tol {
            return Some((x, mu));
        }
        let g: Vec<f64> = (0..n).map(|i| gap(&x, i)).collect();
        let idx: Vec<usize> = (0..n).filter(|&i| mu[i] > 0.0 || g[i] > 0.0).collect();
        let k = idx.len();
        // Negated dual Hessian on the free multipliers: 2 (N H^-1 N^T)_ab (d_a . d_b).
        let sel = DMatrix::from_fn(f, k, |r, c| nt[(r, idx[c])]);
        let w = if f == 0 { DMatrix::zeros(0, k) } else { chol.solve(&sel) };
        let pmat = sel.transpose() * w;
        let hess = DMatrix::from_fn(k, k, |a, b| {
            let dd: f64 = (0..m).map(|j| (x[(idx[a], j)] - centers[(idx[a], j)]) * (x[(idx[b], j)] - centers[(idx[b], j)])).sum();
            2.0 * pmat[(a, b)] * dd
        });
        let gv = nalgebra::DVector::from_iterator(k, idx.iter().map(|&i| g[i]));
        let scale = hess.diagonal().amax().max(1e-300);

        let mut moved = false;
        while ridge <= 1e6 {
            let mut hr = hess.clone();
            for a in 0..k {
                hr[(a, a)] += ridge * scale;
            }
            let Some(step) = hr.cholesky().map(|c| c.solve(&gv)) else {
                ridge *= 100.0;
                continue;
            };
            let mut t = 1.0;
            for _ in 0..30 {
                let mut trial = mu.clone();
                for (a, &i) in idx.iter().enumerate() {
                    trial[i] = (mu[i] + t * step[a]).max(0.0);
                }
                if let Some((xt, ct, vt)) = solve_x(&trial) {
                    let lin: f64 = idx.iter().map(|&i| g[i] * (trial[i] - mu[i])).sum();
                    if vt >= value + 1e-4 * lin || residual(&trial, &xt) < 0.5 * res {
                        (mu, x, chol, value) = (trial, xt, ct, vt);
                        moved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if moved {
                ridge = (ridge * 0.1).max(1e-12);
                break;
            }
            ridge *= 100.0;
        }
        if !moved {
            break;
        }
    }
    // Stalled near rounding level: close enough for the final projection.
    (residual(&mu, &x) <= 1e-9 * geom * geom).then_some((x, mu))
}

/// Alternate between the affine set and the balls until both tolerances hold.
fn polish(problem: &ConvexProblem, affine: &AffineSet, mut z: DMatrix<f64>, settings: &SolverSettings) -> Option<DMatrix<f64>> {
    for _ in 0..100_000 {
        let eq = problem.equality_residual(&z);
        if eq <= settings.equality_tol && problem.ball_violation(&z) <= settings.ball_tol {
            return Some(z);
        }
        z = affine.project(&z);
        project_balls(problem, &mut z);
    }
    None
}
