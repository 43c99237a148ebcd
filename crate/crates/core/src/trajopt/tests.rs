use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::bubbles::SafeBubble;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

fn single(center: Point, r: f64) -> (BubbleCover, BubblePath) {
    let cover = BubbleCover::from_bubbles(center.dim(), vec![SafeBubble::new(center, r)]);
    (cover, BubblePath { indices: vec![0], total_weight: 0.0 })
}

fn solve_path(
    cover: &BubbleCover,
    path: &BubblePath,
    ys: Point,
    yg: Point,
    cost: CostSpec,
    durations: &[f64],
) -> (ConvexProblem, Solution) {
    let prob = assemble_problem(path, cover, &ys, &yg, 5, cost, durations).unwrap();
    let sol = solve(&prob, &SolverSettings::default()).unwrap();
    (prob, sol)
}

#[test]
fn straight_line_in_one_bubble() {
    let (cover, path) = single(Point::xy(0.0, 0.0), 2.0);
    let ys = Point::xy(-1.0, 0.5);
    let yg = Point::xy(1.2, -0.3);
    let t = 2.0;
    let (prob, sol) = solve_path(&cover, &path, ys, yg, CostSpec::length(), &[t]);
    for k in 0..=5 {
        let expect = ys + (yg - ys) * (k as f64 / 5.0);
        for c in 0..2 {
            assert_abs_diff_eq!(sol.x[(k, c)], expect[c], epsilon = 1e-6);
        }
    }
    assert_abs_diff_eq!(sol.objective, (yg - ys).norm_squared() / t, epsilon = 1e-6);
    assert!(prob.equality_residual(&sol.x) <= 1e-8);
    assert!(prob.ball_violation(&sol.x) <= 1e-9);
}

#[test]
fn coincident_endpoints_cost_nothing() {
    let (cover, path) = single(Point::xyz(1.0, 1.0, 1.0), 0.7);
    let y = Point::xyz(1.2, 0.9, 1.1);
    {
        let (_, sol) = solve_path(&cover, &path, y, y, CostSpec::length(), &[0.7]);
        for k in 0..=5 {
            for c in 0..3 {
                assert_abs_diff_eq!(sol.x[(k, c)], y[c], epsilon = 1e-7);
            }
        }
        assert!(sol.objective.abs() <= 1e-10);
    }
}

#[test]
fn two_bubble_containment() {
    let cover = BubbleCover::from_bubbles(
        2,
        vec![SafeBubble::new(Point::xy(0.0, 0.0), 1.0), SafeBubble::new(Point::xy(1.4, 0.8), 0.9)],
    );
    let path = BubblePath { indices: vec![0, 1], total_weight: 0.0 };
    for cost in [CostSpec::length(), CostSpec::snap()] {
        let durations = default_durations(&path, &cover, 1.0).unwrap();
        let (prob, sol) = solve_path(&cover, &path, Point::xy(-0.8, -0.2), Point::xy(2.0, 1.2), cost, &durations);
        let traj = to_trajectory(&prob, &sol);
        for (seg, b) in traj.segments.iter().zip(&cover.bubbles) {
            for i in 0..=200 {
                let y = seg.eval_unit(i as f64 / 200.0);
                assert!(b.distance_to(&y) <= 1e-7);
            }
        }
    }
}

fn random_chain(rng: &mut ChaCha8Rng, segments: usize, dim: usize) -> (BubbleCover, BubblePath, Point, Point) {
    let mut bubbles = Vec::new();
    let mut c = Point::zeros(dim);
    let mut r: f64 = rng.random_range(0.6..1.5);
    for _ in 0..segments {
        bubbles.push(SafeBubble::new(c, r));
        let next_r: f64 = rng.random_range(0.6..1.5);
        let mut dir = Point::zeros(dim);
        for i in 0..dim {
            dir[i] = rng.random_range(-1.0..1.0);
        }
        if dir.norm() < 1e-3 {
            dir[0] = 1.0;
        }
        let step = rng.random_range(0.3..0.8) * (r + next_r);
        c += dir.normalized().unwrap() * step;
        r = next_r;
    }
    let pick = |rng: &mut ChaCha8Rng, b: &SafeBubble| loop {
        let mut p = b.center;
        for i in 0..dim {
            p[i] += rng.random_range(-b.radius..b.radius);
        }
        if b.distance_to(&p) < -0.05 * b.radius {
            break p;
        }
    };
    let ys = pick(rng, &bubbles[0]);
    let yg = pick(rng, bubbles.last().unwrap());
    let path = BubblePath { indices: (0..segments).collect(), total_weight: 0.0 };
    (BubbleCover::from_bubbles(dim, bubbles), path, ys, yg)
}

/// Lagrangian dual of the ball constraints: for `mu >= 0`, the minimum over
/// the affine set of `x^T Q x + sum_i mu_i (|x_i - c_i|^2 - r_i^2)` bounds the
/// optimum from below. Solved through the full KKT system.
fn dual_value(prob: &ConvexProblem, mu: &[f64]) -> (f64, Vec<f64>) {
    let n = prob.n_vars();
    let ne = prob.a.nrows();
    let mut kkt = DMatrix::zeros(n + ne, n + ne);
    let mut p = prob.q.clone();
    for i in 0..n {
        p[(i, i)] += mu[i];
    }
    kkt.view_mut((0, 0), (n, n)).copy_from(&(&p * 2.0));
    kkt.view_mut((0, n), (n, ne)).copy_from(&prob.a.transpose());
    kkt.view_mut((n, 0), (ne, n)).copy_from(&prob.a);
    let mut rhs = DMatrix::zeros(n + ne, prob.dim);
    for (i, b) in prob.balls.iter().enumerate() {
        for j in 0..prob.dim {
            rhs[(i, j)] = 2.0 * mu[i] * b.center[j];
        }
    }
    rhs.view_mut((n, 0), (ne, prob.dim)).copy_from(&prob.b);
    let sol = kkt.full_piv_lu().solve(&rhs).expect("nonsingular KKT");
    let x = sol.rows(0, n).into_owned();
    let mut value = prob.objective(&x);
    let mut grad = vec![0.0; n];
    for (i, b) in prob.balls.iter().enumerate() {
        let d2: f64 = (0..prob.dim).map(|j| (x[(i, j)] - b.center[j]).powi(2)).sum();
        grad[i] = d2 - b.radius * b.radius;
        value += mu[i] * grad[i];
    }
    (value, grad)
}

fn best_dual_bound(prob: &ConvexProblem, iterations: usize) -> f64 {
    let n = prob.n_vars();
    let mut mu = vec![1e-6; n];
    let (mut val, mut grad) = dual_value(prob, &mu);
    let mut best = val;
    let mut step = 1.0;
    for _ in 0..iterations {
        loop {
            let trial: Vec<f64> = mu.iter().zip(&grad).map(|(m, g)| (m + step * g).max(0.0)).collect();
            let (tv, tg) = dual_value(prob, &trial);
            let moved: f64 = trial.iter().zip(&mu).map(|(a, b)| (a - b).powi(2)).sum();
            let lin: f64 = trial.iter().zip(&mu).zip(&grad).map(|((a, b), g)| (a - b) * g).sum();
            if tv >= val + lin - moved / (2.0 * step) || step < 1e-14 {
                mu = trial;
                val = tv;
                grad = tg;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        best = best.max(val);
    }
    best
}

#[test]
fn objective_matches_dual_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for trial in 0..12 {
        let segments = 1 + trial % 3;
        let dim = 2 + trial % 2;
        let (cover, path, ys, yg) = random_chain(&mut rng, segments, dim);
        let cost = CostSpec { d_cost: 1 + trial % 3, r_cont: trial % 3 };
        let durations: Vec<f64> = (0..segments).map(|_| rng.random_range(0.5..2.0)).collect();
        let (prob, sol) = solve_path(&cover, &path, ys, yg, cost, &durations);
        let lower = best_dual_bound(&prob, 3000);
        let gap = (sol.objective - lower) / sol.objective.abs().max(1e-3);
        assert!(lower <= sol.objective + 1e-8 * sol.objective.abs().max(1.0), "trial {trial}: bound {lower} above objective {} viol {} eq {}", sol.objective, prob.ball_violation(&sol.x), prob.equality_residual(&sol.x));
        assert!(gap <= 1e-4, "trial {trial}: objective {} dual bound {lower} gap {gap}", sol.objective);
    }
}

fn junction_check(traj: &BezierTrajectory, r_cont: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for pair in traj.segments.windows(2) {
        for d in 0..=r_cont {
            let a = pair[0].nth_derivative(d).unwrap().eval_unit(1.0);
            let b = pair[1].nth_derivative(d).unwrap().eval_unit(0.0);
            let scale = a.norm().max(b.norm()).max(1.0);
            worst = worst.max((a - b).norm() / scale);
        }
    }
    worst
}

#[test]
fn junction_continuity() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let (cover, path, ys, yg) = random_chain(&mut rng, 3, 2);
        for cost in [CostSpec::length(), CostSpec { d_cost: 3, r_cont: 2 }] {
            let durations = default_durations(&path, &cover, 1.0).unwrap();
            let (prob, sol) = solve_path(&cover, &path, ys, yg, cost, &durations);
            let traj = to_trajectory(&prob, &sol);
            assert!(junction_check(&traj, cost.r_cont) <= 1e-6);
            for (seg, b) in traj.segments.iter().zip(path.bubbles(&cover)) {
                for i in 0..=1000 {
                    assert!(b.distance_to(&seg.eval_unit(i as f64 / 1000.0)) <= 1e-7);
                }
            }
        }
    }
}

#[test]
fn control_polygon_bounds_length() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let controls: Vec<Point> = (0..6).map(|_| Point::xy(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let polygon: f64 = controls.windows(2).map(|w| w[0].distance(&w[1])).sum();
        let seg = BezierSegment::new(controls, rng.random_range(0.2..3.0)).unwrap();
        let len = trajectory_length(&BezierTrajectory { segments: vec![seg] });
        assert!(len <= polygon + 1e-9);
    }
}

#[test]
fn lengths() {
    let seg = BezierSegment::new(vec![Point::xy(0.0, 0.0), Point::xy(1.5, 2.0), Point::xy(3.0, 4.0)], 2.0).unwrap();
    assert_abs_diff_eq!(trajectory_length(&BezierTrajectory { segments: vec![seg] }), 5.0, epsilon = 1e-9);
    let flat = BezierSegment::new(vec![Point::xy(1.0, 1.0); 4], 1.0).unwrap();
    assert_eq!(trajectory_length(&BezierTrajectory { segments: vec![flat] }), 0.0);

    let k = 4.0 / 3.0 * (2f64.sqrt() - 1.0);
    let arc = BezierSegment::new(
        vec![Point::xy(1.0, 0.0), Point::xy(1.0, k), Point::xy(k, 1.0), Point::xy(0.0, 1.0)],
        1.0,
    )
    .unwrap();
    let dense: f64 = (0..100_000)
        .map(|i| arc.eval_unit(i as f64 / 1e5).distance(&arc.eval_unit((i + 1) as f64 / 1e5)))
        .sum();
    let got = trajectory_length(&BezierTrajectory { segments: vec![arc] });
    assert_abs_diff_eq!(got, dense, epsilon = 1e-4);
    assert!((got - dense).abs() / dense <= 1e-6);
}

#[test]
fn trajectory_file_and_csv() {
    let (cover, path) = single(Point::xy(0.0, 0.0), 1.0);
    let planned =
        plan_trajectory(&cover, &path, &Point::xy(-0.5, 0.0), &Point::xy(0.5, 0.0), &TrajoptConfig::default()).unwrap();
    let json = planned.trajectory.to_json();
    assert!(json.contains("\"K\": 5"));
    assert_eq!(BezierTrajectory::from_json(&json).unwrap(), planned.trajectory);
    let csv = planned.trajectory.polyline_csv(11);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,y1,y2");
    assert_eq!(lines.len(), 12);
    assert!(lines[11].starts_with("1,"));
}

#[test]
fn inconsistent_equalities_rejected() {
    let (cover, path) = single(Point::xy(0.0, 0.0), 1.0);
    let mut prob =
        assemble_problem(&path, &cover, &Point::xy(0.0, 0.0), &Point::xy(0.1, 0.0), 5, CostSpec::length(), &[1.0]).unwrap();
    // A duplicated start row with a different target.
    let row = prob.a.row(0).into_owned();
    prob.a = prob.a.clone().insert_row(2, 0.0);
    prob.a.set_row(2, &row);
    prob.b = prob.b.clone().insert_row(2, 0.5);
    assert!(matches!(solve(&prob, &SolverSettings::default()), Err(Error::InconsistentEqualities(_))));
}
