use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;

/// Bezier curve of order `K = controls.len() - 1` on `[0, duration]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BezierSegment {
    pub controls: Vec<Point>,
    pub duration: f64,
}

impl BezierSegment {
    pub fn new(controls: Vec<Point>, duration: f64) -> Result<Self> {
        if controls.is_empty() {
            return Err(Error::InvalidInput("bezier segment needs at least one control point".into()));
        }
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::InvalidInput(format!("segment duration {duration} must be positive")));
        }
        let dim = controls[0].dim();
        for c in &controls {
            c.check_dim(dim)?;
        }
        Ok(Self { controls, duration })
    }

    pub fn order(&self) -> usize {
        self.controls.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.controls[0].dim()
    }

    /// Point at time `t` in `[0, duration]`, by de Casteljau's algorithm.
    pub fn eval(&self, t: f64) -> Result<Point> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(Error::OutOfRange { t, duration: self.duration });
        }
        Ok(self.eval_unit(t / self.duration))
    }

    /// Point at normalized parameter `s` in `[0, 1]`.
    pub fn eval_unit(&self, s: f64) -> Point {
        if s == 0.0 {
            return self.controls[0];
        }
        if s == 1.0 {
            return self.controls[self.order()];
        }
        let mut work = self.controls.clone();
        for level in (1..work.len()).rev() {
            for k in 0..level {
                work[k] = work[k] * (1.0 - s) + work[k + 1] * s;
            }
        }
        work[0]
    }

    /// Time derivative as a Bezier segment of order `K - 1`.
    pub fn derivative(&self) -> Result<BezierSegment> {
        let k = self.order();
        if k == 0 {
            return Err(Error::InvalidInput("cannot differentiate an order 0 segment".into()));
        }
        let scale = k as f64 / self.duration;
        let controls = self.controls.windows(2).map(|w| (w[1] - w[0]) * scale).collect();
        Ok(BezierSegment { controls, duration: self.duration })
    }

    pub fn nth_derivative(&self, d: usize) -> Result<BezierSegment> {
        (0..d).try_fold(self.clone(), |seg, _| seg.derivative())
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Falling factorial `K! / (K - d)!`.
pub(crate) fn falling(k: usize, d: usize) -> f64 {
    (0..d).map(|i| (k - i) as f64).product()
}

/// Integrals of products of order-`K` Bernstein polynomials over `[0, 1]`.
pub fn bernstein_gram(k: usize) -> DMatrix<f64> {
    let denom = (2 * k + 1) as f64;
    DMatrix::from_fn(k + 1, k + 1, |i, j| binomial(k, i) * binomial(k, j) / (denom * binomial(2 * k, i + j)))
}

/// `(K - d + 1) x (K + 1)` matrix mapping control points to their `d`-th
/// forward differences.
pub fn difference_matrix(k: usize, d: usize) -> DMatrix<f64> {
    assert!(d <= k, "difference order {d} exceeds curve order {k}");
    DMatrix::from_fn(k - d + 1, k + 1, |row, col| {
        if col < row || col > row + d {
            return 0.0;
        }
        let j = col - row;
        let sign = if (d - j).is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * binomial(d, j)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seg1d(values: &[f64], t: f64) -> BezierSegment {
        let controls = values.iter().map(|&v| Point::xy(v, 0.0)).collect();
        BezierSegment::new(controls, t).unwrap()
    }

    #[test]
    fn endpoints_and_known_values() {
        let s = seg1d(&[0.0, 1.0, 4.0], 2.0);
        assert_eq!(s.eval(0.0).unwrap(), Point::xy(0.0, 0.0));
        assert_eq!(s.eval(2.0).unwrap(), Point::xy(4.0, 0.0));
        // (1-s)^2*0 + 2s(1-s)*1 + s^2*4 at s = 1/2.
        assert_abs_diff_eq!(s.eval(1.0).unwrap()[0], 1.5, epsilon = 1e-15);
        let sym = seg1d(&[0.0, 1.0, 2.0], 3.0);
        assert_abs_diff_eq!(sym.eval(1.5).unwrap()[0], 1.0, epsilon = 1e-15);
        assert!(matches!(s.eval(2.5), Err(Error::OutOfRange { .. })));
        assert!(s.eval(-1e-9).is_err());
    }

    #[test]
    fn derivative_controls() {
        let lin = seg1d(&[0.0, 2.0], 2.0);
        let d = lin.derivative().unwrap();
        assert_eq!(d.controls, vec![Point::xy(1.0, 0.0)]);
        let flat = seg1d(&[3.0, 3.0, 3.0], 1.0).derivative().unwrap();
        assert!(flat.controls.iter().all(|c| c.norm() == 0.0));
        assert!(seg1d(&[1.0], 1.0).derivative().is_err());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let controls = (0..4).map(|_| Point::xy(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect();
            let seg = BezierSegment::new(controls, 1.7).unwrap();
            let d = seg.derivative().unwrap();
            let h = 1e-5;
            for i in 0..20 {
                let t = 2.0 * h + (seg.duration - 4.0 * h) * i as f64 / 19.0;
                let fd = (seg.eval(t + h).unwrap() - seg.eval(t - h).unwrap()) * (0.5 / h);
                let an = d.eval(t).unwrap();
                assert!((fd - an).norm() <= 1e-6, "t={t}: {fd:?} vs {an:?}");
            }
        }
    }

    #[test]
    fn gram_small_cases() {
        assert_eq!(bernstein_gram(0), DMatrix::from_element(1, 1, 1.0));
        let g = bernstein_gram(1);
        assert_abs_diff_eq!(g[(0, 0)], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[(0, 1)], 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[(1, 1)], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn gram_matches_quadrature() {
        let nodes = crate::trajopt::tests::gauss_legendre(64);
        for k in 0..=8 {
            let g = bernstein_gram(k);
            for i in 0..=k {
                for j in 0..=k {
                    let q: f64 = nodes
                        .iter()
                        .map(|&(x, w)| {
                            let s = 0.5 * (x + 1.0);
                            let bi = binomial(k, i) * s.powi(i as i32) * (1.0 - s).powi((k - i) as i32);
                            let bj = binomial(k, j) * s.powi(j as i32) * (1.0 - s).powi((k - j) as i32);
                            0.5 * w * bi * bj
                        })
                        .sum();
                    assert_abs_diff_eq!(g[(i, j)], q, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn difference_rows() {
        let d2 = difference_matrix(4, 2);
        assert_eq!(d2.nrows(), 3);
        assert_eq!(d2.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, -2.0, 1.0, 0.0, 0.0]);
        assert_eq!(d2.row(2).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 1.0, -2.0, 1.0]);
        assert_eq!(difference_matrix(3, 0), DMatrix::identity(4, 4));
    }
}
