use std::f64::consts::PI;

use nalgebra::{Unit, UnitQuaternion, Vector3, Vector4};
use rand::Rng;

use crate::point::Point;

/// `n_explore^m` unit expansion directions with a fresh random phase (2D) or
/// rotation (3D) per call.
///
/// # Panics
/// If `m` is not 2 or 3.
pub fn expansion_directions<R: Rng + ?Sized>(m: usize, n_explore: usize, rng: &mut R) -> Vec<Point> {
    directions_with_count(m, n_explore.pow(m as u32), rng)
}

/// `count` unit directions, evenly spaced (2D) or on a Fibonacci lattice
/// (3D), randomly rotated per call.
///
/// # Panics
/// If `m` is not 2 or 3.
pub fn directions_with_count<R: Rng + ?Sized>(m: usize, count: usize, rng: &mut R) -> Vec<Point> {
    match m {
        2 => {
            let phase = rng.random::<f64>() * 2.0 * PI / count as f64;
            uniform_directions(count, phase)
        }
        3 => {
            // Shoemake's uniform random rotation.
            let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
            let q = Vector4::new(
                (1.0 - u1).sqrt() * (2.0 * PI * u2).sin(),
                (1.0 - u1).sqrt() * (2.0 * PI * u2).cos(),
                u1.sqrt() * (2.0 * PI * u3).sin(),
                u1.sqrt() * (2.0 * PI * u3).cos(),
            );
            let rot = UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(q));
            fibonacci_sphere(count)
                .into_iter()
                .map(|p| {
                    let v = rot * Vector3::new(p[0], p[1], p[2]);
                    let v = Unit::new_normalize(v);
                    Point::xyz(v.x, v.y, v.z)
                })
                .collect()
        }
        _ => panic!("expansion directions need m in {{2, 3}}, got {m}"),
    }
}

/// `count` planar unit vectors at angles `phase + 2*pi*i/count`.
pub fn uniform_directions(count: usize, phase: f64) -> Vec<Point> {
    (0..count)
        .map(|i| {
            let th = phase + 2.0 * PI * i as f64 / count as f64;
            Point::xy(th.cos(), th.sin())
        })
        .collect()
}

/// Fibonacci lattice of `count` nearly uniform points on the unit sphere.
pub fn fibonacci_sphere(count: usize) -> Vec<Point> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Point::xyz(rho * phi.cos(), rho * phi.sin(), z)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quarter_turns_at_zero_phase() {
        let d = uniform_directions(4, 0.0);
        let expect = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (p, (x, y)) in d.iter().zip(expect) {
            assert_abs_diff_eq!(p[0], x, epsilon = 1e-15);
            assert_abs_diff_eq!(p[1], y, epsilon = 1e-15);
        }
    }

    #[test]
    fn counts_and_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in [2, 3] {
            for n in 2..=5 {
                let d = expansion_directions(m, n, &mut rng);
                assert_eq!(d.len(), n.pow(m as u32));
                for p in &d {
                    assert!((p.norm() - 1.0).abs() <= 1e-12);
                    assert_eq!(p.dim(), m);
                }
            }
        }
    }

    #[test]
    fn explicit_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for m in [2, 3] {
            for count in [2, 8, 13] {
                let d = directions_with_count(m, count, &mut rng);
                assert_eq!(d.len(), count);
                assert!(d.iter().all(|p| (p.norm() - 1.0).abs() <= 1e-12));
            }
        }
        let cfg = crate::samplers::SamplerConfig { n_directions: Some(1), ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = crate::samplers::SamplerConfig { n_directions: Some(8), ..Default::default() };
        assert_eq!(cfg.direction_count(3), 8);
        assert_eq!(crate::samplers::SamplerConfig::default().direction_count(3), 64);
    }

    #[test]
    fn lattice_is_nearly_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let d = expansion_directions(3, 4, &mut rng);
            let mean = d.iter().fold(Point::zeros(3), |acc, p| acc + *p) * (1.0 / d.len() as f64);
            assert!(mean.norm() <= 0.05, "mean norm {}", mean.norm());
        }
    }
}
