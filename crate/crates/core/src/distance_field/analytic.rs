use serde::{Deserialize, Serialize};

use super::Workspace;
use crate::error::{Error, Result};
use crate::point::Point;

/// Obstacle primitive. Serialized externally tagged, e.g.
/// `{"sphere": {"center": [0, 0], "radius": 1}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Primitive {
    Sphere { center: Point, radius: f64 },
    Box { lower: Point, upper: Point },
}

impl Primitive {
    pub fn sphere(center: Point, radius: f64) -> Self {
        Primitive::Sphere { center, radius }
    }

    pub fn aabb(lower: Point, upper: Point) -> Self {
        Primitive::Box { lower, upper }
    }

    pub fn dim(&self) -> usize {
        match self {
            Primitive::Sphere { center, .. } => center.dim(),
            Primitive::Box { lower, .. } => lower.dim(),
        }
    }

    /// Exact signed distance, negative inside.
    #[inline]
    pub fn signed_distance(&self, y: &Point) -> f64 {
        match self {
            Primitive::Sphere { center, radius } => y.distance(center) - radius,
            Primitive::Box { lower, upper } => {
                let mut outside = 0.0;
                let mut inside = f64::NEG_INFINITY;
                for i in 0..y.dim() {
                    let half = 0.5 * (upper[i] - lower[i]);
                    let q = (y[i] - 0.5 * (upper[i] + lower[i])).abs() - half;
                    if q > 0.0 {
                        outside += q * q;
                    }
                    inside = f64::max(inside, q);
                }
                outside.sqrt() + inside.min(0.0)
            }
        }
    }

    fn validate(&self, ws: &Workspace) -> Result<()> {
        match self {
            Primitive::Sphere { center, radius } => {
                center.check_dim(ws.dim())?;
                if !(*radius > 0.0) {
                    return Err(Error::InvalidInput(format!("sphere radius {radius} must be positive")));
                }
                let nearest = center.zip_map(&ws.lower, f64::max).zip_map(&ws.upper, f64::min);
                if nearest.distance(center) > *radius {
                    return Err(Error::InvalidInput(format!(
                        "sphere at {center:?} does not intersect the workspace"
                    )));
                }
            }
            Primitive::Box { lower, upper } => {
                lower.check_dim(ws.dim())?;
                upper.check_dim(ws.dim())?;
                for i in 0..ws.dim() {
                    if !(lower[i] < upper[i]) {
                        return Err(Error::InvalidInput(format!("box {lower:?}..{upper:?} is empty")));
                    }
                    if upper[i] < ws.lower[i] || lower[i] > ws.upper[i] {
                        return Err(Error::InvalidInput(format!(
                            "box {lower:?}..{upper:?} does not intersect the workspace"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// First intersection of the ray `origin + t * dir` (unit `dir`) with the
    /// primitive for `t` in `[0, t_max]`. Origins inside return `Some(0)`.
    pub fn ray_hit(&self, origin: &Point, dir: &Point, t_max: f64) -> Option<f64> {
        match self {
            Primitive::Sphere { center, radius } => {
                let oc = *origin - *center;
                let c = oc.norm_squared() - radius * radius;
                if c <= 0.0 {
                    return Some(0.0);
                }
                let b = oc.dot(dir);
                let disc = b * b - c;
                if b >= 0.0 || disc < 0.0 {
                    return None;
                }
                let t = -b - disc.sqrt();
                (t <= t_max).then_some(t)
            }
            Primitive::Box { lower, upper } => {
                let mut t0 = 0.0f64;
                let mut t1 = t_max;
                for i in 0..origin.dim() {
                    if dir[i].abs() < 1e-300 {
                        if origin[i] < lower[i] || origin[i] > upper[i] {
                            return None;
                        }
                    } else {
                        let inv = 1.0 / dir[i];
                        let (mut a, mut b) = ((lower[i] - origin[i]) * inv, (upper[i] - origin[i]) * inv);
                        if a > b {
                            std::mem::swap(&mut a, &mut b);
                        }
                        t0 = t0.max(a);
                        t1 = t1.min(b);
                        if t0 > t1 {
                            return None;
                        }
                    }
                }
                Some(t0)
            }
        }
    }
}

/// Union of obstacle primitives inside a workspace box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticScene {
    pub workspace: Workspace,
    pub primitives: Vec<Primitive>,
}

impl AnalyticScene {
    pub fn new(workspace: Workspace, primitives: Vec<Primitive>) -> Result<Self> {
        for p in &primitives {
            p.validate(&workspace)?;
        }
        Ok(Self { workspace, primitives })
    }

    /// Signed distance to the union of primitives, capped above at the
    /// workspace diagonal (an obstacle-free scene would otherwise report +inf).
    #[inline]
    pub fn signed_distance(&self, y: &Point) -> f64 {
        self.primitives
            .iter()
            .map(|p| p.signed_distance(y))
            .fold(self.workspace.diagonal(), f64::min)
    }

    /// Distance along a unit ray to the first obstacle, or `None` within `t_max`.
    pub fn ray_cast(&self, origin: &Point, dir: &Point, t_max: f64) -> Option<f64> {
        self.primitives
            .iter()
            .filter_map(|p| p.ray_hit(origin, dir, t_max))
            .min_by(f64::total_cmp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_ws() -> Workspace {
        Workspace::new(Point::xy(-5.0, -5.0), Point::xy(5.0, 5.0)).unwrap()
    }

    #[test]
    fn sphere_and_box_distances() {
        let s = Primitive::sphere(Point::xy(0.0, 0.0), 1.0);
        assert_eq!(s.signed_distance(&Point::xy(3.0, 0.0)), 2.0);
        assert_eq!(s.signed_distance(&Point::xy(0.5, 0.0)), -0.5);
        let b = Primitive::aabb(Point::xy(1.0, 1.0), Point::xy(2.0, 2.0));
        assert_abs_diff_eq!(b.signed_distance(&Point::xy(0.0, 0.0)), 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(b.signed_distance(&Point::xy(1.5, 1.5)), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b.signed_distance(&Point::xy(1.5, 0.0)), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn scene_rejects_primitives_outside_workspace() {
        let far = Primitive::sphere(Point::xy(20.0, 0.0), 1.0);
        assert!(AnalyticScene::new(unit_ws(), vec![far]).is_err());
        let far_box = Primitive::aabb(Point::xy(6.0, 0.0), Point::xy(7.0, 1.0));
        assert!(AnalyticScene::new(unit_ws(), vec![far_box]).is_err());
        let touching = Primitive::sphere(Point::xy(5.5, 0.0), 1.0);
        assert!(AnalyticScene::new(unit_ws(), vec![touching]).is_ok());
    }

    #[test]
    fn ray_hits() {
        let wall = Primitive::aabb(Point::xy(2.0, -5.0), Point::xy(2.5, 5.0));
        let o = Point::xy(0.0, 0.0);
        assert_eq!(wall.ray_hit(&o, &Point::xy(1.0, 0.0), 10.0), Some(2.0));
        assert_eq!(wall.ray_hit(&o, &Point::xy(-1.0, 0.0), 10.0), None);
        assert_eq!(wall.ray_hit(&o, &Point::xy(1.0, 0.0), 1.0), None);
        let s = Primitive::sphere(Point::xy(3.0, 0.0), 1.0);
        assert_abs_diff_eq!(s.ray_hit(&o, &Point::xy(1.0, 0.0), 10.0).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(s.ray_hit(&o, &Point::xy(0.0, 1.0), 10.0), None);
    }

    #[test]
    fn serde_shape() {
        let json = r#"{"sphere":{"center":[0,0],"radius":1.0}}"#;
        let p: Primitive = serde_json::from_str(json).unwrap();
        assert_eq!(p, Primitive::sphere(Point::xy(0.0, 0.0), 1.0));
        let b: Primitive = serde_json::from_str(r#"{"box":{"lower":[0,0],"upper":[1,1]}}"#).unwrap();
        assert!(matches!(b, Primitive::Box { .. }));
    }
}
