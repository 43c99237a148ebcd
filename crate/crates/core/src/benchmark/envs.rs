//! Built-in environments: an open room, two rooms joined by a corridor and a
//! cluttered 3D room split by a wall with one doorway.

use crate::distance_field::{AnalyticScene, Environment, Primitive, Workspace};
use crate::error::{Error, Result};
use crate::point::Point;

const WALL: f64 = 0.2;

pub const BUILTIN_NAMES: [&str; 3] = ["room2d", "corridor2d", "clutter3d"];

/// Default corridor width of [`corridor2d`] (m).
pub const CORRIDOR_WIDTH: f64 = 0.6;

pub fn builtin(name: &str) -> Option<Environment> {
    match name {
        "room2d" => Some(room2d()),
        "corridor2d" => Some(corridor2d(CORRIDOR_WIDTH).expect("default width is valid")),
        "clutter3d" => Some(clutter3d()),
        _ => None,
    }
}

fn b2(x0: f64, y0: f64, x1: f64, y1: f64) -> Primitive {
    Primitive::aabb(Point::xy(x0, y0), Point::xy(x1, y1))
}

fn b3(lo: [f64; 3], hi: [f64; 3]) -> Primitive {
    Primitive::aabb(Point::xyz(lo[0], lo[1], lo[2]), Point::xyz(hi[0], hi[1], hi[2]))
}

fn walls2d(w: f64, h: f64) -> Vec<Primitive> {
    vec![b2(0.0, 0.0, w, WALL), b2(0.0, h - WALL, w, h), b2(0.0, 0.0, WALL, h), b2(w - WALL, 0.0, w, h)]
}

/// 10 m x 10 m room with scattered boxes and round pillars.
pub fn room2d() -> Environment {
    let ws = Workspace::new(Point::xy(0.0, 0.0), Point::xy(10.0, 10.0)).expect("valid box");
    let mut prims = walls2d(10.0, 10.0);
    prims.extend([
        b2(2.0, 2.0, 3.0, 4.0),
        b2(6.0, 1.5, 8.0, 2.5),
        b2(4.5, 5.0, 5.5, 7.0),
        b2(1.5, 7.0, 3.5, 7.8),
        b2(7.5, 6.0, 8.5, 8.5),
        Primitive::sphere(Point::xy(5.0, 2.5), 0.6),
        Primitive::sphere(Point::xy(2.0, 5.5), 0.5),
        Primitive::sphere(Point::xy(8.0, 4.5), 0.7),
        Primitive::sphere(Point::xy(5.0, 9.0), 0.4),
    ]);
    Environment::analytic("room2d", AnalyticScene::new(ws, prims).expect("valid scene"))
}

/// Two 8 m x 10 m rooms joined by a 4 m corridor of the given width along
/// `y = 5`.
pub fn corridor2d(width: f64) -> Result<Environment> {
    if !(width > 0.0 && width < 9.0) {
        return Err(Error::InvalidInput(format!("corridor width {width} must lie in (0, 9)")));
    }
    let ws = Workspace::new(Point::xy(0.0, 0.0), Point::xy(20.0, 10.0)).expect("valid box");
    let mut prims = walls2d(20.0, 10.0);
    prims.extend([
        b2(8.0, 0.0, 12.0, 5.0 - 0.5 * width),
        b2(8.0, 5.0 + 0.5 * width, 12.0, 10.0),
        Primitive::sphere(Point::xy(4.0, 2.5), 0.6),
        b2(3.0, 6.5, 4.0, 7.5),
        Primitive::sphere(Point::xy(16.0, 7.5), 0.6),
        b2(15.0, 2.0, 16.5, 3.0),
    ]);
    Ok(Environment::analytic("corridor2d", AnalyticScene::new(ws, prims)?))
}

/// 6 m cube split at `x = 3` by a wall with a 0.8 m x 1 m doorway, with
/// spheres and boxes on both sides.
pub fn clutter3d() -> Environment {
    let s = 6.0;
    let ws = Workspace::new(Point::xyz(0.0, 0.0, 0.0), Point::xyz(s, s, s)).expect("valid box");
    let mut prims = Vec::new();
    for axis in 0..3 {
        for high in [false, true] {
            let mut lo = [0.0; 3];
            let mut hi = [s; 3];
            if high {
                lo[axis] = s - WALL;
            } else {
                hi[axis] = WALL;
            }
            prims.push(b3(lo, hi));
        }
    }
    prims.extend([
        b3([2.9, 0.0, 0.0], [3.1, 2.6, s]),
        b3([2.9, 3.4, 0.0], [3.1, s, s]),
        b3([2.9, 2.6, 1.2], [3.1, 3.4, s]),
        Primitive::sphere(Point::xyz(1.5, 1.5, 1.5), 0.5),
        Primitive::sphere(Point::xyz(1.5, 4.5, 3.5), 0.6),
        Primitive::sphere(Point::xyz(4.5, 1.5, 4.0), 0.5),
        Primitive::sphere(Point::xyz(4.5, 4.5, 1.5), 0.6),
        b3([0.8, 3.0, 0.2], [1.6, 3.8, 1.8]),
        b3([4.2, 2.6, 2.5], [5.2, 3.4, 3.5]),
        b3([1.8, 0.8, 3.5], [2.4, 1.4, 5.0]),
    ]);
    Environment::analytic("clutter3d", AnalyticScene::new(ws, prims).expect("valid scene"))
}
