use super::Workspace;
use crate::error::{Error, Result};
use crate::point::{Point, MAX_DIM};

/// Binary occupancy grid. Cell `(i, j[, k])` covers
/// `origin + [i, i+1) * spacing` per axis; its center is the grid node.
/// Cells are stored with the first axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Occupancy {
    pub origin: Point,
    pub spacing: f64,
    pub dims: Vec<usize>,
    pub occupied: Vec<bool>,
}

impl Occupancy {
    pub fn new(origin: Point, spacing: f64, dims: Vec<usize>, occupied: Vec<bool>) -> Result<Self> {
        origin.check_dim(dims.len())?;
        if !(spacing > 0.0) {
            return Err(Error::InvalidInput(format!("grid spacing {spacing} must be positive")));
        }
        let n: usize = dims.iter().product();
        if n == 0 {
            return Err(Error::InvalidInput("occupancy grid is empty".into()));
        }
        if occupied.len() != n {
            return Err(Error::InvalidInput(format!(
                "occupancy has {} cells, dims {:?} need {n}",
                occupied.len(),
                dims
            )));
        }
        Ok(Self { origin, spacing, dims, occupied })
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        let mut lin = 0;
        for axis in (0..self.dim()).rev() {
            lin = lin * self.dims[axis] + idx[axis];
        }
        lin
    }

    pub fn multi_index(&self, mut lin: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for (axis, slot) in idx.iter_mut().enumerate().take(self.dim()) {
            *slot = lin % self.dims[axis];
            lin /= self.dims[axis];
        }
        idx
    }

    pub fn node_center(&self, idx: &[usize]) -> Point {
        let mut p = self.origin;
        for axis in 0..self.dim() {
            p[axis] += (idx[axis] as f64 + 0.5) * self.spacing;
        }
        p
    }

    /// The box covered by all cells.
    pub fn extent_workspace(&self) -> Result<Workspace> {
        let mut upper = self.origin;
        for axis in 0..self.dim() {
            upper[axis] += self.dims[axis] as f64 * self.spacing;
        }
        Workspace::new(self.origin, upper)
    }
}

/// Exact squared Euclidean distance transform (in cell units) of a binary
/// grid: for every cell, the squared index distance to the nearest occupied
/// cell, or `+inf` when no cell is occupied. Separable lower-envelope scheme
/// of Felzenszwalb and Huttenlocher, one pass per axis.
pub fn euclidean_distance_transform(dims: &[usize], occupied: &[bool]) -> Vec<f64> {
    let mut grid: Vec<f64> = occupied.iter().map(|&o| if o { 0.0 } else { f64::INFINITY }).collect();
    let n_max = dims.iter().copied().max().unwrap_or(0);
    let mut line = vec![0.0; n_max];
    let mut out = vec![0.0; n_max];
    let mut hull_v = vec![0usize; n_max];
    let mut hull_z = vec![0.0; n_max + 1];

    let mut stride = 1;
    for &len in dims {
        let total = grid.len();
        // Iterate over every line along this axis.
        for base in 0..total {
            if (base / stride) % len != 0 {
                continue;
            }
            for (i, slot) in line.iter_mut().enumerate().take(len) {
                *slot = grid[base + i * stride];
            }
            transform_line(&line[..len], &mut out[..len], &mut hull_v, &mut hull_z);
            for (i, v) in out.iter().enumerate().take(len) {
                grid[base + i * stride] = *v;
            }
        }
        stride *= len;
    }
    grid
}

fn transform_line(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    // Seed the envelope with the first finite sample.
    let Some(first) = f.iter().position(|x| x.is_finite()) else {
        d.fill(f64::INFINITY);
        return;
    };
    let mut k = 0usize;
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                // k == 0 always has z = -inf, so this never underflows.
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for (q, slot) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *slot = dq * dq + f[p];
    }
}

/// Margin `h * sqrt(m) / 2` subtracted from multilinear interpolation so the
/// reported value never exceeds the true distance.
pub fn conservative_margin(field: &GridField) -> f64 {
    field.spacing * (field.dim() as f64).sqrt() / 2.0
}

/// Node-sampled distance field.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    /// Lower corner of cell 0; node `i` sits at `origin + (i + 0.5) h`.
    pub origin: Point,
    pub spacing: f64,
    pub dims: Vec<usize>,
    /// Distance (meters) from each node to the nearest obstacle-cell center.
    pub values: Vec<f64>,
    pub workspace: Workspace,
}

impl GridField {
    /// Exact node distances via the distance transform. Values of an
    /// obstacle-free grid are capped at the workspace diagonal.
    pub fn from_occupancy(occ: &Occupancy, workspace: Workspace) -> Result<Self> {
        workspace.lower.check_dim(occ.dim())?;
        if occ.occupied.iter().all(|&o| o) {
            return Err(Error::NoFreeSpace);
        }
        let cap = workspace.diagonal();
        let values = euclidean_distance_transform(&occ.dims, &occ.occupied)
            .into_iter()
            .map(|sq| (sq.sqrt() * occ.spacing).min(cap))
            .collect();
        Ok(Self {
            origin: occ.origin,
            spacing: occ.spacing,
            dims: occ.dims.clone(),
            values,
            workspace,
        })
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    /// Multilinear interpolation of node values. Points outside the node
    /// lattice are clamped onto it and the clamp distance is subtracted,
    /// which keeps the result a lower bound for a 1-Lipschitz field.
    /// Returns `(value, outside_lattice)`.
    pub fn interpolate(&self, y: &Point) -> (f64, bool) {
        let m = self.dim();
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0f64; MAX_DIM];
        let mut clamp_sq = 0.0;
        for axis in 0..m {
            let u = (y[axis] - self.origin[axis]) / self.spacing - 0.5;
            let hi = (self.dims[axis] - 1) as f64;
            let uc = u.clamp(0.0, hi);
            let d = (u - uc) * self.spacing;
            clamp_sq += d * d;
            if self.dims[axis] == 1 {
                base[axis] = 0;
                frac[axis] = 0.0;
            } else {
                let b = (uc.floor() as usize).min(self.dims[axis] - 2);
                base[axis] = b;
                frac[axis] = uc - b as f64;
            }
        }
        let mut value = 0.0;
        for corner in 0..(1usize << m) {
            let mut w = 1.0;
            let mut lin = 0;
            for axis in (0..m).rev() {
                let bit = (corner >> axis) & 1;
                let t = frac[axis];
                w *= if bit == 1 { t } else { 1.0 - t };
                let i = (base[axis] + bit).min(self.dims[axis] - 1);
                lin = lin * self.dims[axis] + i;
            }
            if w != 0.0 {
                value += w * self.values[lin];
            }
        }
        (value - clamp_sq.sqrt(), clamp_sq > 0.0)
    }

    /// Whether the cell containing `y` is an obstacle cell. Points off the
    /// grid are not.
    pub fn is_obstacle_at(&self, y: &Point) -> bool {
        let mut lin = 0;
        for axis in (0..self.dim()).rev() {
            let u = ((y[axis] - self.origin[axis]) / self.spacing).floor();
            if u < 0.0 || u >= self.dims[axis] as f64 {
                return false;
            }
            lin = lin * self.dims[axis] + u as usize;
        }
        self.values[lin] == 0.0
    }

    /// Conservative lower bound on the distance to the nearest obstacle cell
    /// center, clamped below at `-h`.
    pub fn conservative_distance(&self, y: &Point) -> f64 {
        let (v, _) = self.interpolate(y);
        (v - conservative_margin(self)).max(-self.spacing)
    }
}
