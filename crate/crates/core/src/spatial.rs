//! Uniform-grid index over bubbles for containment queries.

use crate::bubbles::SafeBubble;
use crate::distance_field::Workspace;
use crate::point::{Point, MAX_DIM};

/// Buckets bubbles by the grid cells their bounding boxes touch. Points and
/// boxes outside the indexed region are clamped onto the border cells, so
/// lookups stay exact for bubbles that extend past the region.
#[derive(Debug, Clone)]
pub struct BubbleGrid {
    lower: Point,
    cell: f64,
    dims: [usize; MAX_DIM],
    dim: usize,
    buckets: Vec<Vec<u32>>,
}

impl BubbleGrid {
    /// `cells_per_axis` cells along the longest workspace axis.
    pub fn new(region: &Workspace, cells_per_axis: usize) -> Self {
        let dim = region.dim();
        let extent = region.extent();
        let longest = extent.as_slice().iter().copied().fold(0.0, f64::max);
        let cell = longest / cells_per_axis.max(1) as f64;
        let mut dims = [1usize; MAX_DIM];
        for (axis, d) in dims.iter_mut().enumerate().take(dim) {
            *d = ((extent[axis] / cell).ceil() as usize).max(1);
        }
        let n = dims.iter().product();
        Self { lower: region.lower, cell, dims, dim, buckets: vec![Vec::new(); n] }
    }

    fn axis_cell(&self, axis: usize, x: f64) -> usize {
        let u = ((x - self.lower[axis]) / self.cell).floor();
        if u <= 0.0 {
            0
        } else {
            (u as usize).min(self.dims[axis] - 1)
        }
    }

    fn linear(&self, idx: &[usize; MAX_DIM]) -> usize {
        idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2])
    }

    pub fn insert(&mut self, id: usize, b: &SafeBubble) {
        let mut lo = [0usize; MAX_DIM];
        let mut hi = [0usize; MAX_DIM];
        for axis in 0..self.dim {
            lo[axis] = self.axis_cell(axis, b.center[axis] - b.radius);
            hi[axis] = self.axis_cell(axis, b.center[axis] + b.radius);
        }
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let lin = self.linear(&[i, j, k]);
                    self.buckets[lin].push(id as u32);
                }
            }
        }
    }

    /// Ids of bubbles whose bounding box may contain `y`.
    pub fn candidates(&self, y: &Point) -> impl Iterator<Item = usize> + '_ {
        let mut idx = [0usize; MAX_DIM];
        for (axis, slot) in idx.iter_mut().enumerate().take(self.dim) {
            *slot = self.axis_cell(axis, y[axis]);
        }
        self.buckets[self.linear(&idx)].iter().map(|&i| i as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn candidates_cover_all_containing_bubbles() {
        let ws = Workspace::new(Point::xy(0.0, 0.0), Point::xy(10.0, 4.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bubbles: Vec<SafeBubble> = (0..200)
            .map(|_| SafeBubble::new(ws.inflated(0.2).sample_uniform(&mut rng), rng.random::<f64>() * 2.0))
            .collect();
        let mut grid = BubbleGrid::new(&ws, 16);
        for (i, b) in bubbles.iter().enumerate() {
            grid.insert(i, b);
        }
        for _ in 0..2000 {
            let y = ws.inflated(0.3).sample_uniform(&mut rng);
            let mut want: Vec<usize> =
                (0..bubbles.len()).filter(|&i| bubbles[i].contains_point(&y)).collect();
            let mut got: Vec<usize> = grid.candidates(&y).filter(|&i| bubbles[i].contains_point(&y)).collect();
            want.sort_unstable();
            got.sort_unstable();
            assert_eq!(want, got);
        }
    }
}
