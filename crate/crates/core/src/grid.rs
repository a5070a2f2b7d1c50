//! Uniform bucket grid over the simulation space for fixed-radius queries.

use crate::geometry::Vec2;

#[derive(Debug, Clone)]
pub struct SpatialGrid {
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
}

impl SpatialGrid {
    /// Grid with square cells of side `cell` covering `[0, length] x [0, width]`.
    pub fn new(length: f64, width: f64, cell: f64) -> Self {
        let cols = ((length / cell).ceil() as usize).max(1);
        let rows = ((width / cell).ceil() as usize).max(1);
        Self {
            cell,
            cols,
            rows,
            buckets: vec![Vec::new(); cols * rows],
        }
    }

    fn cell_of(&self, p: Vec2) -> (usize, usize) {
        let cx = ((p.x / self.cell).floor().max(0.0) as usize).min(self.cols - 1);
        let cy = ((p.y / self.cell).floor().max(0.0) as usize).min(self.rows - 1);
        (cx, cy)
    }

    /// Replaces the contents with `points`, indexed by position in the slice.
    pub fn rebuild<I: IntoIterator<Item = Vec2>>(&mut self, points: I) {
        for b in &mut self.buckets {
            b.clear();
        }
        for (i, p) in points.into_iter().enumerate() {
            let (cx, cy) = self.cell_of(p);
            self.buckets[cy * self.cols + cx].push(i);
        }
    }

    /// Indices of every stored point that may lie within `radius` of `p`,
    /// sorted ascending. Callers apply the exact predicate.
    pub fn candidates(&self, p: Vec2, radius: f64, out: &mut Vec<usize>) {
        out.clear();
        let reach = (radius / self.cell).ceil() as isize;
        let (cx, cy) = self.cell_of(p);
        let (cx, cy) = (cx as isize, cy as isize);
        for y in (cy - reach).max(0)..=(cy + reach).min(self.rows as isize - 1) {
            for x in (cx - reach).max(0)..=(cx + reach).min(self.cols as isize - 1) {
                out.extend_from_slice(&self.buckets[y as usize * self.cols + x as usize]);
            }
        }
        out.sort_unstable();
    }
}
