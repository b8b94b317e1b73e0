//! Uniform bin grid over the patch for segment traversal.

use std::ops::ControlFlow;

use crate::scene::Building;

#[derive(Debug, Clone)]
pub(crate) struct BinIndex {
    bins_per_side: usize,
    bin_size: f64,
    starts: Vec<u32>,
    ids: Vec<u32>,
}

impl BinIndex {
    pub(crate) fn build(patch_side: f64, buildings: &[Building]) -> Self {
        let bins_per_side = ((buildings.len() as f64).sqrt().ceil() as usize).clamp(1, 1024);
        let bin_size = patch_side / bins_per_side as f64;
        let mut me = Self {
            bins_per_side,
            bin_size,
            starts: Vec::new(),
            ids: Vec::new(),
        };
        let nbins = bins_per_side * bins_per_side;
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); nbins];
        for (i, b) in buildings.iter().enumerate() {
            let (x0, x1) = me.closed_range(b.center_x - b.half_side, b.center_x + b.half_side);
            let (y0, y1) = me.closed_range(b.center_y - b.half_side, b.center_y + b.half_side);
            for iy in y0..=y1 {
                for ix in x0..=x1 {
                    lists[iy * bins_per_side + ix].push(i as u32);
                }
            }
        }
        me.starts.reserve(nbins + 1);
        me.starts.push(0);
        for l in lists {
            me.ids.extend_from_slice(&l);
            me.starts.push(me.ids.len() as u32);
        }
        me
    }

    /// Bins whose closed extent meets the closed interval `[lo, hi]`.
    fn closed_range(&self, lo: f64, hi: f64) -> (usize, usize) {
        let last = (self.bins_per_side - 1) as f64;
        let a = (lo / self.bin_size - 1.0).ceil().clamp(0.0, last) as usize;
        let b = (hi / self.bin_size).floor().clamp(0.0, last) as usize;
        (a.min(b), b)
    }

    fn bin(&self, ix: usize, iy: usize) -> &[u32] {
        let k = iy * self.bins_per_side + ix;
        &self.ids[self.starts[k] as usize..self.starts[k + 1] as usize]
    }

    pub(crate) fn candidates_in_rect(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> impl Iterator<Item = u32> + '_ {
        let (ax, bx) = self.closed_range(x0, x1);
        let (ay, by) = self.closed_range(y0, y1);
        (ay..=by).flat_map(move |iy| (ax..=bx).flat_map(move |ix| self.bin(ix, iy).iter().copied()))
    }

    fn cell_of(&self, v: f64) -> isize {
        ((v / self.bin_size).floor() as isize).clamp(0, self.bins_per_side as isize - 1)
    }

    /// Calls `visit` with every building registered in a bin the segment
    /// passes through. A building may be reported more than once.
    pub(crate) fn walk_segment<F>(&self, x0: f64, y0: f64, x1: f64, y1: f64, mut visit: F) -> ControlFlow<()>
    where
        F: FnMut(u32) -> ControlFlow<()>,
    {
        let n = self.bins_per_side as isize;
        let (mut ix, mut iy) = (self.cell_of(x0), self.cell_of(y0));
        let (ex, ey) = (self.cell_of(x1), self.cell_of(y1));
        let (dx, dy) = (x1 - x0, y1 - y0);
        let axis = |d: f64, start: f64, i: isize| -> (isize, f64, f64) {
            if d > 0.0 {
                (1, ((i + 1) as f64 * self.bin_size - start) / d, self.bin_size / d)
            } else if d < 0.0 {
                (-1, (i as f64 * self.bin_size - start) / d, -self.bin_size / d)
            } else {
                (0, f64::INFINITY, f64::INFINITY)
            }
        };
        let (sx, mut tx, dtx) = axis(dx, x0, ix);
        let (sy, mut ty, dty) = axis(dy, y0, iy);
        loop {
            for &id in self.bin(ix as usize, iy as usize) {
                visit(id)?;
            }
            if ix == ex && iy == ey {
                return ControlFlow::Continue(());
            }
            if tx <= ty {
                if tx > 1.0 {
                    break;
                }
                ix += sx;
                tx += dtx;
            } else {
                if ty > 1.0 {
                    break;
                }
                iy += sy;
                ty += dty;
            }
            if ix < 0 || iy < 0 || ix >= n || iy >= n {
                break;
            }
        }
        // Rounding can stop the walk one bin short; the end bin is always touched.
        for &id in self.bin(ex as usize, ey as usize) {
            visit(id)?;
        }
        ControlFlow::Continue(())
    }
}
