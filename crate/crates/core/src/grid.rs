//! Finite dyadic geometry on the torus `[0,1)^d`.
//!
//! Cells of level `k` are indexed in Morton (Z-) order: the index of a cell
//! is the concatenation, from coarse to fine, of the `d`-bit child digits
//! that locate it inside its ancestors. With this ordering every level-`k`
//! cell owns a contiguous block of `2^{d(L-k)}` finest cells, which makes
//! conditional expectations plain block averages.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Reduce a coordinate modulo 1 into `[0,1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x % 1.0;
    let r = if r < 0.0 { r + 1.0 } else { r };
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Largest admissible `d·L` (number of finest cells is `2^{dL}`).
pub const MAX_TOTAL_BITS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicGrid {
    dim: usize,
    levels: usize,
    shift: Vec<f64>,
}

/// A cell `Q` of the grid: closed-open cube of side `2^{-k}` on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub level: usize,
    /// Morton index among the level-`k` cells.
    pub morton: usize,
    /// Integer coordinates `i_a ∈ [0, 2^k)` per axis.
    pub index: Vec<usize>,
    /// Lower corner, reduced modulo 1.
    pub origin: Vec<f64>,
    pub side: f64,
}

impl Cell {
    pub fn measure(&self) -> f64 {
        self.side.powi(self.index.len() as i32)
    }

    /// Whether the torus point `x` lies in the cell.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.origin.iter().zip(x).all(|(&o, &xa)| {
            let rel = wrap_unit(xa - o);
            rel < self.side
        })
    }
}

/// Haar function on a parent cell `Q` with a nonzero signature
/// `σ ∈ {0,1}^d`. On the child with digit `c` it equals `(-1)^{|σ ∧ c|}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HaarFunction {
    pub level: usize,
    pub cell: usize,
    pub signature: u32,
}

impl HaarFunction {
    /// Value on the finest cell `fine` of `grid`.
    pub fn value_at(&self, grid: &DyadicGrid, fine: usize) -> f64 {
        let shift = grid.dim * (grid.levels - self.level);
        if fine >> shift != self.cell {
            return 0.0;
        }
        let digit = (fine >> (shift - grid.dim)) as u32 & ((1 << grid.dim) - 1);
        if (digit & self.signature).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Values on all finest cells.
    pub fn values(&self, grid: &DyadicGrid) -> Vec<f64> {
        let mut out = vec![0.0; grid.fine_count()];
        for i in grid.block(self.level, self.cell) {
            out[i] = self.value_at(grid, i);
        }
        out
    }

    /// `‖h‖₂² = |Q|`.
    pub fn norm_sq(&self, grid: &DyadicGrid) -> f64 {
        grid.cell_measure(self.level)
    }
}

impl DyadicGrid {
    /// Build a grid of dimension `d`, finest level `levels`, with a torus
    /// shift in `[0,1)^d`.
    pub fn new(dim: usize, levels: usize, shift: &[f64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if levels == 0 {
            return Err(Error::Config("finest level must be at least 1".into()));
        }
        if dim * levels > MAX_TOTAL_BITS {
            return Err(Error::Guard {
                what: "d*L",
                value: dim * levels,
                limit: MAX_TOTAL_BITS,
            });
        }
        let shift = if shift.is_empty() {
            vec![0.0; dim]
        } else {
            shift.to_vec()
        };
        if shift.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: shift.len(),
            });
        }
        if shift.iter().any(|s| !(0.0..1.0).contains(s)) {
            return Err(Error::Config("shift components must lie in [0,1)".into()));
        }
        Ok(DyadicGrid { dim, levels, shift })
    }

    /// Unshifted grid.
    pub fn standard(dim: usize, levels: usize) -> Result<Self> {
        Self::new(dim, levels, &[])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    /// Same geometry with another shift.
    pub fn with_shift(&self, shift: &[f64]) -> Result<Self> {
        Self::new(self.dim, self.levels, shift)
    }

    pub fn cell_count(&self, k: usize) -> usize {
        1 << (self.dim * k)
    }

    pub fn fine_count(&self) -> usize {
        self.cell_count(self.levels)
    }

    pub fn cell_measure(&self, k: usize) -> f64 {
        (0.5f64).powi((self.dim * k) as i32)
    }

    pub fn side(&self, k: usize) -> f64 {
        (0.5f64).powi(k as i32)
    }

    pub fn check_level(&self, k: usize) -> Result<()> {
        if k > self.levels {
            Err(Error::LevelOutOfRange {
                level: k,
                max: self.levels,
            })
        } else {
            Ok(())
        }
    }

    /// Finest cells contained in the level-`k` cell `cell`.
    pub fn block(&self, k: usize, cell: usize) -> Range<usize> {
        let width = 1 << (self.dim * (self.levels - k));
        cell * width..(cell + 1) * width
    }

    /// Level-`k` ancestor of a finest cell.
    pub fn ancestor(&self, fine: usize, k: usize) -> usize {
        fine >> (self.dim * (self.levels - k))
    }

    /// Integer coordinates of the level-`k` cell with Morton index `morton`.
    pub fn multi_index(&self, k: usize, morton: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.dim];
        for l in 0..k {
            let digit = (morton >> (self.dim * (k - 1 - l))) & ((1 << self.dim) - 1);
            for (a, ia) in idx.iter_mut().enumerate() {
                *ia = (*ia << 1) | ((digit >> a) & 1);
            }
        }
        idx
    }

    /// Morton index of the level-`k` cell with integer coordinates `index`.
    pub fn morton(&self, k: usize, index: &[usize]) -> usize {
        let mut m = 0usize;
        for l in 0..k {
            let bit = k - 1 - l;
            let mut digit = 0usize;
            for (a, &ia) in index.iter().enumerate() {
                digit |= ((ia >> bit) & 1) << a;
            }
            m = (m << self.dim) | digit;
        }
        m
    }

    /// Lower corner of a cell without reduction modulo 1, i.e. the cell as a
    /// subset of `R^d` (used by the kernel module).
    pub fn unwrapped_origin(&self, k: usize, morton: usize) -> Vec<f64> {
        let side = self.side(k);
        self.multi_index(k, morton)
            .iter()
            .zip(&self.shift)
            .map(|(&i, &s)| s + i as f64 * side)
            .collect()
    }

    pub fn cell(&self, k: usize, morton: usize) -> Cell {
        let index = self.multi_index(k, morton);
        let side = self.side(k);
        let origin = index
            .iter()
            .zip(&self.shift)
            .map(|(&i, &s)| wrap_unit(s + i as f64 * side))
            .collect();
        Cell {
            level: k,
            morton,
            index,
            origin,
            side,
        }
    }

    /// The partition `𝒟_k` of the torus.
    pub fn cells(&self, k: usize) -> Result<Vec<Cell>> {
        self.check_level(k)?;
        Ok((0..self.cell_count(k)).map(|m| self.cell(k, m)).collect())
    }

    /// Morton index of the level-`k` cell containing the torus point `x`.
    pub fn locate(&self, x: &[f64], k: usize) -> usize {
        let scale = (1u64 << k) as f64;
        let index: Vec<usize> = x
            .iter()
            .zip(&self.shift)
            .map(|(&xa, &s)| {
                let rel = wrap_unit(xa - s);
                ((rel * scale).floor() as usize).min((1 << k) - 1)
            })
            .collect();
        self.morton(k, &index)
    }

    /// All Haar functions on cells of levels `0..L`, ordered by level, cell,
    /// signature.
    pub fn haar_basis(&self) -> Vec<HaarFunction> {
        let mut out = Vec::with_capacity(self.fine_count() - 1);
        for k in 0..self.levels {
            for cell in 0..self.cell_count(k) {
                for signature in 1..(1u32 << self.dim) {
                    out.push(HaarFunction {
                        level: k,
                        cell,
                        signature,
                    });
                }
            }
        }
        out
    }
}

/// Convenience constructor mirroring the configuration triple.
pub fn make_grid(dim: usize, levels: usize, shift: &[f64]) -> Result<DyadicGrid> {
    DyadicGrid::new(dim, levels, shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn counting() {
        let g = make_grid(1, 2, &[0.0]).unwrap();
        assert_eq!(
            (0..=2)
                .map(|k| g.cells(k).unwrap().len())
                .collect::<Vec<_>>(),
            vec![1, 2, 4]
        );
        let g2 = make_grid(2, 1, &[0.0, 0.0]).unwrap();
        let c = g2.cells(1).unwrap();
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|q| q.measure() == 0.25));
    }

    #[test]
    fn shifted_boundaries() {
        let g = make_grid(1, 3, &[0.3]).unwrap();
        let origins: Vec<f64> = g.cells(3).unwrap().iter().map(|c| c.origin[0]).collect();
        let expected = [0.3, 0.425, 0.55, 0.675, 0.8, 0.925, 0.05, 0.175];
        for (o, e) in origins.iter().zip(expected) {
            assert_relative_eq!(*o, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn level_one_cells_and_whole_torus() {
        let g = make_grid(1, 2, &[]).unwrap();
        let c = g.cells(1).unwrap();
        assert_eq!((c[0].origin[0], c[0].side), (0.0, 0.5));
        assert_eq!((c[1].origin[0], c[1].side), (0.5, 0.5));
        let top = g.cells(0).unwrap();
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].measure(), 1.0);
        for k in 0..=2 {
            let total: f64 = g.cells(k).unwrap().iter().map(Cell::measure).sum();
            assert_eq!(total, 1.0);
        }
        assert!(matches!(g.cells(3), Err(Error::LevelOutOfRange { .. })));
    }

    #[test]
    fn guards() {
        assert!(make_grid(0, 2, &[]).is_err());
        assert!(make_grid(1, 0, &[]).is_err());
        assert!(make_grid(2, 9, &[]).is_err());
        assert!(make_grid(1, 16, &[]).is_ok());
        assert!(make_grid(1, 2, &[1.0]).is_err());
        assert!(make_grid(1, 2, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn nesting_is_exhaustive() {
        for (d, l) in [(1usize, 8usize), (2, 4), (3, 2)] {
            let g = make_grid(d, l, &vec![0.17; d]).unwrap();
            for k in 0..l {
                let parents = g.cells(k).unwrap();
                for child in g.cells(k + 1).unwrap() {
                    let mid: Vec<f64> = child
                        .origin
                        .iter()
                        .map(|o| (o + child.side / 2.0) % 1.0)
                        .collect();
                    let owners = parents.iter().filter(|p| p.contains(&mid)).count();
                    assert_eq!(owners, 1);
                    assert!(parents[child.morton >> d].contains(&mid));
                    assert_eq!(g.locate(&mid, k + 1), child.morton);
                }
            }
        }
    }

    #[test]
    fn morton_round_trip() {
        let g = make_grid(2, 3, &[]).unwrap();
        for m in 0..g.cell_count(3) {
            assert_eq!(g.morton(3, &g.multi_index(3, m)), m);
        }
    }

    #[test]
    fn haar_examples() {
        let g = make_grid(1, 1, &[]).unwrap();
        let basis = g.haar_basis();
        assert_eq!(basis.len(), 1);
        assert_eq!(basis[0].values(&g), vec![1.0, -1.0]);
        assert_eq!(make_grid(1, 2, &[]).unwrap().haar_basis().len(), 3);
        let g2 = make_grid(2, 1, &[]).unwrap();
        let sigs: Vec<u32> = g2.haar_basis().iter().map(|h| h.signature).collect();
        assert_eq!(sigs, vec![1, 2, 3]);
    }

    #[test]
    fn haar_orthogonality_and_completeness() {
        let g = make_grid(2, 3, &[]).unwrap();
        let basis = g.haar_basis();
        assert_eq!(basis.len(), 3 * (1 + 4 + 16));
        let w = g.cell_measure(3);
        let vals: Vec<Vec<f64>> = basis.iter().map(|h| h.values(&g)).collect();
        for (i, a) in vals.iter().enumerate() {
            let mean: f64 = a.iter().sum::<f64>() * w;
            assert!(mean.abs() < 1e-15);
            for (j, b) in vals.iter().enumerate() {
                let ip: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * w;
                let expect = if i == j { basis[i].norm_sq(&g) } else { 0.0 };
                assert!((ip - expect).abs() < 1e-15);
            }
        }
        let f: Vec<f64> = (0..g.fine_count())
            .map(|i| ((i * 7919) % 13) as f64 - 6.0)
            .collect();
        let mean = f.iter().sum::<f64>() * w;
        let mut rebuilt = vec![mean; f.len()];
        for (h, v) in basis.iter().zip(&vals) {
            let c = f.iter().zip(v).map(|(x, y)| x * y).sum::<f64>() * w / h.norm_sq(&g);
            rebuilt.iter_mut().zip(v).for_each(|(r, y)| *r += c * y);
        }
        for (a, b) in f.iter().zip(&rebuilt) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
