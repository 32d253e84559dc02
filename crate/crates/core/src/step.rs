//! Functions constant on the finest cells of a grid.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::DyadicGrid;
use crate::value::ValueSpace;

/// A function on the torus, constant on each level-`L` cell, with values in
/// a [`ValueSpace`]. Values are stored cell by cell (Morton order), each a
/// block of `space.width()` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    grid: DyadicGrid,
    space: ValueSpace,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(grid: DyadicGrid, space: ValueSpace, values: Vec<f64>) -> Result<Self> {
        space.validate()?;
        let expected = grid.fine_count() * space.width();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(StepFunction {
            grid,
            space,
            values,
        })
    }

    pub fn zeros(grid: &DyadicGrid, space: ValueSpace) -> Self {
        let len = grid.fine_count() * space.width();
        StepFunction {
            grid: grid.clone(),
            space,
            values: vec![0.0; len],
        }
    }

    /// The constant function with value `value`.
    pub fn constant(grid: &DyadicGrid, space: ValueSpace, value: &[f64]) -> Result<Self> {
        if value.len() != space.width() {
            return Err(Error::DimensionMismatch {
                expected: space.width(),
                found: value.len(),
            });
        }
        let values = value
            .iter()
            .copied()
            .cycle()
            .take(grid.fine_count() * value.len())
            .collect();
        Self::new(grid.clone(), space, values)
    }

    /// Scalar function from its finest-cell values.
    pub fn scalar(grid: &DyadicGrid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid.clone(), ValueSpace::scalar(), values)
    }

    /// Build from a per-cell generator.
    pub fn from_fn(
        grid: &DyadicGrid,
        space: ValueSpace,
        mut f: impl FnMut(usize, &mut [f64]),
    ) -> Self {
        let w = space.width();
        let mut values = vec![0.0; grid.fine_count() * w];
        for (i, chunk) in values.chunks_mut(w).enumerate() {
            f(i, chunk);
        }
        StepFunction {
            grid: grid.clone(),
            space,
            values,
        }
    }

    /// `φ ⊗ v` for a scalar step function `φ` and a fixed value `v`.
    pub fn tensor_scalar(phi: &StepFunction, space: ValueSpace, v: &[f64]) -> Result<Self> {
        if !phi.space.is_scalar() {
            return Err(Error::Unsupported("tensor_scalar expects a scalar profile"));
        }
        if v.len() != space.width() {
            return Err(Error::DimensionMismatch {
                expected: space.width(),
                found: v.len(),
            });
        }
        Ok(Self::from_fn(&phi.grid, space, |i, out| {
            let s = phi.values[i];
            out.iter_mut().zip(v).for_each(|(o, x)| *o = s * x);
        }))
    }

    pub fn grid(&self) -> &DyadicGrid {
        &self.grid
    }

    pub fn space(&self) -> &ValueSpace {
        &self.space
    }

    pub fn width(&self) -> usize {
        self.space.width()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value on finest cell `i`.
    pub fn at(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }

    /// Same grid and values, reinterpreted in another space of equal width.
    pub fn with_space(&self, space: ValueSpace) -> Result<Self> {
        Self::new(self.grid.clone(), space, self.values.clone())
    }

    /// Same values, read on another grid of the same size (e.g. a shift).
    pub fn on_grid(&self, grid: &DyadicGrid) -> Result<Self> {
        Self::new(grid.clone(), self.space, self.values.clone())
    }

    pub fn check_compatible(&self, other: &StepFunction) -> Result<()> {
        if self.grid.dim() != other.grid.dim() || self.grid.levels() != other.grid.levels() {
            return Err(Error::GridMismatch);
        }
        if self.width() != other.width() {
            return Err(Error::DimensionMismatch {
                expected: self.width(),
                found: other.width(),
            });
        }
        Ok(())
    }

    /// `α f + β g`.
    pub fn combine(&self, alpha: f64, other: &StepFunction, beta: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(StepFunction {
            grid: self.grid.clone(),
            space: self.space,
            values,
        })
    }

    pub fn scale(&self, alpha: f64) -> Self {
        StepFunction {
            grid: self.grid.clone(),
            space: self.space,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Measure-weighted pairing `∫ ⟨f(t), g(t)⟩ dt` (coordinatewise dot product).
    pub fn pair(&self, other: &StepFunction) -> Result<f64> {
        self.check_compatible(other)?;
        let w = self.grid.cell_measure(self.grid.levels());
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * w)
    }

    /// `∫ f`.
    pub fn integral(&self) -> Vec<f64> {
        let w = self.grid.cell_measure(self.grid.levels());
        let mut acc = vec![0.0; self.width()];
        for chunk in self.values.chunks(self.width()) {
            acc.iter_mut().zip(chunk).for_each(|(a, v)| *a += v);
        }
        acc.iter_mut().for_each(|a| *a *= w);
        acc
    }

    /// Pointwise value-space norms, one per finest cell.
    pub fn pointwise_norms(&self) -> Vec<f64> {
        self.values
            .chunks(self.width())
            .map(|v| self.space.norm(v))
            .collect()
    }

    /// Finest cells on which the function does not vanish.
    pub fn support(&self) -> Vec<usize> {
        self.values
            .chunks(self.width())
            .enumerate()
            .filter(|(_, v)| v.iter().any(|&x| x != 0.0))
            .map(|(i, _)| i)
            .collect()
    }

    /// Whether every value is the same.
    pub fn is_constant(&self) -> bool {
        let first = self.at(0);
        self.values.chunks(self.width()).all(|v| v == first)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks_lengths() {
        let g = DyadicGrid::standard(1, 2).unwrap();
        assert!(StepFunction::scalar(&g, vec![1.0; 3]).is_err());
        let f = StepFunction::constant(&g, ValueSpace::euclidean(2), &[1.0, 2.0]).unwrap();
        assert_eq!(f.at(3), &[1.0, 2.0]);
        assert_eq!(f.integral(), vec![1.0, 2.0]);
        assert!(f.is_constant());
    }

    #[test]
    fn pairing_is_measure_weighted() {
        let g = DyadicGrid::standard(1, 2).unwrap();
        let f = StepFunction::scalar(&g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(f.pair(&f).unwrap(), 30.0 / 4.0);
        assert_eq!(f.support(), vec![0, 1, 2, 3]);
    }
}
