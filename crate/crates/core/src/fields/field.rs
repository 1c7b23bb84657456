use rayon::prelude::*;

use super::Grid;
use crate::{Error, Result};

/// Real values sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    /// Errors when the length is wrong or any value is not finite.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { point: grid.point(i) });
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: &Grid) -> ScalarField {
        ScalarField {
            values: vec![0.0; grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> ScalarField {
        ScalarField {
            values: vec![c; grid.len()],
            grid: grid.clone(),
        }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn<F: Fn(&[f64]) -> f64 + Sync>(grid: &Grid, f: F) -> Result<ScalarField> {
        let values = (0..grid.len()).into_par_iter().map(|i| f(&grid.point(i))).collect();
        ScalarField::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Unscaled Euclidean norm `√Σ v²`.
    pub fn l2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index and value of the smallest entry.
    pub fn argmin(&self) -> (usize, f64) {
        self.values.iter().copied().enumerate().fold(
            (0, f64::INFINITY),
            |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) },
        )
    }

    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Result<ScalarField> {
        ScalarField::new(self.grid.clone(), self.values.par_iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map<F: Fn(f64, f64) -> f64 + Sync>(&self, other: &ScalarField, f: F) -> Result<ScalarField> {
        self.same_grid(other)?;
        let values = self
            .values
            .par_iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        ScalarField::new(self.grid.clone(), values)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Value at a multi-index.
    pub fn at(&self, multi: &[usize]) -> f64 {
        self.values[self.grid.ravel(multi)]
    }
}

/// `m`-component field (`m` in 1..=3) on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<VectorField> {
        if !(1..=3).contains(&components.len()) {
            return Err(Error::DimensionMismatch(format!(
                "vector fields have 1..=3 components, got {}",
                components.len()
            )));
        }
        for c in &components[1..] {
            components[0].same_grid(c)?;
        }
        Ok(VectorField { components })
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let n = self.grid().len();
        let values = (0..n)
            .map(|i| self.components.iter().map(|c| c.values[i].powi(2)).sum::<f64>().sqrt())
            .collect();
        ScalarField {
            grid: self.grid().clone(),
            values,
        }
    }

    /// Largest pointwise magnitude.
    pub fn linf(&self) -> f64 {
        self.magnitude().linf()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan_and_wrong_length() {
        let g = Grid::cube(1, 8, 0.0, 1.0).unwrap();
        assert!(ScalarField::new(g.clone(), vec![0.0; 7]).is_err());
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        match ScalarField::new(g.clone(), v) {
            Err(Error::NonFinite { point }) => assert_eq!(point, vec![g.coord(0, 3)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn norms() {
        let g = Grid::cube(1, 8, 0.0, 1.0).unwrap();
        let f = ScalarField::from_fn(&g, |p| if p[0] == 0.0 { -3.0 } else { 1.0 }).unwrap();
        assert_eq!(f.linf(), 3.0);
        assert!((f.l2() - 16f64.sqrt()).abs() < 1e-15);
        assert!(f.l2() <= f.linf() * (f.len() as f64).sqrt());
    }
}
