use super::diff::{unit, Differentiable, Sampled};
use super::{ScalarField, VectorField};
use crate::{Error, Result};

pub fn grad_of(f: &dyn Differentiable) -> Result<VectorField> {
    let dims = f.grid().dims();
    let derivs: Vec<Vec<usize>> = (0..dims).map(|a| unit(a, 1)).collect();
    VectorField::new(f.partials(&derivs)?)
}

pub fn laplacian_of(f: &dyn Differentiable) -> Result<ScalarField> {
    let dims = f.grid().dims();
    let derivs: Vec<Vec<usize>> = (0..dims).map(|a| unit(a, 2)).collect();
    let parts = f.partials(&derivs)?;
    let mut acc = parts[0].clone();
    for p in &parts[1..] {
        acc = acc.add(p)?;
    }
    Ok(acc)
}

pub fn divergence_of(components: &[&dyn Differentiable]) -> Result<ScalarField> {
    let dims = components
        .first()
        .ok_or_else(|| Error::DimensionMismatch("empty vector field".into()))?
        .grid()
        .dims();
    if components.len() != dims {
        return Err(Error::DimensionMismatch(format!(
            "divergence of a {}-component field on a {dims}-dimensional grid",
            components.len()
        )));
    }
    let mut acc = components[0].partial(&unit(0, 1))?;
    for (axis, c) in components.iter().enumerate().skip(1) {
        acc = acc.add(&c.partial(&unit(axis, 1))?)?;
    }
    Ok(acc)
}

/// Finite-difference gradient of a sampled field.
pub fn grad(f: &ScalarField, accuracy: usize) -> Result<VectorField> {
    grad_of(&Sampled::new(f.clone(), accuracy))
}

/// Finite-difference Laplacian of a sampled field.
pub fn laplacian(f: &ScalarField, accuracy: usize) -> Result<ScalarField> {
    laplacian_of(&Sampled::new(f.clone(), accuracy))
}

/// Finite-difference divergence; the component count must equal the grid dimension.
pub fn divergence(v: &VectorField, accuracy: usize) -> Result<ScalarField> {
    let sampled: Vec<Sampled> = v
        .components()
        .iter()
        .map(|c| Sampled::new(c.clone(), accuracy))
        .collect();
    let refs: Vec<&dyn Differentiable> = sampled.iter().map(|s| s as &dyn Differentiable).collect();
    divergence_of(&refs)
}
