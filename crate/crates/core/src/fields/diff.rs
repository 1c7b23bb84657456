use std::collections::HashMap;
use std::sync::Mutex;

use super::fd::fd_partial;
use super::{Grid, ScalarField};
use crate::expr::{eval_points, ClosedForm, Program};
use crate::{Error, Result};

/// Highest total derivative order evaluated on either path.
pub const MAX_DERIV_ORDER: usize = 4;

/// Anything that can produce partial derivatives sampled on a grid.
///
/// Residual formulas are written once against this trait and run on both the
/// exact path ([`Analytic`]) and the finite-difference path ([`Sampled`]).
pub trait Differentiable: Send + Sync {
    fn grid(&self) -> &Grid;

    /// Partials for each multi-index (`deriv[i]` = order along coordinate `i`).
    fn partials(&self, derivs: &[Vec<usize>]) -> Result<Vec<ScalarField>>;

    fn partial(&self, deriv: &[usize]) -> Result<ScalarField> {
        Ok(self.partials(&[deriv.to_vec()])?.swap_remove(0))
    }

    fn values(&self) -> Result<ScalarField> {
        self.partial(&[])
    }

    /// True when derivatives are exact rather than finite-difference estimates.
    fn is_exact(&self) -> bool;
}

/// Multi-index with `order` along `axis` and zeros elsewhere.
pub fn unit(axis: usize, order: usize) -> Vec<usize> {
    let mut d = vec![0; axis + 1];
    d[axis] = order;
    d
}

/// Multi-index for `∂_a ∂_b`.
pub fn mixed(a: usize, b: usize) -> Vec<usize> {
    let mut d = vec![0; a.max(b) + 1];
    d[a] += 1;
    d[b] += 1;
    d
}

fn normalize(deriv: &[usize]) -> Vec<usize> {
    let mut d = deriv.to_vec();
    while d.last() == Some(&0) {
        d.pop();
    }
    d
}

/// A closed form sampled on a grid, with coordinates beyond the grid's
/// dimensions (for instance time) bound to fixed values.
pub struct Analytic {
    expr: ClosedForm,
    grid: Grid,
    trailing: Vec<f64>,
    cache: Mutex<HashMap<Vec<usize>, ScalarField>>,
}

impl Analytic {
    pub fn new(expr: ClosedForm, grid: Grid) -> Analytic {
        Self::with_trailing(expr, grid, &[])
    }

    pub fn with_trailing(expr: ClosedForm, grid: Grid, trailing: &[f64]) -> Analytic {
        Analytic {
            expr,
            grid,
            trailing: trailing.to_vec(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn expr(&self) -> &ClosedForm {
        &self.expr
    }

    pub fn trailing(&self) -> &[f64] {
        &self.trailing
    }

    fn ncoord(&self) -> usize {
        self.grid.dims() + self.trailing.len()
    }
}

impl Differentiable for Analytic {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn is_exact(&self) -> bool {
        true
    }

    /// Differentiation may also run along the trailing coordinates.
    fn partials(&self, derivs: &[Vec<usize>]) -> Result<Vec<ScalarField>> {
        let ncoord = self.ncoord();
        let keys: Vec<Vec<usize>> = derivs.iter().map(|d| normalize(d)).collect();
        for k in &keys {
            let order: usize = k.iter().sum();
            if order > MAX_DERIV_ORDER {
                return Err(Error::DerivativeOrder {
                    order,
                    max: MAX_DERIV_ORDER,
                });
            }
            if k.len() > ncoord {
                return Err(Error::AxisOutOfRange {
                    axis: k.len() - 1,
                    dims: ncoord,
                });
            }
        }
        let arity = self.expr.arity();
        if arity > ncoord {
            return Err(Error::UnboundVariable {
                index: arity - 1,
                available: ncoord,
            });
        }
        let missing: Vec<Vec<usize>> = {
            let cache = self.cache.lock().expect("cache poisoned");
            let mut m: Vec<Vec<usize>> = keys.iter().filter(|k| !cache.contains_key(*k)).cloned().collect();
            m.sort();
            m.dedup();
            m
        };
        if !missing.is_empty() {
            let exprs: Vec<ClosedForm> = missing.iter().map(|k| self.expr.partial(k)).collect();
            let refs: Vec<&ClosedForm> = exprs.iter().collect();
            let prog = Program::compile(&refs);
            let dims = self.grid.dims();
            let flat = eval_points(&prog, self.grid.len(), ncoord, |i, p| {
                self.grid.point_into(i, &mut p[..dims]);
                p[dims..].copy_from_slice(&self.trailing);
            })?;
            let nout = missing.len();
            let mut cache = self.cache.lock().expect("cache poisoned");
            for (j, k) in missing.into_iter().enumerate() {
                let vals: Vec<f64> = flat.iter().skip(j).step_by(nout).copied().collect();
                cache.insert(k, ScalarField::new(self.grid.clone(), vals)?);
            }
        }
        let cache = self.cache.lock().expect("cache poisoned");
        Ok(keys.iter().map(|k| cache[k].clone()).collect())
    }
}

/// Sampled values differentiated by finite differences.
pub struct Sampled {
    field: ScalarField,
    accuracy: usize,
}

impl Sampled {
    pub fn new(field: ScalarField, accuracy: usize) -> Sampled {
        Sampled { field, accuracy }
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }
}

impl Differentiable for Sampled {
    fn grid(&self) -> &Grid {
        self.field.grid()
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn partials(&self, derivs: &[Vec<usize>]) -> Result<Vec<ScalarField>> {
        derivs
            .iter()
            .map(|d| {
                let d = normalize(d);
                let order: usize = d.iter().sum();
                if order > MAX_DERIV_ORDER {
                    return Err(Error::DerivativeOrder {
                        order,
                        max: MAX_DERIV_ORDER,
                    });
                }
                fd_partial(&self.field, &d, self.accuracy)
            })
            .collect()
    }
}

/// Exact derivative of a closed form sampled on `grid`.
pub fn eval_closed_form(e: &ClosedForm, grid: &Grid, deriv: &[usize]) -> Result<ScalarField> {
    Analytic::new(e.clone(), grid.clone()).partial(deriv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> ClosedForm {
        ClosedForm::var(0)
    }

    #[test]
    fn profile_identity_on_grid() {
        let g = Grid::cube(1, 41, -4.0, 4.0).unwrap();
        let h = (x() / 2f64.sqrt()).tanh();
        let a = Analytic::new(h, g);
        let f = a.partials(&[vec![], vec![2]]).unwrap();
        let r = f[1].zip_map(&f[0], |h2, h| h2 - (h.powi(3) - h)).unwrap();
        assert!(r.linf() < 1e-14);
    }

    #[test]
    fn cosh_values() {
        let g = Grid::cube(2, 9, -1.0, 1.0).unwrap();
        let e = ClosedForm::affine(&[0.5f64.sqrt(), 0.5f64.sqrt()], 0.0).cosh();
        let f = eval_closed_form(&e, &g, &[0, 0]).unwrap();
        for i in 0..g.len() {
            let p = g.point(i);
            assert!((f.values()[i] - ((p[0] + p[1]) / 2f64.sqrt()).cosh()).abs() < 1e-15);
        }
    }

    #[test]
    fn trailing_time_coordinate() {
        let g = Grid::cube(1, 9, 0.0, 1.0).unwrap();
        // u(x, t) = x t², ∂t u = 2 x t at t = 0.5
        let e = x() * ClosedForm::var(1).pow(2.0);
        let a = Analytic::with_trailing(e, g.clone(), &[0.5]);
        let ut = a.partial(&[0, 1]).unwrap();
        for i in 0..g.len() {
            assert!((ut.values()[i] - g.coord(0, i)).abs() < 1e-15);
        }
    }

    #[test]
    fn order_limit() {
        let g = Grid::cube(1, 9, 0.0, 1.0).unwrap();
        let a = Analytic::new(x().sin(), g);
        assert!(matches!(a.partial(&[5]), Err(Error::DerivativeOrder { .. })));
    }

    #[test]
    fn unbound_time_is_reported() {
        let g = Grid::cube(1, 9, 0.0, 1.0).unwrap();
        let a = Analytic::new(ClosedForm::var(1), g);
        assert!(matches!(a.values(), Err(Error::UnboundVariable { .. })));
    }

    #[test]
    fn division_by_zero_on_grid() {
        let g = Grid::cube(1, 9, -1.0, 1.0).unwrap();
        let e = ClosedForm::one() / x();
        match eval_closed_form(&e, &g, &[0]) {
            Err(Error::DivisionByZero { point }) => assert_eq!(point, vec![0.0]),
            other => panic!("{other:?}"),
        }
    }
}
