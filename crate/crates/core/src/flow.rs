//! Incompressible Euler / Navier–Stokes residuals.
//!
//! A [`FlowJet`] holds everything the momentum and continuity equations need at
//! each grid point (velocity, its gradient and Laplacian, its time derivative
//! and the pressure gradient). Jets come from exact derivatives of a
//! [`Flow`], from finite differences of its samples, or are assembled directly
//! by families whose profile has no closed form.

use serde::{Deserialize, Serialize};

use crate::expr::ClosedForm;
use crate::fields::{unit, Analytic, Differentiable, Grid, ResidualReport, Sampled, ScalarField, VectorField};
use crate::{Error, Result};

const AXIS: [&str; 3] = ["x", "y", "z"];

/// Velocity and pressure as closed forms in `(x, y[, z], t)`; time is the last coordinate.
#[derive(Debug, Clone)]
pub struct Flow {
    pub dims: usize,
    pub u: Vec<ClosedForm>,
    pub p: ClosedForm,
}

/// Pointwise data for the flow equations on one grid at one time.
#[derive(Debug, Clone)]
pub struct FlowJet {
    pub u: Vec<ScalarField>,
    /// `grad_u[i][j] = ∂_j u_i`
    pub grad_u: Vec<Vec<ScalarField>>,
    pub lap_u: Vec<ScalarField>,
    pub u_t: Vec<ScalarField>,
    pub grad_p: Vec<ScalarField>,
}

/// Momentum residual per component plus the divergence residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowResidual {
    pub momentum: Vec<ResidualReport>,
    pub divergence: ResidualReport,
}

impl FlowResidual {
    /// Worst `linf` over all equations.
    pub fn linf(&self) -> f64 {
        self.momentum
            .iter()
            .chain(std::iter::once(&self.divergence))
            .fold(0.0, |m, r| m.max(r.linf))
    }

    pub fn combined(&self, name: &str) -> ResidualReport {
        let mut parts = self.momentum.clone();
        parts.push(self.divergence.clone());
        ResidualReport::combine(name, &parts)
    }

    pub fn reports(&self) -> Vec<ResidualReport> {
        let mut all = self.momentum.clone();
        all.push(self.divergence.clone());
        all
    }
}

/// How derivatives are obtained when certifying a flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvalPath {
    Analytic,
    /// Spatial finite differences of order `accuracy`, centered time difference of half-width `delta`.
    Sampled {
        accuracy: usize,
        delta: f64,
    },
}

impl EvalPath {
    pub fn sampled(accuracy: usize) -> EvalPath {
        EvalPath::Sampled { accuracy, delta: 1e-4 }
    }
}

impl Flow {
    pub fn new(dims: usize, u: Vec<ClosedForm>, p: ClosedForm) -> Result<Flow> {
        if !(2..=3).contains(&dims) || u.len() != dims {
            return Err(Error::DimensionMismatch(format!(
                "a {dims}-dimensional flow needs {dims} velocity components, got {}",
                u.len()
            )));
        }
        Ok(Flow { dims, u, p })
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.dims() != self.dims {
            return Err(Error::DimensionMismatch(format!(
                "{}-dimensional flow on a {}-dimensional grid",
                self.dims,
                grid.dims()
            )));
        }
        Ok(())
    }

    /// Velocity and pressure sampled at time `t`.
    pub fn sample(&self, grid: &Grid, t: f64) -> Result<(VectorField, ScalarField)> {
        self.check_grid(grid)?;
        let u = self
            .u
            .iter()
            .map(|c| Analytic::with_trailing(c.clone(), grid.clone(), &[t]).values())
            .collect::<Result<Vec<_>>>()?;
        let p = Analytic::with_trailing(self.p.clone(), grid.clone(), &[t]).values()?;
        Ok((VectorField::new(u)?, p))
    }

    pub fn jet(&self, grid: &Grid, t: f64, path: EvalPath) -> Result<FlowJet> {
        match path {
            EvalPath::Analytic => self.jet_analytic(grid, t),
            EvalPath::Sampled { accuracy, delta } => self.jet_sampled(grid, t, delta, accuracy),
        }
    }

    pub fn residual(&self, grid: &Grid, t: f64, mu: f64, path: EvalPath) -> Result<FlowResidual> {
        Ok(self.jet(grid, t, path)?.residual(mu))
    }

    /// Jet from exact derivatives, including the time derivative.
    pub fn jet_analytic(&self, grid: &Grid, t: f64) -> Result<FlowJet> {
        self.check_grid(grid)?;
        let d = self.dims;
        let mut derivs: Vec<Vec<usize>> = vec![vec![]];
        derivs.extend((0..d).map(|j| unit(j, 1)));
        derivs.extend((0..d).map(|j| unit(j, 2)));
        derivs.push(unit(d, 1));
        let mut jet = FlowJet::empty();
        for comp in &self.u {
            let a = Analytic::with_trailing(comp.clone(), grid.clone(), &[t]);
            let mut parts = a.partials(&derivs)?.into_iter();
            jet.u.push(parts.next().unwrap());
            jet.grad_u.push((0..d).map(|_| parts.next().unwrap()).collect());
            let second: Vec<ScalarField> = (0..d).map(|_| parts.next().unwrap()).collect();
            jet.lap_u.push(sum(&second)?);
            jet.u_t.push(parts.next().unwrap());
        }
        let p = Analytic::with_trailing(self.p.clone(), grid.clone(), &[t]);
        let firsts: Vec<Vec<usize>> = (0..d).map(|j| unit(j, 1)).collect();
        jet.grad_p = p.partials(&firsts)?;
        Ok(jet)
    }

    /// Jet from samples: spatial finite differences at `accuracy`, centered
    /// difference of width `2δ` in time.
    pub fn jet_sampled(&self, grid: &Grid, t: f64, delta: f64, accuracy: usize) -> Result<FlowJet> {
        self.check_grid(grid)?;
        let (now, p) = self.sample(grid, t)?;
        let (plus, _) = self.sample(grid, t + delta)?;
        let (minus, _) = self.sample(grid, t - delta)?;
        let u: Vec<Sampled> = now
            .components()
            .iter()
            .map(|c| Sampled::new(c.clone(), accuracy))
            .collect();
        let u_t = plus
            .components()
            .iter()
            .zip(minus.components())
            .map(|(a, b)| Ok(a.sub(b)?.scale(0.5 / delta)))
            .collect::<Result<Vec<_>>>()?;
        let p = Sampled::new(p, accuracy);
        FlowJet::from_differentiable(&u.iter().map(|s| s as &dyn Differentiable).collect::<Vec<_>>(), u_t, &p)
    }
}

fn sum(fields: &[ScalarField]) -> Result<ScalarField> {
    let mut acc = fields[0].clone();
    for f in &fields[1..] {
        acc = acc.add(f)?;
    }
    Ok(acc)
}

impl FlowJet {
    fn empty() -> FlowJet {
        FlowJet {
            u: Vec::new(),
            grad_u: Vec::new(),
            lap_u: Vec::new(),
            u_t: Vec::new(),
            grad_p: Vec::new(),
        }
    }

    /// Jet from spatially differentiable components and a supplied time derivative.
    pub fn from_differentiable(
        u: &[&dyn Differentiable],
        u_t: Vec<ScalarField>,
        p: &dyn Differentiable,
    ) -> Result<FlowJet> {
        let d = p.grid().dims();
        let mut derivs: Vec<Vec<usize>> = vec![vec![]];
        derivs.extend((0..d).map(|j| unit(j, 1)));
        derivs.extend((0..d).map(|j| unit(j, 2)));
        let mut jet = FlowJet::empty();
        for comp in u {
            let mut parts = comp.partials(&derivs)?.into_iter();
            jet.u.push(parts.next().unwrap());
            jet.grad_u.push((0..d).map(|_| parts.next().unwrap()).collect());
            let second: Vec<ScalarField> = (0..d).map(|_| parts.next().unwrap()).collect();
            jet.lap_u.push(sum(&second)?);
        }
        jet.u_t = u_t;
        let firsts: Vec<Vec<usize>> = (0..d).map(|j| unit(j, 1)).collect();
        jet.grad_p = p.partials(&firsts)?;
        Ok(jet)
    }

    pub fn dims(&self) -> usize {
        self.u.len()
    }

    pub fn grid(&self) -> &Grid {
        self.u[0].grid()
    }

    /// `u_t + (u·∇)u + ∇p − μΔu` per component and `div u`.
    pub fn residual(&self, mu: f64) -> FlowResidual {
        let d = self.dims();
        let n = self.grid().len();
        let h = self.grid().h_max();
        let momentum = (0..d)
            .map(|i| {
                let vals: Vec<f64> = (0..n)
                    .map(|k| {
                        let adv: f64 = (0..d)
                            .map(|j| self.u[j].values()[k] * self.grad_u[i][j].values()[k])
                            .sum();
                        self.u_t[i].values()[k] + adv + self.grad_p[i].values()[k] - mu * self.lap_u[i].values()[k]
                    })
                    .collect();
                ResidualReport::from_values(format!("momentum_{}", AXIS[i]), &vals, h)
            })
            .collect();
        let div: Vec<f64> = (0..n)
            .map(|k| (0..d).map(|i| self.grad_u[i][i].values()[k]).sum())
            .collect();
        FlowResidual {
            momentum,
            divergence: ResidualReport::from_values("divergence", &div, h),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(i: usize) -> ClosedForm {
        ClosedForm::var(i)
    }

    #[test]
    fn steady_shear_is_exact() {
        let f = Flow::new(2, vec![var(1), ClosedForm::zero()], ClosedForm::zero()).unwrap();
        let g = Grid::cube(2, 9, -1.0, 1.0).unwrap();
        let r = f.jet_analytic(&g, 0.3).unwrap().residual(0.0);
        assert_eq!(r.linf(), 0.0);
    }

    #[test]
    fn expansion_has_divergence_two() {
        let f = Flow::new(2, vec![var(0), var(1)], ClosedForm::zero()).unwrap();
        let g = Grid::cube(2, 9, -1.0, 1.0).unwrap();
        let r = f.jet_analytic(&g, 0.0).unwrap().residual(0.0);
        assert!((r.divergence.linf - 2.0).abs() < 1e-15);
        assert!((r.divergence.l2 - 2.0 * 9.0).abs() < 1e-12);
    }

    #[test]
    fn taylor_green_decays() {
        // u = (sin x cos y, −cos x sin y) e^{−2μt}, p = (cos 2x + cos 2y) e^{−4μt} / 4
        let mu = 0.1;
        let decay = (-2.0 * mu * var(2)).exp();
        let u1 = var(0).sin() * var(1).cos() * &decay;
        let u2 = -(var(0).cos() * var(1).sin()) * &decay;
        let p = 0.25 * ((2.0 * var(0)).cos() + (2.0 * var(1)).cos()) * (-4.0 * mu * var(2)).exp();
        let f = Flow::new(2, vec![u1, u2], p).unwrap();
        let g = Grid::cube(2, 17, 0.0, 3.0).unwrap();
        assert!(f.jet_analytic(&g, 0.7).unwrap().residual(mu).linf() < 1e-14);
        let r = f.jet_sampled(&g, 0.7, 1e-4, 2).unwrap().residual(mu);
        assert!(r.linf() < 0.05 && r.linf() > 1e-6, "{}", r.linf());
    }
}
