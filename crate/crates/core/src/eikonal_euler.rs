//! Eikonal-type equations and pressureless Euler fields.
//!
//! If `|∇v|² = G(v)` and `v` is increasing along a distinguished axis `x_n`,
//! then `F_i = v_{x_i} / v_{x_n}` solves `F_{x_n} + (F·∇_y)F = 0`, where `y`
//! collects the remaining axes. This module builds such fields, certifies them,
//! inverts the map in two dimensions and relates `div_y F` to the mean
//! curvature of the level sets.

use serde::{Deserialize, Serialize};

use crate::expr::{eval_points, ClosedForm, Program};
use crate::fields::{
    mixed, unit, Analytic, Differentiable, Grid, ResidualReport, Sampled, ScalarField, VectorField, ANALYTIC_ZERO,
};
use crate::quadrature::cumulative_simpson;
use crate::{Error, Result};

/// Sampling margin for `v_{x_n} > 0`.
pub const MONOTONICITY_MARGIN: f64 = 1e-8;

/// Smallest admissible `|∇u|` for the curvature.
pub const GRADIENT_FLOOR: f64 = 1e-8;

/// Number of samples along the range of `v` in the generalized pipeline.
pub const RANGE_SAMPLES: usize = 512;

/// A solution of `|∇v|² = G(v)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EikonalSolution {
    pub v: ClosedForm,
    /// Right-hand side as a function of one variable.
    pub g: ClosedForm,
    pub time_axis: usize,
}

/// The velocity field `F` of a pressureless Euler flow, one component per
/// non-time axis (in ascending axis order).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EulerField {
    pub components: Vec<ClosedForm>,
    pub dims: usize,
    pub time_axis: usize,
}

fn check_layout(dims: usize, time_axis: usize) -> Result<()> {
    if !(2..=3).contains(&dims) {
        return Err(Error::UnsupportedDimension {
            dims,
            reason: "only two and three dimensions are supported".into(),
        });
    }
    if time_axis >= dims {
        return Err(Error::AxisOutOfRange { axis: time_axis, dims });
    }
    Ok(())
}

fn y_axes(dims: usize, time_axis: usize) -> Vec<usize> {
    (0..dims).filter(|&a| a != time_axis).collect()
}

/// Fails with the first grid point where `d` is not above the margin.
fn check_positive(d: &ScalarField, axis: usize) -> Result<()> {
    match d.values().iter().position(|&x| x.is_nan() || x <= MONOTONICITY_MARGIN) {
        Some(i) => Err(Error::Monotonicity {
            axis,
            value: d.values()[i],
            point: d.grid().point(i),
        }),
        None => Ok(()),
    }
}

impl EikonalSolution {
    pub fn new(v: ClosedForm, g: ClosedForm, time_axis: usize) -> EikonalSolution {
        EikonalSolution { v, g, time_axis }
    }

    /// Checks monotonicity along the time axis and reports `|∇v|² − G(v)`.
    pub fn check(&self, grid: &Grid) -> Result<ResidualReport> {
        check_layout(grid.dims(), self.time_axis)?;
        let a = Analytic::new(self.v.clone(), grid.clone());
        check_positive(&a.partial(&unit(self.time_axis, 1))?, self.time_axis)?;
        let lhs: ClosedForm = (0..grid.dims())
            .map(|i| self.v.derivative(i).pow(2.0))
            .fold(ClosedForm::zero(), |acc, t| acc + t);
        let r = lhs - self.g.compose(&[self.v.clone()]);
        let vals = Analytic::new(r, grid.clone()).values()?;
        Ok(ResidualReport::from_field("eikonal", &vals))
    }
}

/// `F_i = u_{y_i} / u_{x_n}` without any sign check.
fn level_set_field(u: &ClosedForm, dims: usize, time_axis: usize) -> Vec<ClosedForm> {
    let un = u.derivative(time_axis);
    y_axes(dims, time_axis)
        .into_iter()
        .map(|j| u.derivative(j) / &un)
        .collect()
}

/// Builds `F_i = v_{x_i} / v_{x_n}` after checking `v_{x_n} > 0` on `grid`.
pub fn eikonal_to_euler(sol: &EikonalSolution, grid: &Grid) -> Result<EulerField> {
    let dims = grid.dims();
    check_layout(dims, sol.time_axis)?;
    let vn = Analytic::new(sol.v.derivative(sol.time_axis), grid.clone()).values()?;
    check_positive(&vn, sol.time_axis)?;
    Ok(EulerField {
        components: level_set_field(&sol.v, dims, sol.time_axis),
        dims,
        time_axis: sol.time_axis,
    })
}

impl EulerField {
    pub fn new(components: Vec<ClosedForm>, dims: usize, time_axis: usize) -> Result<EulerField> {
        check_layout(dims, time_axis)?;
        if components.len() != dims - 1 {
            return Err(Error::DimensionMismatch(format!(
                "a {dims}-dimensional Euler field has {} components, got {}",
                dims - 1,
                components.len()
            )));
        }
        Ok(EulerField {
            components,
            dims,
            time_axis,
        })
    }

    pub fn y_axes(&self) -> Vec<usize> {
        y_axes(self.dims, self.time_axis)
    }

    pub fn sample(&self, grid: &Grid) -> Result<VectorField> {
        let comps = self
            .components
            .iter()
            .map(|c| Analytic::new(c.clone(), grid.clone()).values())
            .collect::<Result<Vec<_>>>()?;
        VectorField::new(comps)
    }
}

/// `max_i ‖F_{i,x_n} + Σ_j F_j F_{i,y_j}‖` for components given on either path.
pub fn euler_residual_of(components: &[&dyn Differentiable], time_axis: usize) -> Result<ResidualReport> {
    let grid = components
        .first()
        .ok_or_else(|| Error::DimensionMismatch("empty Euler field".into()))?
        .grid()
        .clone();
    let dims = grid.dims();
    check_layout(dims, time_axis)?;
    let ys = y_axes(dims, time_axis);
    if components.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} components for {} transverse axes",
            components.len(),
            ys.len()
        )));
    }
    let mut derivs = vec![vec![], unit(time_axis, 1)];
    derivs.extend(ys.iter().map(|&j| unit(j, 1)));
    let parts: Vec<Vec<ScalarField>> = components.iter().map(|c| c.partials(&derivs)).collect::<Result<_>>()?;
    let n = grid.len();
    let reports: Vec<ResidualReport> = (0..components.len())
        .map(|i| {
            let vals: Vec<f64> = (0..n)
                .map(|k| {
                    let adv: f64 = (0..ys.len())
                        .map(|j| parts[j][0].values()[k] * parts[i][2 + j].values()[k])
                        .sum();
                    parts[i][1].values()[k] + adv
                })
                .collect();
            ResidualReport::from_values(format!("euler_{i}"), &vals, grid.h_max())
        })
        .collect();
    Ok(ResidualReport::combine("euler", &reports))
}

/// Euler residual with exact derivatives.
pub fn euler_residual(f: &EulerField, grid: &Grid) -> Result<ResidualReport> {
    let an: Vec<Analytic> = f
        .components
        .iter()
        .map(|c| Analytic::new(c.clone(), grid.clone()))
        .collect();
    euler_residual_of(
        &an.iter().map(|a| a as &dyn Differentiable).collect::<Vec<_>>(),
        f.time_axis,
    )
}

/// Euler residual of samples, differentiated by finite differences.
pub fn euler_residual_sampled(f: &EulerField, grid: &Grid, accuracy: usize) -> Result<ResidualReport> {
    let s: Vec<Sampled> = f
        .sample(grid)?
        .into_components()
        .into_iter()
        .map(|c| Sampled::new(c, accuracy))
        .collect();
    euler_residual_of(
        &s.iter().map(|a| a as &dyn Differentiable).collect::<Vec<_>>(),
        f.time_axis,
    )
}

/// Two-dimensional inversion: `ṽ = ∫ dx_n / √(F² + 1) + a(y)`, integrated from
/// the lower edge of the grid by cumulative Simpson along each time line.
/// `a` is a function of one variable, the transverse coordinate.
pub fn reconstruct_eikonal_2d(f: &EulerField, a: &ClosedForm, grid: &Grid) -> Result<ScalarField> {
    if f.dims != 2 || grid.dims() != 2 {
        return Err(Error::UnsupportedDimension {
            dims: f.dims.max(grid.dims()),
            reason: "inversion of the level-set map is only available in two dimensions; \
                     higher dimensions need assumptions that are not known"
                .into(),
        });
    }
    let t = f.time_axis;
    let y = 1 - t;
    let speed = (f.components[0].pow(2.0) + 1.0).pow(-0.5);
    let w = Analytic::new(speed, grid.clone()).values()?;
    let ys = grid.axis_coords(y);
    let prog = Program::compile(&[a]);
    let av = eval_points(&prog, ys.len(), 1, |i, p| p[0] = ys[i])?;
    let (nt, st, sy) = (grid.n(t), grid.stride(t), grid.stride(y));
    let mut out = vec![0.0; grid.len()];
    for (iy, &shift) in av.iter().enumerate() {
        let line: Vec<f64> = (0..nt).map(|k| w.values()[iy * sy + k * st]).collect();
        for (k, v) in cumulative_simpson(&line, grid.h(t)).into_iter().enumerate() {
            out[iy * sy + k * st] = v + shift;
        }
    }
    ScalarField::new(grid.clone(), out)
}

/// `|∇v|² − 1` on either path.
pub fn eikonal_defect(v: &dyn Differentiable) -> Result<ResidualReport> {
    let dims = v.grid().dims();
    let g = v.partials(&(0..dims).map(|a| unit(a, 1)).collect::<Vec<_>>())?;
    let vals: Vec<f64> = (0..v.grid().len())
        .map(|k| g.iter().map(|c| c.values()[k].powi(2)).sum::<f64>() - 1.0)
        .collect();
    Ok(ResidualReport::from_values("eikonal_defect", &vals, v.grid().h_max()))
}

/// First and second partials: `(grad, hess)` with `hess[i][j] = u_{ij}`.
fn jet2(u: &dyn Differentiable) -> Result<(Vec<ScalarField>, Vec<Vec<ScalarField>>)> {
    let d = u.grid().dims();
    let mut derivs: Vec<Vec<usize>> = (0..d).map(|i| unit(i, 1)).collect();
    for i in 0..d {
        for j in i..d {
            derivs.push(mixed(i, j));
        }
    }
    let mut parts = u.partials(&derivs)?.into_iter();
    let grad: Vec<ScalarField> = (0..d).map(|_| parts.next().unwrap()).collect();
    let mut hess = vec![vec![ScalarField::zeros(u.grid()); d]; d];
    for i in 0..d {
        for j in i..d {
            let p = parts.next().unwrap();
            hess[j][i] = p.clone();
            hess[i][j] = p;
        }
    }
    Ok((grad, hess))
}

/// `div(∇u / |∇u|) = (Δu |∇u|² − Σ u_i u_j u_ij) / |∇u|³`.
pub fn mean_curvature_of(u: &dyn Differentiable) -> Result<ScalarField> {
    let grid = u.grid().clone();
    let d = grid.dims();
    let (g, h) = jet2(u)?;
    let mut out = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let gk: Vec<f64> = g.iter().map(|c| c.values()[k]).collect();
        let n2: f64 = gk.iter().map(|x| x * x).sum();
        let norm = n2.sqrt();
        if !(norm >= GRADIENT_FLOOR) {
            return Err(Error::VanishingGradient {
                norm,
                point: grid.point(k),
            });
        }
        let lap: f64 = (0..d).map(|i| h[i][i].values()[k]).sum();
        let mut quad = 0.0;
        for i in 0..d {
            for j in 0..d {
                quad += gk[i] * gk[j] * h[i][j].values()[k];
            }
        }
        out.push((lap * n2 - quad) / (n2 * norm));
    }
    ScalarField::new(grid, out)
}

pub fn mean_curvature(u: &ClosedForm, grid: &Grid) -> Result<ScalarField> {
    mean_curvature_of(&Analytic::new(u.clone(), grid.clone()))
}

/// `div_y F` for `F_i = u_{y_i}/u_{x_n}`:
/// `(u_n Δ_y u − Σ_j u_j u_{jn}) / u_n²`, after checking `u_n > 0`.
pub fn level_set_divergence_of(u: &dyn Differentiable, time_axis: usize) -> Result<ScalarField> {
    let grid = u.grid().clone();
    check_layout(grid.dims(), time_axis)?;
    let (g, h) = jet2(u)?;
    check_positive(&g[time_axis], time_axis)?;
    let ys = y_axes(grid.dims(), time_axis);
    let n = time_axis;
    let out = (0..grid.len())
        .map(|k| {
            let un = g[n].values()[k];
            let s: f64 = ys
                .iter()
                .map(|&j| un * h[j][j].values()[k] - g[j].values()[k] * h[j][n].values()[k])
                .sum();
            s / (un * un)
        })
        .collect();
    ScalarField::new(grid, out)
}

/// Both sides of the equivalence `div_y F = 0 ⇔ div(∇u/|∇u|) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub div_y: ResidualReport,
    pub curvature: ResidualReport,
    /// Both sides vanish, or both do not, at tolerance `tol`.
    pub consistent: bool,
    pub tol: f64,
}

pub fn divergence_equivalence_check(u: &dyn Differentiable, time_axis: usize, tol: f64) -> Result<EquivalenceReport> {
    let div_y = ResidualReport::from_field("div_y", &level_set_divergence_of(u, time_axis)?);
    let curvature = ResidualReport::from_field("mean_curvature", &mean_curvature_of(u)?);
    Ok(EquivalenceReport {
        consistent: div_y.within(tol) == curvature.within(tol),
        div_y,
        curvature,
        tol,
    })
}

/// Coefficients of the pair
/// `a(u)Δu + b(u)|∇u|² = f(u)`, `k(u)Δu + l(u)|∇u|² = g(u)`
/// and the link `u = Φ(v)`. All are functions of one variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneralizedEqSpec {
    pub a: ClosedForm,
    pub b: ClosedForm,
    pub f: ClosedForm,
    pub k: ClosedForm,
    pub l: ClosedForm,
    pub g: ClosedForm,
    pub phi: ClosedForm,
}

impl GeneralizedEqSpec {
    fn at_phi(&self, e: &ClosedForm) -> ClosedForm {
        e.compose(&[self.phi.clone()])
    }

    /// `p = k a(Φ) Φ'' + k b(Φ) Φ'² − l a(Φ) Φ'`.
    pub fn p(&self) -> ClosedForm {
        let d1 = self.phi.derivative(0);
        let d2 = d1.derivative(0);
        let a = self.at_phi(&self.a);
        &self.k * &a * &d2 + &self.k * self.at_phi(&self.b) * d1.pow(2.0) - &self.l * a * d1
    }

    /// `G = (k f(Φ) − g a(Φ) Φ') / p`.
    pub fn big_g(&self) -> ClosedForm {
        let d1 = self.phi.derivative(0);
        (&self.k * self.at_phi(&self.f) - &self.g * self.at_phi(&self.a) * d1) / self.p()
    }

    /// `a(Φ)Φ'G' + 2[b(Φ)Φ'² + a(Φ)Φ'']G − 2f(Φ)`.
    pub fn divergence_ode(&self) -> ClosedForm {
        let d1 = self.phi.derivative(0);
        let d2 = d1.derivative(0);
        let a = self.at_phi(&self.a);
        let g = self.big_g();
        &a * &d1 * g.derivative(0) + 2.0 * (self.at_phi(&self.b) * d1.pow(2.0) + &a * d2) * g
            - 2.0 * self.at_phi(&self.f)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub big_g: ClosedForm,
    pub range: (f64, f64),
    /// `(t, G(t))` along the sampled range.
    pub g_samples: Vec<(f64, f64)>,
    pub eikonal: ResidualReport,
    pub euler: ResidualReport,
    pub div_ode: ResidualReport,
    pub div_y: ResidualReport,
}

fn sample_1d(exprs: &[&ClosedForm], ts: &[f64]) -> Result<Vec<Vec<f64>>> {
    let prog = Program::compile(exprs);
    let flat = eval_points(&prog, ts.len(), 1, |i, p| p[0] = ts[i])?;
    let m = exprs.len();
    Ok((0..m)
        .map(|j| flat.iter().skip(j).step_by(m).copied().collect())
        .collect())
}

/// Runs the generalized construction for `v` on `grid`: checks the
/// non-degeneracy conditions along the range of `v`, certifies
/// `|∇v|² = G(v)`, the Euler equation for `F` built from `u = Φ(v)`, and the
/// one-dimensional divergence ODE.
pub fn theorem1_pipeline(
    spec: &GeneralizedEqSpec,
    v: &ClosedForm,
    time_axis: usize,
    grid: &Grid,
) -> Result<Theorem1Report> {
    let dims = grid.dims();
    check_layout(dims, time_axis)?;
    let av = Analytic::new(v.clone(), grid.clone());
    check_positive(&av.partial(&unit(time_axis, 1))?, time_axis)?;
    let vals = av.values()?;
    let (lo, hi) = (vals.min(), vals.max());
    let ts: Vec<f64> = (0..RANGE_SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / (RANGE_SAMPLES - 1) as f64)
        .collect();

    let p = spec.p();
    let a_phi = spec.a.compose(&[spec.phi.clone()]);
    let d1 = spec.phi.derivative(0);
    let checks = sample_1d(&[&p, &a_phi, &d1], &ts)?;
    for (name, col) in ["p", "a(Φ)", "Φ'"].iter().zip(&checks) {
        if let Some(i) = col.iter().position(|x| !(x.abs() > MONOTONICITY_MARGIN)) {
            return Err(Error::Degenerate {
                name: name.to_string(),
                t: ts[i],
                value: col[i],
            });
        }
    }

    let big_g = spec.big_g();
    let ode = spec.divergence_ode();
    let cols = sample_1d(&[&big_g, &ode], &ts)?;
    let g_samples = ts.iter().copied().zip(cols[0].iter().copied()).collect();
    let h_range = if RANGE_SAMPLES > 1 {
        (hi - lo) / (RANGE_SAMPLES - 1) as f64
    } else {
        0.0
    };
    let div_ode = ResidualReport::from_values("divergence_ode", &cols[1], h_range);

    let eikonal = EikonalSolution::new(v.clone(), big_g.clone(), time_axis).check(grid)?;
    let u = spec.phi.compose(&[v.clone()]);
    let field = EulerField::new(level_set_field(&u, dims, time_axis), dims, time_axis)?;
    let euler = euler_residual(&field, grid)?;
    let div_y = ResidualReport::from_field("div_y", &level_set_divergence_of(&av, time_axis)?);

    Ok(Theorem1Report {
        big_g,
        range: (lo, hi),
        g_samples,
        eikonal,
        euler,
        div_ode,
        div_y,
    })
}

/// Verdict helper: residual at analytic precision.
pub fn is_zero(r: &ResidualReport) -> bool {
    r.within(ANALYTIC_ZERO)
}
