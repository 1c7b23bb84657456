//! Scalar Allen–Cahn equation `Δu = W'(u)`.
//!
//! Residuals for the equation and for equipartition `½|∇u|² = W(u)`, the
//! normalization `v = G(u)` with `G' = 1/√(2W)`, planar profiles
//! `u = h(d·x)` from the reduced ODE `|d|² h'' = W'(h)`, and the stream function
//! of the level-set field together with its minimal-surface residual.

use serde::{Deserialize, Serialize};

use crate::eikonal_euler::level_set_divergence_of;
use crate::expr::{eval_points, ClosedForm, Program};
use crate::fields::{mixed, unit, Differentiable, Grid, ResidualReport, ScalarField};
use crate::ode::{dopri5, OdeOptions};
use crate::quadrature::{adaptive_simpson, cumulative_simpson};
use crate::{Error, Result};

/// Lower bound on `2W` along the range used by the normalization.
pub const NORMALIZE_EPS: f64 = 1e-8;

/// Samples of `W` used to certify positivity between grid values.
const RANGE_SAMPLES: usize = 512;

/// A potential `W` and its derivative, both functions of one variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Potential1D {
    pub w: ClosedForm,
    pub dw: ClosedForm,
}

fn eval_1d(e: &ClosedForm, xs: &[f64]) -> Result<Vec<f64>> {
    let prog = Program::compile(&[e]);
    eval_points(&prog, xs.len(), 1, |i, p| p[0] = xs[i])
}

impl Potential1D {
    pub fn new(w: ClosedForm) -> Potential1D {
        let dw = w.derivative(0);
        Potential1D { w, dw }
    }

    /// `(1 − u²)² / 4`.
    pub fn double_well() -> Potential1D {
        Self::new(0.25 * (1.0 - ClosedForm::var(0).pow(2.0)).pow(2.0))
    }

    /// Looks up a named potential. `degenerate` potentials are user-supplied and
    /// go through [`Potential1D::new`].
    pub fn by_name(name: &str) -> Option<Potential1D> {
        match name {
            "double_well" => Some(Self::double_well()),
            _ => None,
        }
    }

    pub fn w_at(&self, us: &[f64]) -> Result<Vec<f64>> {
        eval_1d(&self.w, us)
    }

    pub fn dw_at(&self, us: &[f64]) -> Result<Vec<f64>> {
        eval_1d(&self.dw, us)
    }

    /// Checks `W ≥ 0` at `RANGE_SAMPLES` points of `[lo, hi]`.
    pub fn check_nonnegative(&self, lo: f64, hi: f64) -> Result<()> {
        let us = linspace(lo, hi, RANGE_SAMPLES);
        let ws = self.w_at(&us)?;
        match ws.iter().position(|&w| w < 0.0) {
            Some(i) => Err(Error::NegativePotential { u: us[i], value: ws[i] }),
            None => Ok(()),
        }
    }

    /// Checks `2W ≥ NORMALIZE_EPS` at `RANGE_SAMPLES` points of `[lo, hi]`.
    pub fn check_positive(&self, lo: f64, hi: f64) -> Result<()> {
        let us = linspace(lo, hi, RANGE_SAMPLES);
        let ws = self.w_at(&us)?;
        match ws.iter().position(|&w| !(2.0 * w >= NORMALIZE_EPS)) {
            Some(i) => Err(Error::PotentialVanishes {
                u: us[i],
                value: 2.0 * ws[i],
            }),
            None => Ok(()),
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// `Δu − W'(u)`.
pub fn ac_residual(u: &dyn Differentiable, w: &Potential1D) -> Result<ResidualReport> {
    let d = u.grid().dims();
    let mut derivs = vec![vec![]];
    derivs.extend((0..d).map(|a| unit(a, 2)));
    let parts = u.partials(&derivs)?;
    let dw = w.dw_at(parts[0].values())?;
    let vals: Vec<f64> = (0..u.grid().len())
        .map(|k| parts[1..].iter().map(|p| p.values()[k]).sum::<f64>() - dw[k])
        .collect();
    Ok(ResidualReport::from_values("allen_cahn", &vals, u.grid().h_max()))
}

/// `½|∇u|² − W(u)`.
pub fn equipartition_residual(u: &dyn Differentiable, w: &Potential1D) -> Result<ResidualReport> {
    let d = u.grid().dims();
    let mut derivs = vec![vec![]];
    derivs.extend((0..d).map(|a| unit(a, 1)));
    let parts = u.partials(&derivs)?;
    let wv = w.w_at(parts[0].values())?;
    let vals: Vec<f64> = (0..u.grid().len())
        .map(|k| 0.5 * parts[1..].iter().map(|p| p.values()[k].powi(2)).sum::<f64>() - wv[k])
        .collect();
    Ok(ResidualReport::from_values("equipartition", &vals, u.grid().h_max()))
}

/// `G(s) = ∫_lower^s dr / √(2W(r))` as a closed form in one variable.
pub fn normalizer(w: &Potential1D, lower: f64) -> ClosedForm {
    let integrand = (2.0 * &w.w).pow(-0.5);
    ClosedForm::integral(&integrand, lower, &ClosedForm::var(0))
}

/// `v = G(u)` with the lower limit at the minimum of `u` over `grid`.
/// Fails if `2W` drops below [`NORMALIZE_EPS`] on the range of `u`.
pub fn normalize(u: &ClosedForm, w: &Potential1D, grid: &Grid) -> Result<ClosedForm> {
    let vals = crate::fields::eval_closed_form(u, grid, &[])?;
    let (lo, hi) = (vals.min(), vals.max());
    w.check_positive(lo, hi)?;
    let wv = w.w_at(vals.values())?;
    if let Some(i) = wv.iter().position(|&x| !(2.0 * x >= NORMALIZE_EPS)) {
        return Err(Error::PotentialVanishes {
            u: vals.values()[i],
            value: 2.0 * wv[i],
        });
    }
    Ok(normalizer(w, lo).compose(std::slice::from_ref(u)))
}

/// `G(u)` for sampled `u`: values are sorted and integrated between neighbours.
pub fn normalize_sampled(u: &ScalarField, w: &Potential1D, tol: f64) -> Result<ScalarField> {
    let (lo, hi) = (u.min(), u.max());
    w.check_positive(lo, hi)?;
    let integrand = (2.0 * &w.w).pow(-0.5);
    let prog = Program::compile(&[&integrand]);
    let mut scratch = Vec::new();
    let mut out1 = [0.0];
    let mut f = |s: f64| {
        prog.eval_into(&[s], &mut scratch, &mut out1)
            .map(|_| out1[0])
            .unwrap_or(f64::NAN)
    };
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| u.values()[a].total_cmp(&u.values()[b]));
    let mut out = vec![0.0; u.len()];
    let (mut prev, mut acc) = (lo, 0.0);
    for i in order {
        let s = u.values()[i];
        if s > prev {
            acc += adaptive_simpson(&mut f, prev, s, tol)?;
            prev = s;
        }
        out[i] = acc;
    }
    ScalarField::new(u.grid().clone(), out)
}

/// Numerical solution of `κ h'' = W'(h)`, `κ = |d|²`, through `h(0) = u0`,
/// `h'(0) = du0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanarProfile {
    pub direction: Vec<f64>,
    pub kappa: f64,
    pub ts: Vec<f64>,
    pub h: Vec<f64>,
    pub dh: Vec<f64>,
    /// First integral `½κh'² − W(h)` at `t = 0`.
    pub energy: f64,
    /// Largest deviation of the first integral from `energy`.
    pub energy_drift: f64,
}

pub fn solve_profile(
    w: &Potential1D,
    direction: &[f64],
    u0: f64,
    du0: f64,
    t_range: (f64, f64),
    samples: usize,
) -> Result<PlanarProfile> {
    solve_profile_with(w, direction, u0, du0, t_range, samples, &OdeOptions::default())
}

pub fn solve_profile_with(
    w: &Potential1D,
    direction: &[f64],
    u0: f64,
    du0: f64,
    t_range: (f64, f64),
    samples: usize,
    opts: &OdeOptions,
) -> Result<PlanarProfile> {
    let (t0, t1) = t_range;
    if !(t0 < t1) || samples < 2 {
        return Err(Error::InvalidParameter(format!(
            "profile range ({t0}, {t1}) with {samples} samples"
        )));
    }
    let kappa: f64 = direction.iter().map(|c| c * c).sum();
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter("profile direction must be non-zero".into()));
    }
    let prog = Program::compile(&[&w.dw]);
    let ts = linspace(t0, t1, samples);
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let mut scratch = Vec::new();
        let mut out = [0.0];
        let f = prog
            .eval_into(&[y[0]], &mut scratch, &mut out)
            .map(|_| out[0])
            .unwrap_or(f64::NAN);
        dy[0] = y[1];
        dy[1] = f / kappa;
    };
    let fwd: Vec<f64> = ts.iter().copied().filter(|&t| t >= 0.0).collect();
    let bwd: Vec<f64> = ts.iter().rev().copied().filter(|&t| t < 0.0).collect();
    let y0 = [u0, du0];
    let mut h = Vec::with_capacity(samples);
    let mut dh = Vec::with_capacity(samples);
    if !bwd.is_empty() {
        let states = dopri5(rhs, 0.0, &y0, &bwd, opts)?;
        for s in states.iter().rev() {
            h.push(s[0]);
            dh.push(s[1]);
        }
    }
    if !fwd.is_empty() {
        for s in dopri5(rhs, 0.0, &y0, &fwd, opts)? {
            h.push(s[0]);
            dh.push(s[1]);
        }
    }
    let w0 = w.w_at(&[u0])?[0];
    let energy = 0.5 * kappa * du0 * du0 - w0;
    let wh = w.w_at(&h)?;
    let energy_drift = h.iter().zip(&dh).zip(&wh).fold(0.0f64, |m, ((_, d), wv)| {
        m.max((0.5 * kappa * d * d - wv - energy).abs())
    });
    Ok(PlanarProfile {
        direction: direction.to_vec(),
        kappa,
        ts,
        h,
        dh,
        energy,
        energy_drift,
    })
}

impl PlanarProfile {
    /// Cubic Hermite interpolation of `h` from the stored samples.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let (t0, t1) = (self.ts[0], *self.ts.last().unwrap());
        if !(t >= t0 && t <= t1) {
            return Err(Error::InvalidParameter(format!(
                "t = {t} outside the profile range [{t0}, {t1}]"
            )));
        }
        let step = (t1 - t0) / (self.ts.len() - 1) as f64;
        let i = (((t - t0) / step) as usize).min(self.ts.len() - 2);
        let s = (t - self.ts[i]) / step;
        let (h0, h1) = (self.h[i], self.h[i + 1]);
        let (m0, m1) = (self.dh[i] * step, self.dh[i + 1] * step);
        let s2 = s * s;
        let s3 = s2 * s;
        Ok((2.0 * s3 - 3.0 * s2 + 1.0) * h0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * h1 + (s3 - s2) * m1)
    }

    /// `u(x) = h(d·x)` sampled on `grid`.
    pub fn sample_on(&self, grid: &Grid) -> Result<ScalarField> {
        if grid.dims() != self.direction.len() {
            return Err(Error::DimensionMismatch(format!(
                "profile direction has {} entries, grid has {} dimensions",
                self.direction.len(),
                grid.dims()
            )));
        }
        let vals = (0..grid.len())
            .map(|k| {
                let p = grid.point(k);
                self.eval(p.iter().zip(&self.direction).map(|(x, d)| x * d).sum())
            })
            .collect::<Result<Vec<_>>>()?;
        ScalarField::new(grid.clone(), vals)
    }

    /// Largest `|h(t) − exact(t)|` over the stored samples.
    pub fn max_error(&self, exact: &ClosedForm) -> Result<f64> {
        let e = eval_1d(exact, &self.ts)?;
        Ok(self.h.iter().zip(&e).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// A stream function `ψ` of the level-set field on a 3D grid, one `(x, y)`
/// slice per `z`, with `ψ = 0` at the `(lo_x, lo_y)` corner of each slice.
#[derive(Debug, Clone)]
pub struct StreamFunction {
    pub psi: ScalarField,
    /// Largest disagreement between the two integration paths.
    pub path_mismatch: f64,
    /// `div_(x,y) F`.
    pub divergence: ResidualReport,
    /// Minimal-surface residual of `ψ` from its derivatives on the input path.
    pub minimal_surface: ResidualReport,
}

/// Integrates `ψ_y = f1`, `ψ_x = −f2` in each `z` slice along two paths and
/// fails if they disagree by more than `tol`.
pub fn stream_function_from_flux(f1: &ScalarField, f2: &ScalarField, tol: f64) -> Result<(ScalarField, f64)> {
    f1.same_grid(f2)?;
    let grid = f1.grid();
    if grid.dims() < 2 {
        return Err(Error::UnsupportedDimension {
            dims: grid.dims(),
            reason: "a stream function needs at least two axes".into(),
        });
    }
    let (nx, ny) = (grid.n(0), grid.n(1));
    let (sx, sy) = (grid.stride(0), grid.stride(1));
    let (hx, hy) = (grid.h(0), grid.h(1));
    let nz = grid.len() / (nx * ny);
    let mut psi = vec![0.0; grid.len()];
    let mut mismatch = 0.0f64;
    let px = |k: usize| -f2.values()[k];
    let py = |k: usize| f1.values()[k];
    for iz in 0..nz {
        let base = iz;
        let idx = |i: usize, j: usize| base + i * sx + j * sy;
        // x first along y = y0, then up each column
        let bottom = cumulative_simpson(&(0..nx).map(|i| px(idx(i, 0))).collect::<Vec<_>>(), hx);
        let mut a = vec![0.0; nx * ny];
        for i in 0..nx {
            let col = cumulative_simpson(&(0..ny).map(|j| py(idx(i, j))).collect::<Vec<_>>(), hy);
            for j in 0..ny {
                a[i * ny + j] = bottom[i] + col[j];
            }
        }
        // y first along x = x0, then along each row
        let left = cumulative_simpson(&(0..ny).map(|j| py(idx(0, j))).collect::<Vec<_>>(), hy);
        for j in 0..ny {
            let row = cumulative_simpson(&(0..nx).map(|i| px(idx(i, j))).collect::<Vec<_>>(), hx);
            for i in 0..nx {
                let b = left[j] + row[i];
                mismatch = mismatch.max((a[i * ny + j] - b).abs());
                psi[idx(i, j)] = 0.5 * (a[i * ny + j] + b);
            }
        }
    }
    if !(mismatch <= tol) {
        return Err(Error::PathDependence { mismatch, tol });
    }
    Ok((ScalarField::new(grid.clone(), psi)?, mismatch))
}

/// `F_1 = u_x/u_z`, `F_2 = u_y/u_z` for a 3D field `u` with `u_z > 0`; checks
/// `div F = 0` to `tol`, recovers `ψ` and reports
/// `ψ_yy(ψ_x² + 1) − 2ψ_xψ_yψ_xy + ψ_xx(ψ_y² + 1)`.
pub fn stream_function_and_minimal_surface(u: &dyn Differentiable, tol: f64) -> Result<StreamFunction> {
    let grid = u.grid().clone();
    if grid.dims() != 3 {
        return Err(Error::UnsupportedDimension {
            dims: grid.dims(),
            reason: "the stream-function construction works on 3D fields with z as the distinguished axis".into(),
        });
    }
    let div = level_set_divergence_of(u, 2)?;
    let divergence = ResidualReport::from_field("div_xy", &div);
    if !divergence.within(tol) {
        return Err(Error::NotDivergenceFree {
            value: divergence.linf,
            tol,
        });
    }
    let derivs = [
        unit(0, 1),
        unit(1, 1),
        unit(2, 1),
        unit(0, 2),
        mixed(0, 1),
        mixed(0, 2),
        mixed(1, 2),
    ];
    let p = u.partials(&derivs)?;
    let v = |i: usize, k: usize| p[i].values()[k];
    let n = grid.len();
    let mut f1 = Vec::with_capacity(n);
    let mut f2 = Vec::with_capacity(n);
    let mut ms = Vec::with_capacity(n);
    for k in 0..n {
        let (ux, uy, uz) = (v(0, k), v(1, k), v(2, k));
        let (uxx, uxy, uxz, uyz) = (v(3, k), v(4, k), v(5, k), v(6, k));
        let a = ux / uz;
        let b = uy / uz;
        let a_x = (uxx * uz - ux * uxz) / (uz * uz);
        let a_y = (uxy * uz - ux * uyz) / (uz * uz);
        let b_x = (uxy * uz - uy * uxz) / (uz * uz);
        f1.push(a);
        f2.push(b);
        // ψ_x = −F2, ψ_y = F1, ψ_xx = −F2_x, ψ_yy = F1_y, ψ_xy = F1_x
        ms.push(a_y * (b * b + 1.0) + 2.0 * a * b * a_x - b_x * (a * a + 1.0));
    }
    let f1 = ScalarField::new(grid.clone(), f1)?;
    let f2 = ScalarField::new(grid.clone(), f2)?;
    let (psi, path_mismatch) = stream_function_from_flux(&f1, &f2, tol.max(1e-6))?;
    Ok(StreamFunction {
        psi,
        path_mismatch,
        divergence,
        minimal_surface: ResidualReport::from_values("minimal_surface", &ms, grid.h_max()),
    })
}

/// Minimal-surface residual of a sampled `ψ` on the `(x, y)` axes.
pub fn minimal_surface_residual(psi: &dyn Differentiable) -> Result<ResidualReport> {
    let p = psi.partials(&[unit(0, 1), unit(1, 1), unit(0, 2), mixed(0, 1), unit(1, 2)])?;
    let vals: Vec<f64> = (0..psi.grid().len())
        .map(|k| {
            let (px, py, pxx, pxy, pyy) = (
                p[0].values()[k],
                p[1].values()[k],
                p[2].values()[k],
                p[3].values()[k],
                p[4].values()[k],
            );
            pyy * (px * px + 1.0) - 2.0 * px * py * pxy + pxx * (py * py + 1.0)
        })
        .collect();
    Ok(ResidualReport::from_values(
        "minimal_surface",
        &vals,
        psi.grid().h_max(),
    ))
}

/// `tanh((|x − x₀| + c)/√2)`: radially symmetric, satisfies equipartition for
/// the double well but not the Allen–Cahn equation.
pub fn radial_candidate(center: &[f64], c: f64) -> ClosedForm {
    let r2 = center
        .iter()
        .enumerate()
        .map(|(i, &x0)| (ClosedForm::var(i) - x0).pow(2.0))
        .fold(ClosedForm::zero(), |acc, t| acc + t);
    ((r2.sqrt() + c) / std::f64::consts::SQRT_2).tanh()
}
