//! Spectral Helmholtz–Leray decomposition on doubly periodic grids and the
//! fourth-order identities satisfied by projected planar Allen–Cahn solutions.
//!
//! Writing `u = ∇φ + (−σ_y, σ_x)`, the projections `v = (−σ_y, σ_x)` and
//! `ṽ = ∇φ` of a solution satisfy
//! `(s_xx − s_yy) Δs_xy = s_xy Δ(s_xx − s_yy)` with `s = σ` or `s = φ`.
//! A solvable subclass is `c1 σ_xy = c2 (σ_xx − σ_yy)`, solved by
//! `σ = A(x) + B(y)` when `c2 = 0` and by `σ = F(cx + y) + G(x − cy)` otherwise.
//!
//! The Nyquist wavenumber is treated as zero on each axis so that the spectral
//! operators map real fields to real fields.

use std::io::{Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::expr::ClosedForm;
use crate::fields::{mixed, unit, Analytic, Differentiable, Grid, ResidualReport, ScalarField, VectorField};
use crate::{Error, Result};

/// Two-component field on a doubly periodic grid with power-of-two sides.
#[derive(Debug, Clone)]
pub struct PeriodicField2D {
    field: VectorField,
}

impl PeriodicField2D {
    pub fn new(components: Vec<ScalarField>) -> Result<PeriodicField2D> {
        if components.len() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "periodic field needs 2 components, got {}",
                components.len()
            )));
        }
        let field = VectorField::new(components)?;
        check_periodic(field.grid())?;
        Ok(PeriodicField2D { field })
    }

    pub fn from_closed_forms(u1: &ClosedForm, u2: &ClosedForm, grid: &Grid) -> Result<PeriodicField2D> {
        check_periodic(grid)?;
        PeriodicField2D::new(vec![
            Analytic::new(u1.clone(), grid.clone()).values()?,
            Analytic::new(u2.clone(), grid.clone()).values()?,
        ])
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        self.field.component(i)
    }

    pub fn as_vector(&self) -> &VectorField {
        &self.field
    }

    pub fn linf(&self) -> f64 {
        self.field.linf()
    }

    pub fn sub(&self, other: &PeriodicField2D) -> Result<PeriodicField2D> {
        PeriodicField2D::new(vec![
            self.component(0).sub(other.component(0))?,
            self.component(1).sub(other.component(1))?,
        ])
    }

    pub fn add(&self, other: &PeriodicField2D) -> Result<PeriodicField2D> {
        PeriodicField2D::new(vec![
            self.component(0).add(other.component(0))?,
            self.component(1).add(other.component(1))?,
        ])
    }

    /// Grid-averaged inner product `(1/N) Σ u·v`.
    pub fn inner(&self, other: &PeriodicField2D) -> Result<f64> {
        let n = self.grid().len() as f64;
        let mut acc = 0.0;
        for i in 0..2 {
            self.component(i).same_grid(other.component(i))?;
            acc += self
                .component(i)
                .values()
                .iter()
                .zip(other.component(i).values())
                .map(|(a, b)| a * b)
                .sum::<f64>();
        }
        Ok(acc / n)
    }
}

/// Rejects grids that are not two-dimensional, periodic and power-of-two sized.
pub fn check_periodic(grid: &Grid) -> Result<()> {
    if grid.dims() != 2 {
        return Err(Error::UnsupportedDimension {
            dims: grid.dims(),
            reason: "spectral projection is implemented for planar fields".into(),
        });
    }
    for axis in 0..2 {
        if !grid.periodic(axis) {
            return Err(Error::NotPeriodic(axis));
        }
        if !grid.n(axis).is_power_of_two() {
            return Err(Error::NotPowerOfTwo {
                axis,
                points: grid.n(axis),
            });
        }
    }
    Ok(())
}

struct Spectrum {
    n: [usize; 2],
    k: [Vec<f64>; 2],
}

impl Spectrum {
    fn new(grid: &Grid) -> Spectrum {
        let n = [grid.n(0), grid.n(1)];
        let k = [0, 1].map(|a| {
            let scale = 2.0 * std::f64::consts::PI / (grid.hi(a) - grid.lo(a));
            (0..n[a])
                .map(|m| {
                    if 2 * m == n[a] {
                        0.0
                    } else if 2 * m < n[a] {
                        scale * m as f64
                    } else {
                        scale * (m as f64 - n[a] as f64)
                    }
                })
                .collect()
        });
        Spectrum { n, k }
    }

    fn forward(&self, f: &ScalarField) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    fn inverse(&self, mut data: Vec<Complex64>, grid: &Grid) -> Result<ScalarField> {
        self.transform(&mut data, true);
        let scale = 1.0 / (self.n[0] * self.n[1]) as f64;
        ScalarField::new(grid.clone(), data.into_iter().map(|c| c.re * scale).collect())
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let [n0, n1] = self.n;
        let mut planner = FftPlanner::new();
        let (f0, f1) = if inverse {
            (planner.plan_fft_inverse(n0), planner.plan_fft_inverse(n1))
        } else {
            (planner.plan_fft_forward(n0), planner.plan_fft_forward(n1))
        };
        // axis 1 is contiguous
        f1.process(data);
        let mut col = vec![Complex64::new(0.0, 0.0); n0];
        for j in 0..n1 {
            for i in 0..n0 {
                col[i] = data[i * n1 + j];
            }
            f0.process(&mut col);
            for i in 0..n0 {
                data[i * n1 + j] = col[i];
            }
        }
    }
}

/// `u = grad_part + divfree_part + mean`, with the zero mode kept apart.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub grad_part: PeriodicField2D,
    pub divfree_part: PeriodicField2D,
    pub mean: [f64; 2],
}

impl Decomposition {
    /// `‖grad + divfree + mean − u‖∞`.
    pub fn recombination_error(&self, u: &PeriodicField2D) -> Result<f64> {
        let s = self.grad_part.add(&self.divfree_part)?;
        let mut err = 0.0f64;
        for i in 0..2 {
            for (a, b) in s.component(i).values().iter().zip(u.component(i).values()) {
                err = err.max((a + self.mean[i] - b).abs());
            }
        }
        Ok(err)
    }

    /// Grid-averaged L² inner product of the two parts.
    pub fn orthogonality(&self) -> Result<f64> {
        self.grad_part.inner(&self.divfree_part)
    }
}

/// Splits `û(k)` into `k(k·û)/|k|²` and the remainder.
pub fn helmholtz_decompose(u: &PeriodicField2D) -> Result<Decomposition> {
    let grid = u.grid();
    check_periodic(grid)?;
    let sp = Spectrum::new(grid);
    let hat = [sp.forward(u.component(0)), sp.forward(u.component(1))];
    let total = (sp.n[0] * sp.n[1]) as f64;
    let mean = [hat[0][0].re / total, hat[1][0].re / total];
    let zero = Complex64::new(0.0, 0.0);
    let mut grad = [vec![zero; hat[0].len()], vec![zero; hat[0].len()]];
    let mut divfree = grad.clone();
    for i in 0..sp.n[0] {
        for j in 0..sp.n[1] {
            let idx = i * sp.n[1] + j;
            let (kx, ky) = (sp.k[0][i], sp.k[1][j]);
            let k2 = kx * kx + ky * ky;
            let (a, b) = (hat[0][idx], hat[1][idx]);
            if idx == 0 {
                continue;
            }
            if k2 == 0.0 {
                // Nyquist-only modes carry no resolvable direction; keep them divergence-free
                divfree[0][idx] = a;
                divfree[1][idx] = b;
                continue;
            }
            let dot = (a * kx + b * ky) / k2;
            grad[0][idx] = dot * kx;
            grad[1][idx] = dot * ky;
            divfree[0][idx] = a - grad[0][idx];
            divfree[1][idx] = b - grad[1][idx];
        }
    }
    let [g0, g1] = grad;
    let [d0, d1] = divfree;
    Ok(Decomposition {
        grad_part: PeriodicField2D::new(vec![sp.inverse(g0, grid)?, sp.inverse(g1, grid)?])?,
        divfree_part: PeriodicField2D::new(vec![sp.inverse(d0, grid)?, sp.inverse(d1, grid)?])?,
        mean,
    })
}

/// Leray projection: the divergence-free part plus the mean flow.
pub fn leray_project(u: &PeriodicField2D) -> Result<PeriodicField2D> {
    let d = helmholtz_decompose(u)?;
    PeriodicField2D::new(vec![
        d.divfree_part.component(0).map(|v| v + d.mean[0])?,
        d.divfree_part.component(1).map(|v| v + d.mean[1])?,
    ])
}

/// Projection onto gradients (zero mean).
pub fn gradient_project(u: &PeriodicField2D) -> Result<PeriodicField2D> {
    Ok(helmholtz_decompose(u)?.grad_part)
}

/// `∂_x u1 + ∂_y u2` computed spectrally.
pub fn spectral_divergence(u: &PeriodicField2D) -> Result<ScalarField> {
    let grid = u.grid();
    let sp = Spectrum::new(grid);
    let mut a = sp.forward(u.component(0));
    let b = sp.forward(u.component(1));
    for i in 0..sp.n[0] {
        for j in 0..sp.n[1] {
            let idx = i * sp.n[1] + j;
            a[idx] = Complex64::new(0.0, sp.k[0][i]) * a[idx] + Complex64::new(0.0, sp.k[1][j]) * b[idx];
        }
    }
    sp.inverse(a, grid)
}

/// `u1_x Δu1_y + u2_x Δu2_y − u1_y Δu1_x − u2_y Δu2_x`, which vanishes for
/// every planar Allen–Cahn solution.
pub fn cross_identity_residual(u1: &dyn Differentiable, u2: &dyn Differentiable) -> Result<ResidualReport> {
    let derivs = vec![unit(0, 1), unit(1, 1), unit(0, 3), vec![1, 2], vec![2, 1], unit(1, 3)];
    let h = u1.grid().h_max();
    let a = u1.partials(&derivs)?;
    let b = u2.partials(&derivs)?;
    let n = u1.grid().len();
    let vals: Vec<f64> = (0..n)
        .map(|k| {
            let term = |p: &[ScalarField]| {
                let v = |i: usize| p[i].values()[k];
                let lap_y = v(4) + v(5);
                let lap_x = v(2) + v(3);
                v(0) * lap_y - v(1) * lap_x
            };
            term(&a) + term(&b)
        })
        .collect();
    Ok(ResidualReport::from_values("cross_identity", &vals, h))
}

/// `(s_xx − s_yy) Δs_xy − s_xy Δ(s_xx − s_yy)`.
pub fn projection_equation_residual(s: &dyn Differentiable, name: &str) -> Result<ResidualReport> {
    let derivs = vec![
        unit(0, 2),
        unit(1, 2),
        mixed(0, 1),
        vec![3, 1],
        vec![1, 3],
        unit(0, 4),
        unit(1, 4),
    ];
    let p = s.partials(&derivs)?;
    let h = s.grid().h_max();
    let vals: Vec<f64> = (0..s.grid().len())
        .map(|k| {
            let v = |i: usize| p[i].values()[k];
            (v(0) - v(1)) * (v(3) + v(4)) - v(2) * (v(5) - v(6))
        })
        .collect();
    Ok(ResidualReport::from_values(name, &vals, h))
}

/// Residual of the fourth-order equation for the gradient projection `∇φ`.
pub fn gradient_projection_check(phi: &ClosedForm, grid: &Grid) -> Result<ResidualReport> {
    projection_equation_residual(&Analytic::new(phi.clone(), grid.clone()), "gradient_projection")
}

/// `σ = A(x) + B(y)` (`c2 = 0`) or `σ = F(cx + y) + G(x − cy)` (`c2 ≠ 0`).
/// Profiles are closed forms in one variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SigmaFamilySpec {
    pub c1: f64,
    pub c2: f64,
    #[serde(rename = "F")]
    pub f: ClosedForm,
    #[serde(rename = "G")]
    pub g: ClosedForm,
}

/// Output of [`sigma_family`].
#[derive(Debug, Clone)]
pub struct SigmaFamily {
    pub c: Option<f64>,
    pub sigma: ScalarField,
    /// `v = (−σ_y, σ_x)`.
    pub v: VectorField,
    /// `c1 σ_xy − c2 (σ_xx − σ_yy)`.
    pub linear: ResidualReport,
    /// The fourth-order equation for `σ`.
    pub full: ResidualReport,
    /// `v` against the explicit projected form.
    pub printed_form: ResidualReport,
}

impl SigmaFamilySpec {
    /// Two-profile family; requires `c2 ≠ 0`.
    pub fn rotated(c1: f64, c2: f64, f: ClosedForm, g: ClosedForm) -> Result<SigmaFamilySpec> {
        if c2 == 0.0 {
            return Err(Error::InvalidParameter(
                "c2 = 0 has no root c; use the separable family A(x) + B(y)".into(),
            ));
        }
        Ok(SigmaFamilySpec { c1, c2, f, g })
    }

    /// `σ = A(x) + B(y)` for any `c1` with `c2 = 0`.
    pub fn separable(c1: f64, a: ClosedForm, b: ClosedForm) -> SigmaFamilySpec {
        SigmaFamilySpec {
            c1,
            c2: 0.0,
            f: a,
            g: b,
        }
    }

    /// Root of `c2 c² − c1 c − c2 = 0` used by the rotated family.
    pub fn c(&self) -> Option<f64> {
        (self.c2 != 0.0).then(|| (self.c1 + (self.c1 * self.c1 + 4.0 * self.c2 * self.c2).sqrt()) / (2.0 * self.c2))
    }

    pub fn sigma(&self) -> ClosedForm {
        match self.c() {
            None => self.f.compose(&[ClosedForm::var(0)]) + self.g.compose(&[ClosedForm::var(1)]),
            Some(c) => {
                self.f.compose(&[ClosedForm::affine(&[c, 1.0], 0.0)])
                    + self.g.compose(&[ClosedForm::affine(&[1.0, -c], 0.0)])
            }
        }
    }

    /// Explicit projected velocity with `f = F′`, `g = G′`. In the separable
    /// case this is `(b(y), a(x))` with `a = A′` and `b = −B′`.
    pub fn printed_v(&self) -> [ClosedForm; 2] {
        let (fp, gp) = (self.f.derivative(0), self.g.derivative(0));
        match self.c() {
            None => [-gp.compose(&[ClosedForm::var(1)]), fp.compose(&[ClosedForm::var(0)])],
            Some(c) => {
                let f = fp.compose(&[ClosedForm::affine(&[c, 1.0], 0.0)]);
                let g = gp.compose(&[ClosedForm::affine(&[1.0, -c], 0.0)]);
                [c * &g - &f, g + c * f]
            }
        }
    }
}

pub fn sigma_family(spec: &SigmaFamilySpec, grid: &Grid) -> Result<SigmaFamily> {
    if grid.dims() != 2 {
        return Err(Error::UnsupportedDimension {
            dims: grid.dims(),
            reason: "the stream-function family is planar".into(),
        });
    }
    let sigma = spec.sigma();
    let an = Analytic::new(sigma.clone(), grid.clone());
    let p = an.partials(&[vec![], unit(0, 1), unit(1, 1), unit(0, 2), unit(1, 2), mixed(0, 1)])?;
    let h = grid.h_max();
    let linear: Vec<f64> = (0..grid.len())
        .map(|k| spec.c1 * p[5].values()[k] - spec.c2 * (p[3].values()[k] - p[4].values()[k]))
        .collect();
    let v = VectorField::new(vec![p[2].scale(-1.0), p[1].clone()])?;
    let printed = spec.printed_v();
    let mut mismatch = vec![0.0f64; grid.len()];
    for (i, e) in printed.iter().enumerate() {
        let pv = Analytic::new(e.clone(), grid.clone()).values()?;
        for (k, m) in mismatch.iter_mut().enumerate() {
            *m = (*m).max((pv.values()[k] - v.component(i).values()[k]).abs());
        }
    }
    Ok(SigmaFamily {
        c: spec.c(),
        sigma: p[0].clone(),
        full: projection_equation_residual(&an, "sigma_fourth_order")?,
        linear: ResidualReport::from_values("sigma_linear", &linear, h),
        printed_form: ResidualReport::from_values("projected_form", &mismatch, h),
        v,
    })
}

/// Writes a periodic scalar field: little-endian `u64 n_x, n_y`, `f64 lo_x,
/// lo_y, hi_x, hi_y`, then the values in row-major order.
pub fn write_dump<W: Write>(mut w: W, f: &ScalarField) -> Result<()> {
    let g = f.grid();
    check_periodic(g)?;
    for a in 0..2 {
        w.write_all(&(g.n(a) as u64).to_le_bytes())?;
    }
    for v in [g.lo(0), g.lo(1), g.hi(0), g.hi(1)]
        .into_iter()
        .chain(f.values().iter().copied())
    {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_dump<R: Read>(mut r: R) -> Result<ScalarField> {
    let mut b8 = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut b8)?;
        Ok(b8)
    };
    let nx = u64::from_le_bytes(next(&mut r)?) as usize;
    let ny = u64::from_le_bytes(next(&mut r)?) as usize;
    let mut hdr = [0.0; 4];
    for h in &mut hdr {
        *h = f64::from_le_bytes(next(&mut r)?);
    }
    let grid = Grid::new(&[nx, ny], &hdr[..2], &hdr[2..], &[true, true])?;
    check_periodic(&grid)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        values.push(f64::from_le_bytes(next(&mut r)?));
    }
    ScalarField::new(grid, values)
}

pub fn save_dump(path: &Path, f: &ScalarField) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_dump(file, f)
}

pub fn load_dump(path: &Path) -> Result<ScalarField> {
    read_dump(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Sampled;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, SQRT_2};

    fn x() -> ClosedForm {
        ClosedForm::var(0)
    }
    fn y() -> ClosedForm {
        ClosedForm::var(1)
    }

    fn box_grid(n: usize) -> Grid {
        Grid::new(&[n, n], &[0.0, 0.0], &[2.0 * PI, 2.0 * PI], &[true, true]).unwrap()
    }

    /// Random trigonometric field with wavenumbers up to `kmax`.
    fn band_limited(rng: &mut ChaCha8Rng, grid: &Grid, kmax: i32) -> PeriodicField2D {
        let mut comps = Vec::new();
        for _ in 0..2 {
            let mut terms = Vec::new();
            for kx in -kmax..=kmax {
                for ky in 0..=kmax {
                    terms.push((
                        kx as f64,
                        ky as f64,
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(0.0..2.0 * PI),
                    ));
                }
            }
            comps.push(
                ScalarField::from_fn(grid, |p| {
                    terms
                        .iter()
                        .map(|(a, b, c, ph)| c * (a * p[0] + b * p[1] + ph).cos())
                        .sum()
                })
                .unwrap(),
            );
        }
        PeriodicField2D::new(comps).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        let g = Grid::cube(2, 16, 0.0, 1.0).unwrap();
        let f = ScalarField::zeros(&g);
        assert!(matches!(
            PeriodicField2D::new(vec![f.clone(), f]),
            Err(Error::NotPeriodic(0))
        ));
        let g = Grid::new(&[12, 16], &[0.0; 2], &[1.0; 2], &[true; 2]).unwrap();
        let f = ScalarField::zeros(&g);
        assert!(matches!(
            PeriodicField2D::new(vec![f.clone(), f]),
            Err(Error::NotPowerOfTwo { axis: 0, .. })
        ));
    }

    #[test]
    fn pure_gradient_and_pure_curl() {
        let g = box_grid(32);
        let phi = x().sin() * y().sin();
        let u = PeriodicField2D::from_closed_forms(&phi.derivative(0), &phi.derivative(1), &g).unwrap();
        let d = helmholtz_decompose(&u).unwrap();
        assert!(d.divfree_part.linf() <= 1e-12);
        assert!(d.grad_part.sub(&u).unwrap().linf() <= 1e-12);
        let p = leray_project(&u).unwrap();
        assert!(p.linf() <= 1e-12);

        let w = PeriodicField2D::from_closed_forms(&-y().cos(), &ClosedForm::zero(), &g).unwrap();
        let d = helmholtz_decompose(&w).unwrap();
        assert!(d.grad_part.linf() <= 1e-12);
        assert!(leray_project(&w).unwrap().sub(&w).unwrap().linf() <= 1e-12);
    }

    #[test]
    fn mean_flow_survives_projection() {
        let g = box_grid(16);
        let u = PeriodicField2D::from_closed_forms(&(1.5 + x().sin()), &ClosedForm::constant(-0.5), &g).unwrap();
        let d = helmholtz_decompose(&u).unwrap();
        assert!((d.mean[0] - 1.5).abs() < 1e-14 && (d.mean[1] + 0.5).abs() < 1e-14);
        let p = leray_project(&u).unwrap();
        assert!(p.component(0).values().iter().all(|v| (v - 1.5).abs() < 1e-12));
    }

    #[test]
    fn random_fields_decompose_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = Grid::new(&[32, 64], &[0.0, -1.0], &[2.0 * PI, 3.0], &[true, true]).unwrap();
        for _ in 0..20 {
            let u = band_limited(&mut rng, &g, 5);
            let d = helmholtz_decompose(&u).unwrap();
            assert!(d.recombination_error(&u).unwrap() <= 1e-12);
            assert!(d.orthogonality().unwrap().abs() <= 1e-12);
            let p = leray_project(&u).unwrap();
            assert!(spectral_divergence(&p).unwrap().linf() <= 1e-10);
            let pp = leray_project(&p).unwrap();
            assert!(pp.sub(&p).unwrap().linf() <= 1e-12);
        }
    }

    #[test]
    fn nyquist_modes_stay_real_and_exact() {
        let g = box_grid(8);
        let u = PeriodicField2D::from_closed_forms(&(4.0 * x()).cos(), &((4.0 * x()).cos() * y().sin()), &g).unwrap();
        let d = helmholtz_decompose(&u).unwrap();
        assert!(d.recombination_error(&u).unwrap() <= 1e-12);
        assert!(spectral_divergence(&leray_project(&u).unwrap()).unwrap().linf() <= 1e-10);
    }

    #[test]
    fn cross_identity_cases() {
        let g = Grid::cube(2, 17, -1.0, 1.0).unwrap();
        let a = ((x() + y()) / SQRT_2).cosh();
        let b = ((x() - y()) / SQRT_2).sin();
        let (u1, u2) = (&a + &b, a - b);
        let r = cross_identity_residual(
            &Analytic::new(u1.clone(), g.clone()),
            &Analytic::new(u2.clone(), g.clone()),
        )
        .unwrap();
        assert!(r.is_analytic_zero(), "{}", r.linf);
        let r = cross_identity_residual(
            &Analytic::new(x().pow(2.0), g.clone()),
            &Analytic::new(y().pow(2.0), g.clone()),
        )
        .unwrap();
        assert_eq!(r.linf, 0.0);
        let c = Analytic::new(ClosedForm::constant(3.0), g.clone());
        assert_eq!(cross_identity_residual(&c, &c).unwrap().linf, 0.0);
        // generic fields break it
        let r = cross_identity_residual(&Analytic::new(x().pow(2.0) * y().pow(2.0), g.clone()), &c).unwrap();
        assert!(r.linf > 1.0);
        let fine = Grid::cube(2, 65, -1.0, 1.0).unwrap();
        let s1 = Sampled::new(Analytic::new(u1, fine.clone()).values().unwrap(), 4);
        let s2 = Sampled::new(Analytic::new(u2, fine).values().unwrap(), 4);
        assert!(cross_identity_residual(&s1, &s2).unwrap().linf < 1e-3);
    }

    #[test]
    fn sigma_family_rotated() {
        let g = Grid::cube(2, 17, -1.0, 1.0).unwrap();
        let s = SigmaFamilySpec::rotated(0.0, 1.0, x().tanh(), x().sin()).unwrap();
        assert_eq!(s.c(), Some(1.0));
        let r = sigma_family(&s, &g).unwrap();
        assert!(r.linear.is_analytic_zero() && r.full.is_analytic_zero());
        assert!(r.printed_form.linf <= 1e-12);

        let s = SigmaFamilySpec::rotated(1.3, -0.7, (0.5 * x()).cosh(), x().sin() * x()).unwrap();
        let c = s.c().unwrap();
        assert!((s.c2 * c * c - s.c1 * c - s.c2).abs() <= 1e-12);
        let r = sigma_family(&s, &g).unwrap();
        assert!(
            r.linear.linf <= 1e-10 && r.full.linf <= 1e-10,
            "{} {}",
            r.linear.linf,
            r.full.linf
        );
        assert!(r.printed_form.linf <= 1e-12);
        assert!(SigmaFamilySpec::rotated(1.0, 0.0, x(), x()).is_err());
    }

    #[test]
    fn sigma_family_separable_and_negative_control() {
        let g = Grid::cube(2, 17, -1.0, 1.0).unwrap();
        let s = SigmaFamilySpec::separable(2.0, x().sin(), y().pow(3.0).compose(&[x(), x()]));
        let r = sigma_family(&s, &g).unwrap();
        assert_eq!(r.linear.linf, 0.0);
        assert_eq!(r.full.linf, 0.0);
        assert!(r.printed_form.linf <= 1e-15);
        // b(y) = −B′(y) = −3y², a(x) = cos x
        let k = g.ravel(&[3, 11]);
        let (px, py) = (g.point(k)[0], g.point(k)[1]);
        assert!((r.v.component(0).values()[k] + 3.0 * py * py).abs() < 1e-14);
        assert!((r.v.component(1).values()[k] - px.cos()).abs() < 1e-14);

        let bad = SigmaFamilySpec {
            c1: 1.0,
            c2: 2.0,
            f: ClosedForm::zero(),
            g: ClosedForm::zero(),
        };
        let sigma = x().pow(2.0) * y();
        let an = Analytic::new(sigma, g.clone());
        let p = an.partials(&[mixed(0, 1), unit(0, 2), unit(1, 2)]).unwrap();
        let lin: f64 = (0..g.len())
            .map(|k| (bad.c1 * p[0].values()[k] - bad.c2 * (p[1].values()[k] - p[2].values()[k])).abs())
            .fold(0.0, f64::max);
        assert!(lin > 1.0);
    }

    #[test]
    fn projected_sigma_family_is_recovered() {
        let g = box_grid(32);
        let s = SigmaFamilySpec::rotated(0.0, 1.0, x().sin(), (2.0 * x()).cos()).unwrap();
        let fam = sigma_family(&s, &g).unwrap();
        let phi = (x() + y()).cos() * x().sin();
        let gp = [
            Analytic::new(phi.derivative(0), g.clone()).values().unwrap(),
            Analytic::new(phi.derivative(1), g.clone()).values().unwrap(),
        ];
        let u = PeriodicField2D::new(vec![
            gp[0].add(fam.v.component(0)).unwrap(),
            gp[1].add(fam.v.component(1)).unwrap(),
        ])
        .unwrap();
        let v = PeriodicField2D::new(fam.v.components().to_vec()).unwrap();
        assert!(leray_project(&u).unwrap().sub(&v).unwrap().linf() <= 1e-12);
        let grad = gradient_project(&u).unwrap();
        assert!((grad.component(0).sub(&gp[0]).unwrap().linf()) <= 1e-12);
    }

    #[test]
    fn gradient_projection_cases() {
        let g = Grid::cube(2, 17, -1.0, 1.0).unwrap();
        let phi = (x() + y()).tanh() + (x() - y()).sin();
        assert!(gradient_projection_check(&phi, &g).unwrap().is_analytic_zero());
        assert_eq!(
            gradient_projection_check(&(x() * x() - 3.0 * x() * y()), &g)
                .unwrap()
                .linf,
            0.0
        );
        // φ = x⁴: φ_xy ≡ 0 and Δφ_xy ≡ 0
        assert_eq!(gradient_projection_check(&x().pow(4.0), &g).unwrap().linf, 0.0);
        // φ = x³y: residual = 6xy · 6 = 36xy
        let r = gradient_projection_check(&(x().pow(3.0) * y()), &g).unwrap();
        assert!((r.linf - 36.0).abs() < 1e-12);
    }

    #[test]
    fn dump_round_trip() {
        let g = Grid::new(&[8, 4], &[0.0, -1.0], &[2.0, 1.0], &[true, true]).unwrap();
        let f = ScalarField::from_fn(&g, |p| p[0] * 10.0 + p[1]).unwrap();
        let mut buf = Vec::new();
        write_dump(&mut buf, &f).unwrap();
        assert_eq!(buf.len(), 16 + 32 + 8 * 32);
        assert_eq!(&buf[..8], &8u64.to_le_bytes());
        let back = read_dump(buf.as_slice()).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(back.grid(), f.grid());
        assert!(read_dump(&buf[..40]).is_err());
    }
}
