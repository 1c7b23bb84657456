//! Planar vector Allen–Cahn systems `Δu = W_u(u)` for `u: ℝ² → ℝ²`.
//!
//! Covers system and equipartition residuals, the ratio field
//! `v = (u1_x/u1_y, u2_x/u2_y)` with `det ∇v`, functional-dependence
//! witnesses `h(v1, v2) = 0`, and a catalog of explicit solutions.

use serde::{Deserialize, Serialize};

use crate::expr::{eval_points, ClosedForm, Program};
use crate::fields::{unit, Analytic, Differentiable, Grid, ResidualReport, ScalarField};
use crate::{Error, Result};

/// Denominators of the ratio field must stay above this in absolute value.
pub const DENOMINATOR_FLOOR: f64 = 1e-8;
/// Ray parameters used for far-field limits.
pub const RAY_POINTS: [f64; 3] = [10.0, 20.0, 40.0];

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PotentialKind {
    Product,
    Fourwell,
    Circle,
    Radial,
    Custom,
}

/// Potential `W(u1, u2)` with its gradient.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Potential2D {
    pub kind: PotentialKind,
    pub w: ClosedForm,
    pub grad: [ClosedForm; 2],
}

impl Potential2D {
    /// Gradient taken symbolically.
    pub fn new(kind: PotentialKind, w: ClosedForm) -> Potential2D {
        let grad = [w.derivative(0), w.derivative(1)];
        Potential2D { kind, w, grad }
    }

    pub fn custom(w: ClosedForm) -> Potential2D {
        Potential2D::new(PotentialKind::Custom, w)
    }

    /// `W = u1 u2`.
    pub fn product() -> Potential2D {
        Potential2D::new(PotentialKind::Product, ClosedForm::var(0) * ClosedForm::var(1))
    }

    /// `W = ([(u1+u2)² − 8]² + [(u1−u2)² − 8]²) / 256`, zero at `(±2√2, 0)`, `(0, ±2√2)`.
    pub fn fourwell() -> Potential2D {
        let p = ClosedForm::affine(&[1.0, 1.0], 0.0);
        let m = ClosedForm::affine(&[1.0, -1.0], 0.0);
        let w = ((p.pow(2.0) - 8.0).pow(2.0) + (m.pow(2.0) - 8.0).pow(2.0)) / 256.0;
        Potential2D::new(PotentialKind::Fourwell, w)
    }

    /// `W = u1² + u2² − 1`.
    pub fn circle() -> Potential2D {
        Potential2D::new(
            PotentialKind::Circle,
            ClosedForm::var(0).pow(2.0) + ClosedForm::var(1).pow(2.0) - 1.0,
        )
    }

    /// `W = w(u1² + u2²)` for a one-variable profile `w`.
    pub fn radial(w: &ClosedForm) -> Potential2D {
        let r2 = ClosedForm::var(0).pow(2.0) + ClosedForm::var(1).pow(2.0);
        Potential2D::new(PotentialKind::Radial, w.compose(&[r2]))
    }

    pub fn by_name(name: &str) -> Option<Potential2D> {
        match name {
            "PRODUCT" => Some(Self::product()),
            "FOURWELL" => Some(Self::fourwell()),
            "CIRCLE" => Some(Self::circle()),
            "RADIAL" => Some(Self::radial(&((1.0 - ClosedForm::var(0)) / 2.0))),
            _ => None,
        }
    }

    /// `max |grad_i − ∂_i W|` over the given points; zero when built by [`Potential2D::new`].
    pub fn wiring_error(&self, points: &[[f64; 2]]) -> Result<f64> {
        let d = [self.w.derivative(0), self.w.derivative(1)];
        let diffs = [&self.grad[0] - &d[0], &self.grad[1] - &d[1]];
        let prog = Program::compile(&[&diffs[0], &diffs[1]]);
        let vals = eval_points(&prog, points.len(), 2, |i, p| p.copy_from_slice(&points[i]))?;
        Ok(vals.iter().fold(0.0, |m, v| m.max(v.abs())))
    }

    /// `(W, W_u1, W_u2)` at each pair of values.
    fn eval_at(&self, u1: &[f64], u2: &[f64]) -> Result<Vec<[f64; 3]>> {
        let prog = Program::compile(&[&self.w, &self.grad[0], &self.grad[1]]);
        let flat = eval_points(&prog, u1.len(), 2, |i, p| {
            p[0] = u1[i];
            p[1] = u2[i];
        })?;
        Ok(flat.chunks(3).map(|c| [c[0], c[1], c[2]]).collect())
    }
}

/// Closed-form pair `u = (u1, u2)` on the plane.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemSolution {
    pub u: [ClosedForm; 2],
    /// Catalog id or `"custom"`.
    pub source: String,
}

impl SystemSolution {
    pub fn new(u1: ClosedForm, u2: ClosedForm, source: impl Into<String>) -> SystemSolution {
        SystemSolution {
            u: [u1, u2],
            source: source.into(),
        }
    }

    pub fn analytic(&self, grid: &Grid) -> [Analytic; 2] {
        [
            Analytic::new(self.u[0].clone(), grid.clone()),
            Analytic::new(self.u[1].clone(), grid.clone()),
        ]
    }
}

fn check_planar(grid: &Grid) -> Result<()> {
    if grid.dims() != 2 {
        return Err(Error::UnsupportedDimension {
            dims: grid.dims(),
            reason: "the vector Allen–Cahn routines are planar".into(),
        });
    }
    Ok(())
}

/// `max_i ‖Δu_i − W_{u_i}(u)‖`.
pub fn system_residual_of(u: [&dyn Differentiable; 2], w: &Potential2D) -> Result<ResidualReport> {
    check_planar(u[0].grid())?;
    let derivs = [vec![], unit(0, 2), unit(1, 2)];
    let a = u[0].partials(&derivs)?;
    let b = u[1].partials(&derivs)?;
    let wv = w.eval_at(a[0].values(), b[0].values())?;
    let h = u[0].grid().h_max();
    let parts: Vec<ResidualReport> = [&a, &b]
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let vals: Vec<f64> = (0..wv.len())
                .map(|k| p[1].values()[k] + p[2].values()[k] - wv[k][1 + i])
                .collect();
            ResidualReport::from_values(format!("system_u{}", i + 1), &vals, h)
        })
        .collect();
    Ok(ResidualReport::combine("system", &parts))
}

pub fn system_residual(u: &SystemSolution, w: &Potential2D, grid: &Grid) -> Result<ResidualReport> {
    let [a, b] = u.analytic(grid);
    system_residual_of([&a, &b], w)
}

/// `‖½(|∇u1|² + |∇u2|²) − W(u)‖`.
pub fn equipartition_residual_vec_of(u: [&dyn Differentiable; 2], w: &Potential2D) -> Result<ResidualReport> {
    check_planar(u[0].grid())?;
    let derivs = [vec![], unit(0, 1), unit(1, 1)];
    let a = u[0].partials(&derivs)?;
    let b = u[1].partials(&derivs)?;
    let wv = w.eval_at(a[0].values(), b[0].values())?;
    let vals: Vec<f64> = (0..wv.len())
        .map(|k| {
            let g2 = a[1].values()[k].powi(2)
                + a[2].values()[k].powi(2)
                + b[1].values()[k].powi(2)
                + b[2].values()[k].powi(2);
            0.5 * g2 - wv[k][0]
        })
        .collect();
    Ok(ResidualReport::from_values("equipartition", &vals, u[0].grid().h_max()))
}

pub fn equipartition_residual_vec(u: &SystemSolution, w: &Potential2D, grid: &Grid) -> Result<ResidualReport> {
    let [a, b] = u.analytic(grid);
    equipartition_residual_vec_of([&a, &b], w)
}

/// Ratio field `v = (u1_x/u1_y, u2_x/u2_y)` and witness data.
#[derive(Debug, Clone)]
pub struct RatioPair {
    pub v: [ClosedForm; 2],
    pub values: [ScalarField; 2],
    /// Smallest `|u_i,y|` on the grid.
    pub min_denominator: f64,
}

#[derive(Debug, Clone)]
pub struct RatioReport {
    pub ratio: RatioPair,
    /// `v1_x v2_y − v1_y v2_x`.
    pub det_field: ScalarField,
    pub det: ResidualReport,
    /// `u1_y² v1_x + u2_y² v2_x` and `u1_y² v1_y + u2_y² v2_y`.
    pub proof_chain: [ResidualReport; 2],
}

fn check_denominators(grid: &Grid, fields: &[ScalarField], names: &[&str]) -> Result<f64> {
    let mut min = f64::INFINITY;
    for (f, name) in fields.iter().zip(names) {
        for (k, v) in f.values().iter().enumerate() {
            if v.abs() < DENOMINATOR_FLOOR {
                return Err(Error::SmallDenominator {
                    name: (*name).into(),
                    value: *v,
                    point: grid.point(k),
                });
            }
            min = min.min(v.abs());
        }
    }
    Ok(min)
}

pub fn ratio_and_detgrad(u: &SystemSolution, grid: &Grid) -> Result<RatioReport> {
    check_planar(grid)?;
    let uy = [u.u[0].derivative(1), u.u[1].derivative(1)];
    let uy_vals = [
        Analytic::new(uy[0].clone(), grid.clone()).values()?,
        Analytic::new(uy[1].clone(), grid.clone()).values()?,
    ];
    let min_denominator = check_denominators(grid, &uy_vals, &["u1_y", "u2_y"])?;
    let v = [u.u[0].derivative(0) / &uy[0], u.u[1].derivative(0) / &uy[1]];
    let d: Vec<Vec<ScalarField>> = v
        .iter()
        .map(|vi| Analytic::new(vi.clone(), grid.clone()).partials(&[vec![], unit(0, 1), unit(1, 1)]))
        .collect::<Result<_>>()?;
    let h = grid.h_max();
    let n = grid.len();
    let at = |f: &ScalarField, k: usize| f.values()[k];
    let det: Vec<f64> = (0..n)
        .map(|k| at(&d[0][1], k) * at(&d[1][2], k) - at(&d[0][2], k) * at(&d[1][1], k))
        .collect();
    let chain = |axis: usize| -> Vec<f64> {
        (0..n)
            .map(|k| {
                at(&uy_vals[0], k).powi(2) * at(&d[0][1 + axis], k)
                    + at(&uy_vals[1], k).powi(2) * at(&d[1][1 + axis], k)
            })
            .collect()
    };
    Ok(RatioReport {
        det: ResidualReport::from_values("det_grad_v", &det, h),
        det_field: ScalarField::new(grid.clone(), det)?,
        proof_chain: [
            ResidualReport::from_values("weighted_v_x", &chain(0), h),
            ResidualReport::from_values("weighted_v_y", &chain(1), h),
        ],
        ratio: RatioPair {
            values: [d[0][0].clone(), d[1][0].clone()],
            v,
            min_denominator,
        },
    })
}

/// `h(v1, v2)` and `u2_y² h_{v1}(v) − u1_y² h_{v2}(v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceReport {
    pub witness: ResidualReport,
    pub weights: ResidualReport,
}

pub fn dependence_check(u: &SystemSolution, h: &ClosedForm, grid: &Grid) -> Result<DependenceReport> {
    let ratio = ratio_and_detgrad(u, grid)?;
    let uy = [
        Analytic::new(u.u[0].derivative(1), grid.clone()).values()?,
        Analytic::new(u.u[1].derivative(1), grid.clone()).values()?,
    ];
    let (hs, ht) = (h.derivative(0), h.derivative(1));
    let prog = Program::compile(&[h, &hs, &ht]);
    let [v1, v2] = &ratio.ratio.values;
    let vals = eval_points(&prog, grid.len(), 2, |k, p| {
        p[0] = v1.values()[k];
        p[1] = v2.values()[k];
    })?;
    let hgrid = grid.h_max();
    let witness: Vec<f64> = vals.chunks(3).map(|c| c[0]).collect();
    let weights: Vec<f64> = vals
        .chunks(3)
        .enumerate()
        .map(|(k, c)| uy[1].values()[k].powi(2) * c[1] - uy[0].values()[k].powi(2) * c[2])
        .collect();
    Ok(DependenceReport {
        witness: ResidualReport::from_values("dependence_witness", &witness, hgrid),
        weights: ResidualReport::from_values("dependence_weights", &weights, hgrid),
    })
}

/// Outcome of the structure checks on a declared subdomain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureReport {
    pub source: String,
    pub subdomain: Grid,
    pub min_u_y: [f64; 2],
    pub system: ResidualReport,
    pub equipartition: ResidualReport,
    pub det: ResidualReport,
    pub proof_chain: [ResidualReport; 2],
}

/// Requires `u_i,y > 0` on `subdomain`, then reports the system,
/// equipartition, `det ∇v` and weighted-derivative identities.
pub fn structure_check(u: &SystemSolution, w: &Potential2D, subdomain: &Grid) -> Result<StructureReport> {
    check_planar(subdomain)?;
    let mut min_u_y = [0.0; 2];
    for (i, m) in min_u_y.iter_mut().enumerate() {
        let uy = Analytic::new(u.u[i].derivative(1), subdomain.clone()).values()?;
        let (k, v) = uy.argmin();
        if v <= DENOMINATOR_FLOOR {
            return Err(Error::Monotonicity {
                axis: 1,
                value: v,
                point: subdomain.point(k),
            });
        }
        *m = v;
    }
    let ratio = ratio_and_detgrad(u, subdomain)?;
    Ok(StructureReport {
        source: u.source.clone(),
        subdomain: subdomain.clone(),
        min_u_y,
        system: system_residual(u, w, subdomain)?,
        equipartition: equipartition_residual_vec(u, w, subdomain)?,
        det: ratio.det,
        proof_chain: ratio.proof_chain,
    })
}

/// `u = (f(x+y) + g(x−y), f(x+y) − g(x−y))`.
pub fn gradient_form(f: &ClosedForm, g: &ClosedForm) -> SystemSolution {
    let p = f.compose(&[ClosedForm::affine(&[1.0, 1.0], 0.0)]);
    let m = g.compose(&[ClosedForm::affine(&[1.0, -1.0], 0.0)]);
    SystemSolution::new(&p + &m, p - m, "gradient-form")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientFormReport {
    /// Fitted constant `c` in `2f′² + 2g′² = W(f+g, f−g) + c`.
    pub c: f64,
    /// Deviation about the fitted constant.
    pub first_integral: ResidualReport,
}

/// Builds the gradient-form field and fits the first-integral constant.
pub fn gradient_form_builder(
    f: &ClosedForm,
    g: &ClosedForm,
    w: &Potential2D,
    grid: &Grid,
) -> Result<(SystemSolution, GradientFormReport)> {
    check_planar(grid)?;
    let u = gradient_form(f, g);
    let s = ClosedForm::affine(&[1.0, 1.0], 0.0);
    let d = ClosedForm::affine(&[1.0, -1.0], 0.0);
    let lhs = 2.0 * f.derivative(0).compose(std::slice::from_ref(&s)).pow(2.0)
        + 2.0 * g.derivative(0).compose(std::slice::from_ref(&d)).pow(2.0);
    let disc = lhs - w.w.compose(&u.u);
    let vals = Analytic::new(disc, grid.clone()).values()?;
    let c = vals.values().iter().sum::<f64>() / vals.len() as f64;
    let centered: Vec<f64> = vals.values().iter().map(|v| v - c).collect();
    Ok((
        u,
        GradientFormReport {
            c,
            first_integral: ResidualReport::from_values("first_integral", &centered, grid.h_max()),
        },
    ))
}

/// Named explicit solutions with the potentials they solve.
pub const CATALOG: [&str; 9] = [
    "product-cosh-sin",
    "product-exp-trig",
    "fourwell-four-phase",
    "fourwell-tilted",
    "fourwell-four-phase-printed",
    "fourwell-tilted-printed",
    "circle-exp",
    "radial-rotation",
    "separable-planar",
];

/// Parameters for the parametric catalog entries. Each `(c, a, b)` term
/// contributes `c·e^{ax+by}` (or a trigonometric term) to the field.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CatalogParams {
    #[serde(default)]
    pub terms: Vec<[f64; 3]>,
    /// Phase shift for the radial rotation.
    #[serde(default)]
    pub phase: f64,
    /// Profile `w(r²)` for the radial potential.
    #[serde(default)]
    pub radial_w: Option<ClosedForm>,
    /// Slopes `(c1, c2)` for the separable planar pair.
    #[serde(default)]
    pub slopes: Option<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub solution: SystemSolution,
    pub potential: Potential2D,
}

fn plane_wave(c: f64, a: f64, b: f64) -> ClosedForm {
    c * ClosedForm::affine(&[a, b], 0.0).exp()
}

fn check_frequency(label: &str, a: f64, b: f64, target: f64) -> Result<()> {
    let v = a * a + b * b;
    if (v - target).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "{label}: a^2 + b^2 = {target} required, got {v}"
        )));
    }
    Ok(())
}

fn tanh_dir(a: f64, b: f64) -> ClosedForm {
    ClosedForm::affine(&[a, b], 0.0).tanh()
}

/// Builds a catalog entry and confirms it solves its system on a small box.
pub fn catalog_example(id: &str, params: &CatalogParams) -> Result<CatalogEntry> {
    let (solution, potential) = match id {
        "product-cosh-sin" => {
            let c = ClosedForm::affine(&[1.0 / SQRT2, 1.0 / SQRT2], 0.0).cosh();
            let s = ClosedForm::affine(&[1.0 / SQRT2, -1.0 / SQRT2], 0.0).sin();
            (SystemSolution::new(&c + &s, c - s, id), Potential2D::product())
        }
        "product-exp-trig" => {
            let terms = if params.terms.is_empty() {
                vec![[1.0, 0.6, 0.8], [-0.5, -1.0, 0.0], [0.7, 0.0, 1.0], [0.3, 0.8, -0.6]]
            } else {
                params.terms.clone()
            };
            if terms.len() != 4 {
                return Err(Error::InvalidParameter("product-exp-trig takes 4 terms".into()));
            }
            for [_, a, b] in &terms {
                check_frequency(id, *a, *b, 1.0)?;
            }
            let e =
                plane_wave(terms[0][0], terms[0][1], terms[0][2]) + plane_wave(terms[1][0], terms[1][1], terms[1][2]);
            let t = terms[2][0] * ClosedForm::affine(&[terms[2][1], terms[2][2]], 0.0).sin()
                + terms[3][0] * ClosedForm::affine(&[terms[3][1], terms[3][2]], 0.0).cos();
            (SystemSolution::new(&e + &t, e - t, id), Potential2D::product())
        }
        "fourwell-four-phase" => {
            let (p, m) = (tanh_dir(0.25, 0.25), tanh_dir(0.25, -0.25));
            (
                SystemSolution::new(SQRT2 * (&p + &m), SQRT2 * (p - m), id),
                Potential2D::fourwell(),
            )
        }
        "fourwell-four-phase-printed" => {
            let k = 1.0 / (2.0 * SQRT2);
            let (p, m) = (tanh_dir(k, k), tanh_dir(k, -k));
            (
                SystemSolution::new(SQRT2 * (&p + &m), SQRT2 * (p - m), id),
                Potential2D::fourwell(),
            )
        }
        "fourwell-tilted" => {
            let (p, m) = (tanh_dir(1.0 / (2.0 * SQRT2), 0.0), tanh_dir(0.25, 0.25));
            (
                SystemSolution::new(SQRT2 * (&p + &m), SQRT2 * (p - m), id),
                Potential2D::fourwell(),
            )
        }
        "fourwell-tilted-printed" => {
            let (p, m) = (tanh_dir(1.0, 0.0), tanh_dir(1.0 / SQRT2, 1.0 / SQRT2));
            (
                SystemSolution::new(SQRT2 * (&p + &m), SQRT2 * (p - m), id),
                Potential2D::fourwell(),
            )
        }
        "circle-exp" => {
            let terms = if params.terms.is_empty() {
                vec![
                    [1.0, 1.0, 1.0],
                    [0.5, -SQRT2, 0.0],
                    [0.25, 0.0, SQRT2],
                    [-0.3, 1.0, -1.0],
                ]
            } else {
                params.terms.clone()
            };
            if terms.len() != 4 {
                return Err(Error::InvalidParameter("circle-exp takes 4 terms".into()));
            }
            for [_, a, b] in &terms {
                check_frequency(id, *a, *b, 2.0)?;
            }
            let w = |i: usize| plane_wave(terms[i][0], terms[i][1], terms[i][2]);
            let (e, f) = (w(0) + w(1), w(2) + w(3));
            (SystemSolution::new(&e + &f, e - f, id), Potential2D::circle())
        }
        "radial-rotation" => {
            let w = params
                .radial_w
                .clone()
                .unwrap_or_else(|| (1.0 - ClosedForm::var(0)) / 2.0);
            let dw1 = w.derivative(0).eval(&[1.0])?;
            if dw1 >= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "radial-rotation: W'(1) < 0 required, got {dw1}"
                )));
            }
            let [_, a, b] = params.terms.first().copied().unwrap_or([0.0, 1.0, 0.0]);
            check_frequency(id, a, b, -2.0 * dw1)?;
            let arg = ClosedForm::affine(&[a, b], params.phase);
            (SystemSolution::new(arg.cos(), arg.sin(), id), Potential2D::radial(&w))
        }
        "separable-planar" => {
            // W = (1 − u1²)²/4 + (1 − u2²)²/4 with u_i = tanh((c_i x + y)/√(2(1 + c_i²)))
            let [c1, c2] = params.slopes.unwrap_or([0.5, -2.0]);
            let well = |i: usize| (1.0 - ClosedForm::var(i).pow(2.0)).pow(2.0) / 4.0;
            let prof = |c: f64| {
                let s = (2.0 * (1.0 + c * c)).sqrt();
                tanh_dir(c / s, 1.0 / s)
            };
            (
                SystemSolution::new(prof(c1), prof(c2), id),
                Potential2D::custom(well(0) + well(1)),
            )
        }
        _ => {
            return Err(Error::config(
                "example",
                format!("unknown catalog id `{id}`; known ids: {}", CATALOG.join(", ")),
            ))
        }
    };
    let check = Grid::cube(2, 9, -1.0, 1.0)?;
    let r = system_residual(&solution, &potential, &check)?;
    if !id.ends_with("-printed") && !r.is_analytic_zero() {
        return Err(Error::InvalidParameter(format!(
            "{id}: built field fails the system with residual {:e}",
            r.linf
        )));
    }
    Ok(CatalogEntry { solution, potential })
}

/// Extrapolates `a + b e^{−λs}` from samples at `s, 2s, 4s`.
pub fn tail_limit(f10: f64, f20: f64, f40: f64) -> f64 {
    let (d1, d2) = (f10 - f20, f20 - f40);
    if d1.abs() < 1e-14 || d2.abs() < 1e-15 {
        return f40;
    }
    let rho = d2 / d1;
    if !(rho > 0.0) {
        return f40;
    }
    let q = (-1.0 + (1.0 + 4.0 * rho).sqrt()) / 2.0;
    if !(q > 0.0 && q < 1.0) {
        return f40;
    }
    // f(10k) = a + b q^k for k = 1, 2, 4
    f40 - d1 * q.powi(3) / (1.0 - q)
}

/// One ray limit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RayLimit {
    /// `"x+"`, `"x-"`, `"y+"` or `"y-"`.
    pub direction: String,
    /// Transverse coordinate held fixed.
    pub fixed: f64,
    pub samples: Vec<[f64; 2]>,
    pub limit: [f64; 2],
    pub expected: [f64; 2],
    pub error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitReport {
    pub rays: Vec<RayLimit>,
    pub max_error: f64,
}

fn ray_limit<F>(u: &SystemSolution, direction: &str, fixed: f64, expected: F) -> Result<RayLimit>
where
    F: Fn(f64) -> [f64; 2],
{
    let sign = if direction.ends_with('-') { -1.0 } else { 1.0 };
    let along_x = direction.starts_with('x');
    let mut samples = Vec::with_capacity(3);
    for s in RAY_POINTS {
        let p = if along_x { [sign * s, fixed] } else { [fixed, sign * s] };
        samples.push([u.u[0].eval(&p)?, u.u[1].eval(&p)?]);
    }
    let limit = [0, 1].map(|i| tail_limit(samples[0][i], samples[1][i], samples[2][i]));
    let expected = expected(fixed);
    let error = (limit[0] - expected[0]).abs().max((limit[1] - expected[1]).abs());
    Ok(RayLimit {
        direction: direction.into(),
        fixed,
        samples,
        limit,
        expected,
        error,
    })
}

/// Ray limits of the four-phase field at transverse offsets `fixed`.
pub fn four_phase_limits(u: &SystemSolution, fixed: &[f64]) -> Result<LimitReport> {
    let r = 2.0 * SQRT2;
    let mut rays = Vec::new();
    for &c in fixed {
        rays.push(ray_limit(u, "x+", c, |_| [r, 0.0])?);
        rays.push(ray_limit(u, "x-", c, |_| [-r, 0.0])?);
        rays.push(ray_limit(u, "y+", c, |_| [0.0, r])?);
        rays.push(ray_limit(u, "y-", c, |_| [0.0, -r])?);
    }
    let max_error = rays.iter().fold(0.0f64, |m, r| m.max(r.error));
    Ok(LimitReport { rays, max_error })
}

/// Limits of the tilted field: `(±2√2, 0)` along `x`, and the heteroclinic
/// profile `√2(τ(x) ± 1, τ(x) ∓ 1)` along `y`, with `τ` the `x`-profile.
pub fn tilted_limits(u: &SystemSolution, profile: &ClosedForm, fixed: &[f64]) -> Result<LimitReport> {
    let r = 2.0 * SQRT2;
    let mut rays = Vec::new();
    for &c in fixed {
        let tau = profile.eval(&[c])?;
        rays.push(ray_limit(u, "x+", c, |_| [r, 0.0])?);
        rays.push(ray_limit(u, "x-", c, |_| [-r, 0.0])?);
        rays.push(ray_limit(u, "y+", c, |_| [SQRT2 * (tau + 1.0), SQRT2 * (tau - 1.0)])?);
        rays.push(ray_limit(u, "y-", c, |_| [SQRT2 * (tau - 1.0), SQRT2 * (tau + 1.0)])?);
    }
    let max_error = rays.iter().fold(0.0f64, |m, r| m.max(r.error));
    Ok(LimitReport { rays, max_error })
}

/// Zero set of the four-well potential and the reflection symmetry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FourwellCheck {
    pub max_w_at_wells: f64,
    pub max_grad_at_wells: f64,
    pub min_w_off_wells: f64,
    pub symmetry: f64,
}

pub fn fourwell_check(grid: &Grid) -> Result<FourwellCheck> {
    let w = Potential2D::fourwell();
    let r = 2.0 * SQRT2;
    let wells = [[r, 0.0], [-r, 0.0], [0.0, r], [0.0, -r]];
    let at = w.eval_at(&wells.map(|p| p[0]), &wells.map(|p| p[1]))?;
    let max_w_at_wells = at.iter().fold(0.0f64, |m, v| m.max(v[0].abs()));
    let max_grad_at_wells = at.iter().fold(0.0f64, |m, v| m.max(v[1].abs()).max(v[2].abs()));
    let pts: Vec<Vec<f64>> = (0..grid.len()).map(|k| grid.point(k)).collect();
    let mut min_w_off_wells = f64::INFINITY;
    let mut symmetry = 0.0f64;
    let xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p[1]).collect();
    let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
    let a = w.eval_at(&xs, &ys)?;
    let b = w.eval_at(&neg, &ys)?;
    for (k, p) in pts.iter().enumerate() {
        symmetry = symmetry.max((a[k][0] - b[k][0]).abs());
        if wells
            .iter()
            .all(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() > 0.5)
        {
            min_w_off_wells = min_w_off_wells.min(a[k][0]);
        }
    }
    Ok(FourwellCheck {
        max_w_at_wells,
        max_grad_at_wells,
        min_w_off_wells,
        symmetry,
    })
}
