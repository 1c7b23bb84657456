//! Navier–Stokes solutions built from one- and two-variable heat profiles.
//!
//! Every family has the form `u = α g(s, …, t) + const − A(t) α`, with `s`
//! linear in space and pressure `a(t)` times a linear function. Transport along
//! `s` is uniform, so the momentum equations collapse to an advected heat
//! equation for the profile `g`.
//!
//! * `NS2D`: `s = x − c1 y`, `u = (c1 g − c1 A + c2, g − A)`,
//!   `p = a(c1 x + y) + b`, `g_t + c2 g_s = μ(c1² + 1) g_ss`.
//! * `NS3D`: `s = x − (c2 y + c1 z)/(2c1c2)`, `η = (c2 y − c1 z)/(2c1c2)`,
//!   `u1 = g(s, η, t) − A`, `u2 = c1 u1 + c̃1`, `u3 = c2 u1 + c̃2`,
//!   `p = a(x + c1 y + c2 z) + b`.
//! * `NS3D_IVP`: `s = 2c1c2 x − c2 y − c1 z` with `c̃1c2 + c1c̃2 = 0`, and `g`
//!   the heat flow of initial data `H` with diffusivity
//!   `μ̃ = μ(4c1²c2² + c1² + c2²)`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::euler_family::{ConstraintCheck, ConstraintLog, CONSTRAINT_TOL};
use crate::expr::{eval_points, ClosedForm, Program};
use crate::fields::{Analytic, Differentiable, Grid, ResidualReport, Sampled, ScalarField, VectorField, ANALYTIC_ZERO};
use crate::flow::{EvalPath, Flow, FlowJet, FlowResidual};
use crate::quadrature::gauss_hermite;
use crate::{Error, Result};

/// Starting Gauss–Hermite order for the heat convolution.
pub const HEAT_NODES: usize = 64;
/// Upper bound on the Gauss–Hermite order.
pub const HEAT_MAX_NODES: usize = 1024;
/// Node doubling stops when successive values change by less than this.
pub const HEAT_TOL: f64 = 1e-10;
/// Tolerance for the profile equation check before assembling fields.
pub const PREFLIGHT_TOL: f64 = ANALYTIC_ZERO;

/// Normalization of the heat kernel used throughout.
pub const KERNEL_NORMALIZATION: &str = "1/sqrt(4 pi mu_tilde t)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum NsFamily {
    NS2D,
    NS3D,
    NS3D_IVP,
}

impl NsFamily {
    pub const ALL: [NsFamily; 3] = [NsFamily::NS2D, NsFamily::NS3D, NsFamily::NS3D_IVP];

    pub fn name(self) -> &'static str {
        match self {
            NsFamily::NS2D => "NS2D",
            NsFamily::NS3D => "NS3D",
            NsFamily::NS3D_IVP => "NS3D_IVP",
        }
    }

    pub fn from_name(name: &str) -> Option<NsFamily> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn dims(self) -> usize {
        match self {
            NsFamily::NS2D => 2,
            _ => 3,
        }
    }
}

fn is_zero_cf(e: &ClosedForm) -> bool {
    e.as_const() == Some(0.0)
}

/// One Navier–Stokes family instance.
///
/// Profiles: `g` is a closed-form profile (`g(s, t)` for `NS2D`,
/// `g(s, η, t)` for `NS3D`); `H` is initial data in one variable evolved by
/// the heat kernel (`NS2D` and `NS3D_IVP`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NsFamilySpec {
    pub family: NsFamily,
    pub mu: f64,
    #[serde(default)]
    pub c1: f64,
    #[serde(default)]
    pub c2: f64,
    #[serde(default)]
    pub ct1: f64,
    #[serde(default)]
    pub ct2: f64,
    #[serde(default)]
    pub profiles: BTreeMap<String, ClosedForm>,
    #[serde(default = "ClosedForm::zero", skip_serializing_if = "is_zero_cf")]
    pub a: ClosedForm,
    #[serde(default = "ClosedForm::zero", skip_serializing_if = "is_zero_cf")]
    pub b: ClosedForm,
}

/// Pointwise heat-flow profile and its derivatives.
#[derive(Debug, Clone)]
pub struct HeatProfile {
    pub g: Vec<f64>,
    pub g_s: Vec<f64>,
    pub g_ss: Vec<f64>,
    pub g_t: Vec<f64>,
    /// Largest Gauss–Hermite order used at any point.
    pub nodes: usize,
}

/// `g(s, t) = ∫ K(s − w, t) H(w) dw` with `K = e^{−(s−w)²/(4μ̃t)} / √(4πμ̃t)`,
/// by Gauss–Hermite quadrature after `w = s + 2√(μ̃t) ξ`.
///
/// `g_s` and `g_ss` use `H'` and `H''` under the integral; `g_t` differentiates
/// the scaled nodes, `g_t = (1/√π) Σ w_i ξ_i H'(s + 2√(μ̃t) ξ_i) √(μ̃/t)`.
pub fn heat_solve_1d(h: &ClosedForm, mu_tilde: f64, t: f64, s: &[f64]) -> Result<HeatProfile> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("heat flow needs t > 0, got {t}")));
    }
    if !(mu_tilde > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "diffusivity must be positive, got {mu_tilde}"
        )));
    }
    let dh = h.derivative(0);
    let d2h = dh.derivative(0);
    let prog = Program::compile(&[h, &dh, &d2h]);
    let c = 2.0 * (mu_tilde * t).sqrt();
    let dcdt = (mu_tilde / t).sqrt();
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let rule = |n: usize, s: f64| -> Result<[f64; 4]> {
        let gh = gauss_hermite(n)?;
        let (xs, ws) = (&gh.0, &gh.1);
        let mut scratch = Vec::new();
        let mut out = [0.0; 3];
        let mut acc = [0.0; 4];
        for (xi, wi) in xs.iter().zip(ws) {
            if *wi == 0.0 {
                continue;
            }
            prog.eval_into(&[s + c * xi], &mut scratch, &mut out)?;
            acc[0] += wi * out[0];
            acc[1] += wi * out[1];
            acc[2] += wi * out[2];
            acc[3] += wi * xi * out[1];
        }
        Ok([
            acc[0] * inv_sqrt_pi,
            acc[1] * inv_sqrt_pi,
            acc[2] * inv_sqrt_pi,
            acc[3] * inv_sqrt_pi * dcdt,
        ])
    };
    let per_point: Vec<([f64; 4], usize)> = s
        .par_iter()
        .map(|&sv| {
            let mut n = HEAT_NODES;
            let mut prev = rule(n, sv)?;
            loop {
                if n >= HEAT_MAX_NODES {
                    return Err(Error::Quadrature(format!(
                        "heat convolution at s = {sv}, t = {t} not converged with {HEAT_MAX_NODES} nodes"
                    )));
                }
                n *= 2;
                let next = rule(n, sv)?;
                let settled = prev
                    .iter()
                    .zip(&next)
                    .all(|(a, b)| (a - b).abs() <= HEAT_TOL * b.abs().max(1.0));
                prev = next;
                if settled {
                    return Ok((prev, n));
                }
            }
        })
        .collect::<Result<_>>()?;
    let mut out = HeatProfile {
        g: Vec::with_capacity(s.len()),
        g_s: Vec::with_capacity(s.len()),
        g_ss: Vec::with_capacity(s.len()),
        g_t: Vec::with_capacity(s.len()),
        nodes: 0,
    };
    for (v, n) in per_point {
        out.g.push(v[0]);
        out.g_s.push(v[1]);
        out.g_ss.push(v[2]);
        out.g_t.push(v[3]);
        out.nodes = out.nodes.max(n);
    }
    Ok(out)
}

/// Fields of the form `u_i = α_i g(n·x, t) + c_i − α_i A(t)`, `∇p = a(t) π`.
#[derive(Debug, Clone)]
struct ProfileLayout {
    normal: Vec<f64>,
    alpha: Vec<f64>,
    offset: Vec<f64>,
    pressure: Vec<f64>,
    /// Constant advection speed removed by a moving frame: `g(s, t) = G(s − speed t, t)`.
    speed: f64,
    mu_tilde: f64,
}

/// Coefficients of the corrected two-variable profile equation
/// `g_t + U_s g_s + U_η g_η = μ(K_ss g_ss + 2K_sη g_sη + K_ηη g_ηη)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ns3dProfileCoefficients {
    pub u_s: f64,
    pub u_eta: f64,
    pub k_ss: f64,
    pub k_seta: f64,
    pub k_etaeta: f64,
}

impl Ns3dProfileCoefficients {
    pub fn new(c1: f64, c2: f64, ct1: f64, ct2: f64) -> Ns3dProfileCoefficients {
        let (q1, q2) = (1.0 / (4.0 * c1 * c1), 1.0 / (4.0 * c2 * c2));
        Ns3dProfileCoefficients {
            u_s: -(ct1 / (2.0 * c1) + ct2 / (2.0 * c2)),
            u_eta: ct1 / (2.0 * c1) - ct2 / (2.0 * c2),
            k_ss: 1.0 + q1 + q2,
            k_seta: q2 - q1,
            k_etaeta: q1 + q2,
        }
    }

    /// Residual of the corrected equation for `g(s, η, t)`.
    pub fn residual(&self, g: &ClosedForm, mu: f64) -> ClosedForm {
        g.partial(&[0, 0, 1]) + self.u_s * g.partial(&[1]) + self.u_eta * g.partial(&[0, 1])
            - mu * (self.k_ss * g.partial(&[2])
                + 2.0 * self.k_seta * g.partial(&[1, 1])
                + self.k_etaeta * g.partial(&[0, 2]))
    }

    /// Residual of the equation without the mixed term, which holds only
    /// when `c1² = c2²`.
    pub fn residual_without_cross_term(&self, g: &ClosedForm, mu: f64) -> ClosedForm {
        g.partial(&[0, 0, 1]) + self.u_s * g.partial(&[1]) + self.u_eta * g.partial(&[0, 1])
            - mu * (self.k_etaeta * (g.partial(&[2]) + g.partial(&[0, 2])) + g.partial(&[2]))
    }

    /// `e^{−νt} sin(α s + β η − ω t)`, an exact solution of the corrected equation.
    pub fn fourier_mode(&self, mu: f64, alpha: f64, beta: f64) -> ClosedForm {
        let omega = alpha * self.u_s + beta * self.u_eta;
        let nu = mu * (self.k_ss * alpha * alpha + 2.0 * self.k_seta * alpha * beta + self.k_etaeta * beta * beta);
        let t = ClosedForm::var(2);
        (-nu * &t).exp() * ClosedForm::affine(&[alpha, beta, -omega], 0.0).sin()
    }
}

/// Outcome of certifying one instance at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsReport {
    pub family: NsFamily,
    pub t: f64,
    pub mu_tilde: Option<f64>,
    pub residual: FlowResidual,
    /// Profile equation residual checked before assembly (closed-form profiles).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preflight: Option<ResidualReport>,
    /// Gauss–Hermite order reached (heat-kernel profiles).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_normalization: Option<String>,
}

impl NsFamilySpec {
    pub fn new(family: NsFamily, mu: f64) -> NsFamilySpec {
        NsFamilySpec {
            family,
            mu,
            c1: 0.0,
            c2: 0.0,
            ct1: 0.0,
            ct2: 0.0,
            profiles: BTreeMap::new(),
            a: ClosedForm::zero(),
            b: ClosedForm::zero(),
        }
    }

    pub fn with_profile(mut self, name: &str, e: ClosedForm) -> Self {
        self.profiles.insert(name.into(), e);
        self
    }

    pub fn validate_params(&self) -> ConstraintLog {
        let mut checks = vec![ConstraintCheck {
            constraint: "mu > 0".into(),
            value: self.mu,
            ok: self.mu > 0.0,
        }];
        let nonzero = |name: &str, v: f64| ConstraintCheck {
            constraint: name.into(),
            value: v,
            ok: v.abs() > CONSTRAINT_TOL,
        };
        match self.family {
            NsFamily::NS2D => {}
            NsFamily::NS3D => checks.push(nonzero("c1*c2 != 0", self.c1 * self.c2)),
            NsFamily::NS3D_IVP => {
                checks.push(nonzero("c1*c2 != 0", self.c1 * self.c2));
                let v = self.ct1 * self.c2 + self.c1 * self.ct2;
                checks.push(ConstraintCheck {
                    constraint: "ct1*c2 + c1*ct2 = 0".into(),
                    value: v,
                    ok: v.abs() <= CONSTRAINT_TOL,
                });
            }
        }
        ConstraintLog { checks }
    }

    fn ensure_valid(&self) -> Result<()> {
        let log = self.validate_params();
        match log.violations().first() {
            Some(v) => Err(Error::InvalidParameter(format!(
                "{}: constraint {} violated (value {:e})",
                self.family.name(),
                v.constraint,
                v.value
            ))),
            None => Ok(()),
        }
    }

    /// `μ̃` for the heat-kernel path.
    pub fn mu_tilde(&self) -> f64 {
        let (c1, c2) = (self.c1, self.c2);
        match self.family {
            NsFamily::NS2D => self.mu * (c1 * c1 + 1.0),
            NsFamily::NS3D => self.mu * Ns3dProfileCoefficients::new(c1, c2, self.ct1, self.ct2).k_ss,
            NsFamily::NS3D_IVP => self.mu * (4.0 * c1 * c1 * c2 * c2 + c1 * c1 + c2 * c2),
        }
    }

    fn closed_profile(&self) -> Option<&ClosedForm> {
        self.profiles.get("g")
    }

    fn initial_profile(&self) -> Result<&ClosedForm> {
        self.profiles.get("H").ok_or_else(|| {
            Error::config(
                "profiles",
                format!(
                    "family {} needs a closed-form profile g or initial data H",
                    self.family.name()
                ),
            )
        })
    }

    fn uses_heat_kernel(&self) -> bool {
        match self.family {
            NsFamily::NS3D_IVP => true,
            NsFamily::NS2D => self.closed_profile().is_none(),
            NsFamily::NS3D => false,
        }
    }

    fn big_a(&self, t_index: usize) -> ClosedForm {
        ClosedForm::integral(&self.a, 0.0, &ClosedForm::var(t_index))
    }

    fn layout(&self) -> ProfileLayout {
        let (c1, c2, ct1, ct2) = (self.c1, self.c2, self.ct1, self.ct2);
        match self.family {
            NsFamily::NS2D => ProfileLayout {
                normal: vec![1.0, -c1],
                alpha: vec![c1, 1.0],
                offset: vec![c2, 0.0],
                pressure: vec![c1, 1.0],
                speed: c2,
                mu_tilde: self.mu_tilde(),
            },
            _ => ProfileLayout {
                normal: vec![2.0 * c1 * c2, -c2, -c1],
                alpha: vec![1.0, c1, c2],
                offset: vec![0.0, ct1, ct2],
                pressure: vec![1.0, c1, c2],
                speed: 0.0,
                mu_tilde: self.mu_tilde(),
            },
        }
    }

    /// Closed-form velocity and pressure when the profile is a closed form.
    pub fn flow(&self) -> Result<Flow> {
        self.ensure_valid()?;
        let g = self.closed_profile().ok_or_else(|| {
            Error::InvalidParameter(format!(
                "{} instance has no closed-form profile; use the heat-kernel path",
                self.family.name()
            ))
        })?;
        let d = self.family.dims();
        let (x, y, z, t) = (
            ClosedForm::var(0),
            ClosedForm::var(1),
            ClosedForm::var(2),
            ClosedForm::var(d),
        );
        let big_a = self.big_a(d);
        let a_t = self.a.compose(std::slice::from_ref(&t));
        let b_t = self.b.compose(std::slice::from_ref(&t));
        let (c1, c2) = (self.c1, self.c2);
        match self.family {
            NsFamily::NS2D => {
                let s = ClosedForm::affine(&[1.0, -c1], 0.0);
                let gv = g.compose(&[s, t.clone()]);
                let u1 = c1 * &gv - c1 * &big_a + c2;
                let u2 = gv - &big_a;
                Flow::new(2, vec![u1, u2], a_t * (c1 * x + y) + b_t)
            }
            NsFamily::NS3D | NsFamily::NS3D_IVP => {
                let k = 2.0 * c1 * c2;
                let args = if self.family == NsFamily::NS3D {
                    vec![
                        ClosedForm::affine(&[1.0, -c2 / k, -c1 / k], 0.0),
                        ClosedForm::affine(&[0.0, c2 / k, -c1 / k], 0.0),
                        t.clone(),
                    ]
                } else {
                    vec![ClosedForm::affine(&[k, -c2, -c1], 0.0), t.clone()]
                };
                let u1 = g.compose(&args) - &big_a;
                let u2 = c1 * &u1 + self.ct1;
                let u3 = c2 * &u1 + self.ct2;
                Flow::new(3, vec![u1, u2, u3], a_t * (x + c1 * y + c2 * z) + b_t)
            }
        }
    }

    /// Profile equation residual on the grid at time `t` (closed-form profiles).
    pub fn preflight(&self, grid: &Grid, t: f64) -> Result<Option<ResidualReport>> {
        let g = match self.closed_profile() {
            Some(g) => g,
            None => return Ok(None),
        };
        let (c1, c2, mu) = (self.c1, self.c2, self.mu);
        let (r, args) = match self.family {
            NsFamily::NS2D => {
                let r = g.partial(&[0, 1]) + c2 * g.partial(&[1]) - mu * (c1 * c1 + 1.0) * g.partial(&[2]);
                (r, vec![ClosedForm::affine(&[1.0, -c1], 0.0), ClosedForm::var(2)])
            }
            NsFamily::NS3D => {
                let k = 2.0 * c1 * c2;
                let r = Ns3dProfileCoefficients::new(c1, c2, self.ct1, self.ct2).residual(g, mu);
                (
                    r,
                    vec![
                        ClosedForm::affine(&[1.0, -c2 / k, -c1 / k], 0.0),
                        ClosedForm::affine(&[0.0, c2 / k, -c1 / k], 0.0),
                        ClosedForm::var(3),
                    ],
                )
            }
            NsFamily::NS3D_IVP => {
                let r = g.partial(&[0, 1]) - self.mu_tilde() * g.partial(&[2]);
                (
                    r,
                    vec![ClosedForm::affine(&[2.0 * c1 * c2, -c2, -c1], 0.0), ClosedForm::var(3)],
                )
            }
        };
        let vals = Analytic::with_trailing(r.compose(&args), grid.clone(), &[t]).values()?;
        let report = ResidualReport::from_field("profile_equation", &vals);
        if !report.within(PREFLIGHT_TOL) {
            return Err(Error::ProfilePreflight {
                equation: format!("{} profile equation", self.family.name()),
                residual: report.linf,
                tol: PREFLIGHT_TOL,
            });
        }
        Ok(Some(report))
    }

    fn s_values(&self, grid: &Grid, layout: &ProfileLayout, t: f64) -> Vec<f64> {
        (0..grid.len())
            .map(|k| {
                let p = grid.point(k);
                p.iter().zip(&layout.normal).map(|(x, n)| x * n).sum::<f64>() - layout.speed * t
            })
            .collect()
    }

    fn time_functions(&self, t: f64) -> Result<(f64, f64, f64)> {
        let a = self.a.eval(&[t])?;
        let b = self.b.eval(&[t])?;
        let big_a = self.big_a(0).eval(&[t])?;
        Ok((a, big_a, b))
    }

    /// Heat-kernel jet: exact derivatives of the quadrature.
    fn heat_jet(&self, grid: &Grid, t: f64) -> Result<(FlowJet, ScalarField, usize)> {
        let layout = self.layout();
        let h = self.initial_profile()?;
        let s = self.s_values(grid, &layout, t);
        let prof = heat_solve_1d(h, layout.mu_tilde, t, &s)?;
        let (a, big_a, b) = self.time_functions(t)?;
        let d = layout.alpha.len();
        let n2: f64 = layout.normal.iter().map(|v| v * v).sum();
        let field = |f: &dyn Fn(usize) -> f64| ScalarField::new(grid.clone(), (0..grid.len()).map(f).collect());
        let mut jet = FlowJet {
            u: Vec::new(),
            grad_u: Vec::new(),
            lap_u: Vec::new(),
            u_t: Vec::new(),
            grad_p: Vec::new(),
        };
        for i in 0..d {
            let al = layout.alpha[i];
            jet.u.push(field(&|k| al * prof.g[k] + layout.offset[i] - al * big_a)?);
            jet.grad_u.push(
                (0..d)
                    .map(|j| field(&|k| al * prof.g_s[k] * layout.normal[j]))
                    .collect::<Result<_>>()?,
            );
            jet.lap_u.push(field(&|k| al * prof.g_ss[k] * n2)?);
            // moving frame: ∂_t g(s, t) = G_t − speed G_σ
            jet.u_t
                .push(field(&|k| al * (prof.g_t[k] - layout.speed * prof.g_s[k]) - al * a)?);
            jet.grad_p.push(ScalarField::constant(grid, a * layout.pressure[i]));
        }
        let p = field(&|k| {
            let q = grid.point(k);
            a * q.iter().zip(&layout.pressure).map(|(x, c)| x * c).sum::<f64>() + b
        })?;
        Ok((jet, p, prof.nodes))
    }

    /// Velocity and pressure sampled at time `t`.
    pub fn generate(&self, grid: &Grid, t: f64) -> Result<(VectorField, ScalarField)> {
        self.ensure_valid()?;
        if self.uses_heat_kernel() {
            let (jet, p, _) = self.heat_jet(grid, t)?;
            return Ok((VectorField::new(jet.u)?, p));
        }
        self.preflight(grid, t)?;
        self.flow()?.sample(grid, t)
    }

    /// Momentum and divergence residuals at time `t`.
    ///
    /// Heat-kernel profiles on the sampled path use a centered time difference
    /// of half-width `max(1e-5, t/100)` (capped at `t/2`).
    pub fn residual(&self, grid: &Grid, t: f64, path: EvalPath) -> Result<NsReport> {
        self.ensure_valid()?;
        if grid.dims() != self.family.dims() {
            return Err(Error::DimensionMismatch(format!(
                "{} lives in {} dimensions, grid has {}",
                self.family.name(),
                self.family.dims(),
                grid.dims()
            )));
        }
        if self.uses_heat_kernel() {
            let (jet, p, nodes) = self.heat_jet(grid, t)?;
            let jet = match path {
                EvalPath::Analytic => jet,
                EvalPath::Sampled { accuracy, .. } => {
                    let delta = (t / 100.0).max(1e-5).min(t / 2.0);
                    let (plus, _, _) = self.heat_jet(grid, t + delta)?;
                    let (minus, _, _) = self.heat_jet(grid, t - delta)?;
                    let u_t = plus
                        .u
                        .iter()
                        .zip(&minus.u)
                        .map(|(a, b)| Ok(a.sub(b)?.scale(0.5 / delta)))
                        .collect::<Result<Vec<_>>>()?;
                    let u: Vec<Sampled> = jet.u.into_iter().map(|c| Sampled::new(c, accuracy)).collect();
                    let refs: Vec<&dyn Differentiable> = u.iter().map(|s| s as &dyn Differentiable).collect();
                    FlowJet::from_differentiable(&refs, u_t, &Sampled::new(p, accuracy))?
                }
            };
            return Ok(NsReport {
                family: self.family,
                t,
                mu_tilde: Some(self.mu_tilde()),
                residual: jet.residual(self.mu),
                preflight: None,
                nodes: Some(nodes),
                kernel_normalization: Some(KERNEL_NORMALIZATION.into()),
            });
        }
        let preflight = self.preflight(grid, t)?;
        Ok(NsReport {
            family: self.family,
            t,
            mu_tilde: None,
            residual: self.flow()?.residual(grid, t, self.mu, path)?,
            preflight,
            nodes: None,
            kernel_normalization: None,
        })
    }
}

/// Distance from the initial data at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEntry {
    pub t: f64,
    /// `max_i ‖u_i(·, t) − h_i‖∞`.
    pub distance: f64,
    pub residual: FlowResidual,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub mu_tilde: f64,
    pub entries: Vec<LimitEntry>,
    /// Distances decrease as `t` decreases.
    pub monotone: bool,
    pub kernel_normalization: String,
}

/// Evaluates the initial-value solution along `ts` (ordered from large to
/// small) and compares with `h = (H(s), c1 H(s) + c̃1, c2 H(s) + c̃2)`.
pub fn ivp_limit_check(spec: &NsFamilySpec, grid: &Grid, ts: &[f64]) -> Result<LimitReport> {
    if spec.family != NsFamily::NS3D_IVP {
        return Err(Error::InvalidParameter(format!(
            "limit check applies to NS3D_IVP, got {}",
            spec.family.name()
        )));
    }
    spec.ensure_valid()?;
    let h = spec.initial_profile()?;
    let layout = spec.layout();
    let s = spec.s_values(grid, &layout, 0.0);
    let hv = eval_points(&Program::compile(&[h]), s.len(), 1, |i, p| p[0] = s[i])?;
    let mut entries = Vec::with_capacity(ts.len());
    for &t in ts {
        let (jet, _, nodes) = spec.heat_jet(grid, t)?;
        let mut distance = 0.0f64;
        for (i, comp) in jet.u.iter().enumerate() {
            for (k, v) in comp.values().iter().enumerate() {
                let target = layout.alpha[i] * hv[k] + layout.offset[i];
                distance = distance.max((v - target).abs());
            }
        }
        entries.push(LimitEntry {
            t,
            distance,
            residual: jet.residual(spec.mu),
            nodes,
        });
    }
    let monotone = entries
        .windows(2)
        .all(|w| w[1].t >= w[0].t || w[1].distance <= w[0].distance);
    Ok(LimitReport {
        mu_tilde: spec.mu_tilde(),
        entries,
        monotone,
        kernel_normalization: KERNEL_NORMALIZATION.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler_family::{EulerFamily, EulerFamilySpec};
    use std::f64::consts::FRAC_PI_2;

    fn x() -> ClosedForm {
        ClosedForm::var(0)
    }

    #[test]
    fn heat_of_sine_and_trivial_data() {
        let s: Vec<f64> = (0..21).map(|i| -3.0 + 0.3 * i as f64).collect();
        let (mt, t) = (6.0, 0.1);
        let p = heat_solve_1d(&x().sin(), mt, t, &s).unwrap();
        for (k, &sv) in s.iter().enumerate() {
            let decay = (-mt * t).exp();
            assert!((p.g[k] - decay * sv.sin()).abs() <= 1e-8);
            assert!((p.g_s[k] - decay * sv.cos()).abs() <= 1e-8);
            assert!((p.g_t[k] + mt * decay * sv.sin()).abs() <= 1e-8);
            assert!((p.g_t[k] - mt * p.g_ss[k]).abs() <= 1e-12);
        }
        let c = heat_solve_1d(&ClosedForm::constant(2.5), 1.0, 3.0, &s).unwrap();
        assert!(c.g.iter().all(|v| (v - 2.5).abs() < 1e-13));
        let lin = heat_solve_1d(&x(), 1.0, 3.0, &s).unwrap();
        assert!(lin.g.iter().zip(&s).all(|(v, sv)| (v - sv).abs() < 1e-12));
        assert!(matches!(
            heat_solve_1d(&x(), 1.0, 0.0, &s),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn heat_of_gaussian() {
        let s: Vec<f64> = (0..41).map(|i| -4.0 + 0.2 * i as f64).collect();
        let (mt, t) = (0.7, 0.5);
        let p = heat_solve_1d(&(-x().pow(2.0)).exp(), mt, t, &s).unwrap();
        let q = 1.0 + 4.0 * mt * t;
        for (k, &sv) in s.iter().enumerate() {
            assert!((p.g[k] - (-sv * sv / q).exp() / q.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn heat_time_derivative_matches_difference_quotient() {
        let s: Vec<f64> = (0..11).map(|i| -1.0 + 0.2 * i as f64).collect();
        let h = (-x().pow(2.0)).exp() + 0.3 * (2.0 * x()).sin();
        let (mt, t) = (0.8, 0.3);
        let delta = (t / 100.0f64).max(1e-5);
        let p = heat_solve_1d(&h, mt, t, &s).unwrap();
        let a = heat_solve_1d(&h, mt, t + delta, &s).unwrap();
        let b = heat_solve_1d(&h, mt, t - delta, &s).unwrap();
        for k in 0..s.len() {
            let fd = (a.g[k] - b.g[k]) / (2.0 * delta);
            assert!((fd - mt * p.g_ss[k]).abs() <= 1e-8f64.max(10.0 * delta * delta), "{k}");
        }
    }

    fn ns2d_mode(mu: f64, c1: f64, c2: f64) -> ClosedForm {
        // g(s, t) = e^{−μ(c1²+1)t} sin(s − c2 t)
        let t = ClosedForm::var(1);
        (-mu * (c1 * c1 + 1.0) * &t).exp() * ClosedForm::affine(&[1.0, -c2], 0.0).sin()
    }

    #[test]
    fn ns2d_closed_form_and_heat_paths() {
        let g = Grid::cube(2, 9, -1.0, 1.0).unwrap();
        let mut s = NsFamilySpec::new(NsFamily::NS2D, 1.0).with_profile("g", ns2d_mode(1.0, 1.0, 0.0));
        s.c1 = 1.0;
        let r = s.residual(&g, 0.3, EvalPath::Analytic).unwrap();
        assert!(r.residual.linf() <= 1e-10);
        assert!(r.preflight.unwrap().is_analytic_zero());

        let mut s = NsFamilySpec::new(NsFamily::NS2D, 0.5).with_profile("g", ns2d_mode(0.5, 0.7, 1.2));
        (s.c1, s.c2) = (0.7, 1.2);
        s.a = ClosedForm::one();
        assert!(s.residual(&g, 0.8, EvalPath::Analytic).unwrap().residual.linf() <= 1e-10);

        // same instance through the heat kernel
        let mut h = s.clone();
        h.profiles.clear();
        h.profiles.insert("H".into(), x().sin());
        let r = h.residual(&g, 0.8, EvalPath::Analytic).unwrap();
        assert!(r.residual.linf() <= 1e-10, "{}", r.residual.linf());
        let (ua, _) = s.generate(&g, 0.8).unwrap();
        let (ub, _) = h.generate(&g, 0.8).unwrap();
        assert!(ua.component(0).sub(ub.component(0)).unwrap().linf() < 1e-9);

        let mut c = NsFamilySpec::new(NsFamily::NS2D, 1.0).with_profile("g", ClosedForm::constant(0.4));
        c.c1 = 2.0;
        assert_eq!(c.residual(&g, 0.1, EvalPath::Analytic).unwrap().residual.linf(), 0.0);
    }

    #[test]
    fn ns2d_preflight_rejects_wrong_profile() {
        let g = Grid::cube(2, 9, -1.0, 1.0).unwrap();
        let mut s = NsFamilySpec::new(NsFamily::NS2D, 1.0).with_profile("g", ns2d_mode(2.0, 1.0, 0.0));
        s.c1 = 1.0;
        assert!(matches!(
            s.residual(&g, 0.3, EvalPath::Analytic),
            Err(Error::ProfilePreflight { .. })
        ));
    }

    #[test]
    fn ns3d_mode_and_reduction() {
        let g = Grid::cube(3, 9, -1.0, 1.0).unwrap();
        let mut s = NsFamilySpec::new(NsFamily::NS3D, 0.4);
        (s.c1, s.c2, s.ct1, s.ct2) = (1.0, 1.0, 1.0, -1.0);
        let co = Ns3dProfileCoefficients::new(1.0, 1.0, 1.0, -1.0);
        assert_eq!((co.u_s, co.u_eta), (0.0, 1.0));
        s = s.with_profile("g", co.fourier_mode(0.4, 1.3, -0.6));
        let r = s.residual(&g, 0.5, EvalPath::Analytic).unwrap();
        assert!(r.residual.linf() <= 1e-10, "{}", r.residual.linf());

        let mut c = s.clone();
        c.profiles.insert("g".into(), ClosedForm::constant(1.5));
        assert_eq!(c.residual(&g, 0.5, EvalPath::Analytic).unwrap().residual.linf(), 0.0);

        // s-only profile with U_s = 0 is plain heat flow with μ K_ss
        let mut r1 = NsFamilySpec::new(NsFamily::NS3D, 0.3);
        (r1.c1, r1.c2, r1.ct1, r1.ct2) = (1.0, 2.0, 1.0, -2.0);
        let co = Ns3dProfileCoefficients::new(1.0, 2.0, 1.0, -2.0);
        assert_eq!(co.u_s, 0.0);
        let mt = 0.3 * co.k_ss;
        let gs = (-mt * ClosedForm::var(2)).exp() * x().sin();
        r1 = r1.with_profile("g", gs.clone());
        assert!(r1.residual(&g, 0.4, EvalPath::Analytic).unwrap().residual.linf() <= 1e-10);
        let ss: Vec<f64> = (0..9).map(|i| -2.0 + 0.5 * i as f64).collect();
        let heat = heat_solve_1d(&x().sin(), mt, 0.4, &ss).unwrap();
        for (k, &sv) in ss.iter().enumerate() {
            assert!((heat.g[k] - gs.eval(&[sv, 0.0, 0.4]).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn ns3d_mixed_term_is_required() {
        let g = Grid::cube(3, 9, -1.0, 1.0).unwrap();
        let (c1, c2, ct1, ct2, mu) = (1.0, 2.0, 0.5, 0.3, 0.5);
        let co = Ns3dProfileCoefficients::new(c1, c2, ct1, ct2);
        let mode = co.fourier_mode(mu, 1.0, 1.0);
        let eval = |e: ClosedForm| {
            Analytic::with_trailing(e, Grid::cube(2, 9, -1.0, 1.0).unwrap(), &[0.2])
                .values()
                .unwrap()
                .linf()
        };
        assert!(eval(co.residual(&mode, mu)) < 1e-12);
        assert!(eval(co.residual_without_cross_term(&mode, mu)) > 1e-2);
        let mut s = NsFamilySpec::new(NsFamily::NS3D, mu).with_profile("g", mode);
        (s.c1, s.c2, s.ct1, s.ct2) = (c1, c2, ct1, ct2);
        assert!(s.residual(&g, 0.2, EvalPath::Analytic).unwrap().residual.linf() <= 1e-10);
        // with c1² = c2² both forms agree
        let co = Ns3dProfileCoefficients::new(1.0, -1.0, ct1, ct2);
        let mode = co.fourier_mode(mu, 1.0, 1.0);
        assert!(eval(co.residual_without_cross_term(&mode, mu)) < 1e-12);
    }

    fn ivp(h: ClosedForm) -> NsFamilySpec {
        let mut s = NsFamilySpec::new(NsFamily::NS3D_IVP, 1.0).with_profile("H", h);
        (s.c1, s.c2, s.ct1, s.ct2) = (1.0, 1.0, 1.0, -1.0);
        s
    }

    fn ivp_grid() -> Grid {
        Grid::new(&[9, 9, 9], &[0.0, -1.0, -1.0], &[FRAC_PI_2, 1.0, 1.0], &[false; 3]).unwrap()
    }

    #[test]
    fn ivp_sine_limit() {
        let s = ivp(x().sin());
        assert_eq!(s.mu_tilde(), 6.0);
        let g = ivp_grid();
        let rep = ivp_limit_check(&s, &g, &[0.1, 0.01, 0.001]).unwrap();
        assert!(rep.monotone);
        for e in &rep.entries {
            assert!((e.distance - (1.0 - (-6.0 * e.t).exp())).abs() <= 1e-8, "{e:?}");
            assert!(e.residual.linf() <= 1e-8);
        }
    }

    #[test]
    fn ivp_zero_data_and_gaussian() {
        let g = ivp_grid();
        let rep = ivp_limit_check(&ivp(ClosedForm::zero()), &g, &[0.5, 0.1]).unwrap();
        assert!(rep.entries.iter().all(|e| e.distance == 0.0));
        let rep = ivp_limit_check(&ivp((-x().pow(2.0)).exp()), &g, &[0.1, 0.01, 0.001]).unwrap();
        assert!(rep.monotone);
        assert!(rep.entries.iter().all(|e| e.residual.linf() <= 1e-8));
    }

    #[test]
    fn ivp_constraint_and_linear_dependence() {
        let mut s = ivp(x().sin());
        s.ct2 = 1.0;
        assert!(!s.validate_params().ok());
        assert!(ivp_limit_check(&s, &ivp_grid(), &[0.1]).is_err());
        let s = ivp(x().cos());
        let (u, _) = s.generate(&ivp_grid(), 0.2).unwrap();
        let d2 = u.component(1).zip_map(u.component(0), |b, a| b - a - 1.0).unwrap();
        let d3 = u.component(2).zip_map(u.component(0), |c, a| c - a + 1.0).unwrap();
        assert!(d2.linf() <= 1e-14 && d3.linf() <= 1e-14);
    }

    #[test]
    fn heat_path_sampled_residual_is_small() {
        let s = ivp(x().sin());
        let g = Grid::new(&[17, 17, 17], &[0.0, -1.0, -1.0], &[FRAC_PI_2, 1.0, 1.0], &[false; 3]).unwrap();
        let r = s.residual(&g, 0.1, EvalPath::sampled(4)).unwrap();
        assert!(r.residual.linf() < 1e-2, "{}", r.residual.linf());
    }

    #[test]
    fn inviscid_limit_matches_euler_family() {
        let (c1, c2) = (0.8, 1.3);
        let prof = ClosedForm::affine(&[1.0, -c2], 0.0).tanh();
        let mut ns = NsFamilySpec::new(NsFamily::NS2D, 1e-300).with_profile("g", prof);
        (ns.c1, ns.c2) = (c1, c2);
        ns.a = x().cos();
        let mut e = EulerFamilySpec::new(EulerFamily::E2D_LINEAR_P).with_profile("g", x().tanh());
        (e.beta, e.gamma, e.c1, e.c2, e.ct1, e.ct2, e.lambda, e.xi) = (1.0, -c1, c1, 1.0, c2, 0.0, -c1, -1.0);
        e.a = x().cos();
        let g = Grid::cube(2, 9, -1.0, 1.0).unwrap();
        let nf = ns.flow().unwrap();
        let ef = e.flow().unwrap();
        let (ua, pa) = nf.sample(&g, 0.6).unwrap();
        let (ub, pb) = ef.sample(&g, 0.6).unwrap();
        for i in 0..2 {
            assert!(ua.component(i).sub(ub.component(i)).unwrap().linf() < 1e-14);
        }
        assert!(pa.sub(&pb).unwrap().linf() < 1e-14);
        assert!(nf.residual(&g, 0.6, 0.0, EvalPath::Analytic).unwrap().linf() <= 1e-10);
    }
}
