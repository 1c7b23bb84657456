//! Explicit Euler solutions with pressure linear in space.
//!
//! Each family is a travelling profile `u_1 = G(φ)` along a phase `φ` that is
//! linear in `(x, t)`, with the remaining components tied to `u_1` so that the
//! phase is transported at constant speed. A time-dependent pressure gradient
//! `a(t)` enters through `A(t) = ∫₀ᵗ a`.
//!
//! Profiles `g`, `G`, `H` and the time functions `a`, `b` are closed forms in
//! one variable (`x0`).

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::ClosedForm;
use crate::fields::{Grid, ResidualReport, ScalarField, VectorField};
use crate::flow::{EvalPath, Flow, FlowResidual};
use crate::{Error, Result};

/// Tolerance for the algebraic parameter constraints.
pub const CONSTRAINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum EulerFamily {
    /// 2D, constant pressure: `u = (c1 g(φ) + c̃1, c2 g(φ) + c̃2)`.
    E2D_ISOBARIC,
    /// 2D, `p = −a(t)(λx + ξy) + b(t)`.
    E2D_LINEAR_P,
    /// 3D, phase `c1 t − y + c2 z`.
    E3D_SOL1,
    /// 3D, phase `c1 t − z + c2 x`.
    E3D_SOL2,
    /// 3D, phase `c1 t − x + c2 y`.
    E3D_SOL3,
    /// 3D, linear dependence with the quadratic phase coefficients.
    E3D_SOL4,
    /// 3D, linear dependence with free weights `k`, `l`.
    E3D_SOL5,
}

impl EulerFamily {
    pub const ALL: [EulerFamily; 7] = [
        EulerFamily::E2D_ISOBARIC,
        EulerFamily::E2D_LINEAR_P,
        EulerFamily::E3D_SOL1,
        EulerFamily::E3D_SOL2,
        EulerFamily::E3D_SOL3,
        EulerFamily::E3D_SOL4,
        EulerFamily::E3D_SOL5,
    ];

    pub fn dims(self) -> usize {
        match self {
            EulerFamily::E2D_ISOBARIC | EulerFamily::E2D_LINEAR_P => 2,
            _ => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EulerFamily::E2D_ISOBARIC => "E2D_ISOBARIC",
            EulerFamily::E2D_LINEAR_P => "E2D_LINEAR_P",
            EulerFamily::E3D_SOL1 => "E3D_SOL1",
            EulerFamily::E3D_SOL2 => "E3D_SOL2",
            EulerFamily::E3D_SOL3 => "E3D_SOL3",
            EulerFamily::E3D_SOL4 => "E3D_SOL4",
            EulerFamily::E3D_SOL5 => "E3D_SOL5",
        }
    }

    pub fn from_name(name: &str) -> Option<EulerFamily> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Profiles the family reads.
    pub fn profiles(self) -> &'static [&'static str] {
        match self {
            EulerFamily::E2D_ISOBARIC | EulerFamily::E2D_LINEAR_P => &["g"],
            EulerFamily::E3D_SOL1 | EulerFamily::E3D_SOL2 | EulerFamily::E3D_SOL3 => &["G", "H"],
            EulerFamily::E3D_SOL4 | EulerFamily::E3D_SOL5 => &["G"],
        }
    }
}

fn is_zero_cf(e: &ClosedForm) -> bool {
    e.as_const() == Some(0.0)
}

/// Parameters of one family instance. Unused constants are ignored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EulerFamilySpec {
    pub family: EulerFamily,
    #[serde(default)]
    pub c1: f64,
    #[serde(default)]
    pub c2: f64,
    #[serde(default)]
    pub ct1: f64,
    #[serde(default)]
    pub ct2: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub xi: f64,
    #[serde(default)]
    pub k: f64,
    #[serde(default)]
    pub l: f64,
    /// Optional explicit `C` for the single-phase 3D families; must equal `−c1/c2`.
    #[serde(default, rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default)]
    pub profiles: BTreeMap<String, ClosedForm>,
    #[serde(default = "ClosedForm::zero", skip_serializing_if = "is_zero_cf")]
    pub a: ClosedForm,
    #[serde(default = "ClosedForm::zero", skip_serializing_if = "is_zero_cf")]
    pub b: ClosedForm,
}

/// One algebraic constraint and its value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub constraint: String,
    pub value: f64,
    pub ok: bool,
}

impl ConstraintCheck {
    fn zero(constraint: &str, value: f64) -> ConstraintCheck {
        ConstraintCheck {
            constraint: constraint.into(),
            value,
            ok: value.abs() <= CONSTRAINT_TOL,
        }
    }

    fn nonzero(constraint: &str, value: f64) -> ConstraintCheck {
        ConstraintCheck {
            constraint: constraint.into(),
            value,
            ok: value.abs() > CONSTRAINT_TOL,
        }
    }
}

/// Every constraint checked, in a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintLog {
    pub checks: Vec<ConstraintCheck>,
}

impl ConstraintLog {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn violations(&self) -> Vec<&ConstraintCheck> {
        self.checks.iter().filter(|c| !c.ok).collect()
    }
}

/// `(k, l)` that turn the quadratic-phase family into the weighted one with
/// the same phase: `k = −2c̃1c2²`, `l = 2c1²c̃2`.
pub fn sol4_weights(c1: f64, c2: f64, ct1: f64, ct2: f64) -> (f64, f64) {
    (-2.0 * ct1 * c2 * c2, 2.0 * c1 * c1 * ct2)
}

impl EulerFamilySpec {
    pub fn new(family: EulerFamily) -> EulerFamilySpec {
        EulerFamilySpec {
            family,
            c1: 0.0,
            c2: 0.0,
            ct1: 0.0,
            ct2: 0.0,
            beta: 0.0,
            gamma: 0.0,
            lambda: 0.0,
            xi: 0.0,
            k: 0.0,
            l: 0.0,
            c: None,
            profiles: BTreeMap::new(),
            a: ClosedForm::zero(),
            b: ClosedForm::zero(),
        }
    }

    pub fn with_profile(mut self, name: &str, e: ClosedForm) -> Self {
        self.profiles.insert(name.into(), e);
        self
    }

    pub fn profile(&self, name: &str) -> Result<&ClosedForm> {
        self.profiles.get(name).ok_or_else(|| {
            Error::config(
                format!("profiles.{name}"),
                format!("family {} needs profile {name}", self.family.name()),
            )
        })
    }

    pub fn validate_params(&self) -> ConstraintLog {
        use EulerFamily::*;
        let mut checks = Vec::new();
        match self.family {
            E2D_ISOBARIC => {
                checks.push(ConstraintCheck::zero(
                    "c1*beta + c2*gamma = 0",
                    self.c1 * self.beta + self.c2 * self.gamma,
                ));
            }
            E2D_LINEAR_P => {
                checks.push(ConstraintCheck::zero(
                    "c1*beta + c2*gamma = 0",
                    self.c1 * self.beta + self.c2 * self.gamma,
                ));
                checks.push(ConstraintCheck::zero(
                    "lambda*beta + xi*gamma = 0",
                    self.lambda * self.beta + self.xi * self.gamma,
                ));
            }
            E3D_SOL1 | E3D_SOL2 | E3D_SOL3 => {
                checks.push(ConstraintCheck::nonzero("c2 != 0", self.c2));
                if let Some(c) = self.c {
                    let expect = if self.c2 != 0.0 { -self.c1 / self.c2 } else { f64::NAN };
                    let value = c - expect;
                    checks.push(ConstraintCheck {
                        constraint: "C = -c1/c2".into(),
                        value,
                        ok: value.abs() <= CONSTRAINT_TOL,
                    });
                }
            }
            E3D_SOL4 | E3D_SOL5 => {}
        }
        ConstraintLog { checks }
    }

    /// `A(t) = ∫₀ᵗ a` as a closed form in `t` (variable `t_index`).
    fn big_a(&self, t_index: usize) -> ClosedForm {
        ClosedForm::integral(&self.a, 0.0, &ClosedForm::var(t_index))
    }

    /// Velocity and pressure as closed forms in `(x, y[, z], t)`.
    pub fn flow(&self) -> Result<Flow> {
        use EulerFamily::*;
        let log = self.validate_params();
        if let Some(v) = log.violations().first() {
            return Err(Error::InvalidParameter(format!(
                "{}: constraint {} violated (value {:e})",
                self.family.name(),
                v.constraint,
                v.value
            )));
        }
        let d = self.family.dims();
        let x = ClosedForm::var(0);
        let y = ClosedForm::var(1);
        let z = ClosedForm::var(2);
        let t = ClosedForm::var(d);
        let big_a = self.big_a(d);
        let a_t = self.a.compose(std::slice::from_ref(&t));
        let b_t = self.b.compose(std::slice::from_ref(&t));
        let at = |prof: &ClosedForm, phase: &ClosedForm| prof.compose(std::slice::from_ref(phase));
        match self.family {
            E2D_ISOBARIC | E2D_LINEAR_P => {
                let g = self.profile("g")?;
                let speed = self.beta * self.ct1 + self.gamma * self.ct2;
                let phase = ClosedForm::affine(&[self.beta, self.gamma, -speed], 0.0);
                let gp = at(g, &phase);
                let (lambda, xi) = if self.family == E2D_LINEAR_P {
                    (self.lambda, self.xi)
                } else {
                    (0.0, 0.0)
                };
                let u1 = self.c1 * &gp + lambda * &big_a + self.ct1;
                let u2 = self.c2 * &gp + xi * &big_a + self.ct2;
                let p = -a_t * (lambda * x + xi * y) + b_t;
                Flow::new(2, vec![u1, u2], p)
            }
            E3D_SOL1 | E3D_SOL2 | E3D_SOL3 => {
                let (g, h) = (self.profile("G")?, self.profile("H")?);
                let (c1, c2) = (self.c1, self.c2);
                let c = -c1 / c2;
                // (phase axis with −1, axis with c2, axis holding G)
                let (minus, plus, own) = match self.family {
                    E3D_SOL1 => (1, 2, 0),
                    E3D_SOL2 => (2, 0, 1),
                    _ => (0, 1, 2),
                };
                let mut coef = [0.0; 4];
                coef[minus] = -1.0;
                coef[plus] = c2;
                coef[3] = c1;
                let phase = ClosedForm::affine(&coef, 0.0);
                let gp = at(g, &phase);
                let hp = at(h, &phase) - &big_a;
                let mut u = vec![ClosedForm::zero(); 3];
                u[own] = gp;
                u[plus] = &hp / c2 + c;
                u[minus] = hp;
                let xs = [&x, &y, &z];
                let p = a_t * (xs[minus] + xs[plus] / c2) + b_t;
                Flow::new(3, u, p)
            }
            E3D_SOL4 | E3D_SOL5 => {
                let g = self.profile("G")?;
                let (k, l) = if self.family == E3D_SOL4 {
                    sol4_weights(self.c1, self.c2, self.ct1, self.ct2)
                } else {
                    (self.k, self.l)
                };
                let phase = ClosedForm::affine(&[k * self.c1 + l * self.c2, -k, -l, k * self.ct1 + l * self.ct2], 0.0);
                let u1 = at(g, &phase) - &big_a;
                let u2 = self.c1 * &u1 + self.ct1;
                let u3 = self.c2 * &u1 + self.ct2;
                let p = a_t * (x + self.c1 * y + self.c2 * z) + b_t;
                Flow::new(3, vec![u1, u2, u3], p)
            }
        }
    }

    /// The quadratic-phase family expressed with explicit weights.
    pub fn sol4_as_sol5(&self) -> Result<EulerFamilySpec> {
        if self.family != EulerFamily::E3D_SOL4 {
            return Err(Error::InvalidParameter(format!(
                "{} is not E3D_SOL4",
                self.family.name()
            )));
        }
        let (k, l) = sol4_weights(self.c1, self.c2, self.ct1, self.ct2);
        let mut s = self.clone();
        s.family = EulerFamily::E3D_SOL5;
        s.k = k;
        s.l = l;
        Ok(s)
    }
}

/// Velocity and pressure sampled at time `t`.
pub fn generate(spec: &EulerFamilySpec, grid: &Grid, t: f64) -> Result<(VectorField, ScalarField)> {
    spec.flow()?.sample(grid, t)
}

/// Momentum and divergence residuals of the inviscid equations.
pub fn euler_residual_with_pressure(
    spec: &EulerFamilySpec,
    grid: &Grid,
    t: f64,
    path: EvalPath,
) -> Result<FlowResidual> {
    spec.flow()?.residual(grid, t, 0.0, path)
}

/// Comparison of `u(·, 0)` with the initial-value form the family solves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialFormCheck {
    pub form: String,
    pub mismatch: Vec<ResidualReport>,
    pub ok: bool,
}

/// Tolerance for the initial-value structure check.
pub const IC_TOL: f64 = 1e-12;

/// Checks that `u(·, 0)` has the structure of the initial data the family
/// solves: `(g1, c1 g1 + c̃1, c2 g1 + c̃2)` with `g1 = G(·)` of the spatial
/// phase for the weighted family, or `(G(c2 z − y), H(c2 z − y), H/c2 − c1/c2)`
/// (up to `A(0)`) for the first single-phase family.
pub fn theorem2_ic_check(spec: &EulerFamilySpec, grid: &Grid) -> Result<InitialFormCheck> {
    use EulerFamily::*;
    let (u, _) = generate(spec, grid, 0.0)?;
    let a0 = spec.big_a(0).eval(&[0.0])?;
    let report = |name: &str, vals: Vec<f64>| ResidualReport::from_values(name, &vals, grid.h_max());
    let n = grid.len();
    let comp = |i: usize, k: usize| u.component(i).values()[k];
    let (form, mismatch) = match spec.family {
        E3D_SOL4 | E3D_SOL5 => {
            let s = if spec.family == E3D_SOL4 {
                spec.sol4_as_sol5()?
            } else {
                spec.clone()
            };
            let phase = ClosedForm::affine(&[s.k * s.c1 + s.l * s.c2, -s.k, -s.l], 0.0);
            let g1 = crate::fields::eval_closed_form(&s.profile("G")?.compose(&[phase]), grid, &[])?;
            (
                "g = (g1, c1 g1 + ct1, c2 g1 + ct2), g1 = G((k c1 + l c2) x - k y - l z)".to_string(),
                vec![
                    report("g1", (0..n).map(|k| comp(0, k) - (g1.values()[k] - a0)).collect()),
                    report(
                        "u2 - c1 u1 - ct1",
                        (0..n).map(|k| comp(1, k) - s.c1 * comp(0, k) - s.ct1).collect(),
                    ),
                    report(
                        "u3 - c2 u1 - ct2",
                        (0..n).map(|k| comp(2, k) - s.c2 * comp(0, k) - s.ct2).collect(),
                    ),
                ],
            )
        }
        E3D_SOL1 => {
            let phase = ClosedForm::affine(&[0.0, -1.0, spec.c2], 0.0);
            let g1 =
                crate::fields::eval_closed_form(&spec.profile("G")?.compose(std::slice::from_ref(&phase)), grid, &[])?;
            let g2 = crate::fields::eval_closed_form(&spec.profile("H")?.compose(&[phase]), grid, &[])?;
            (
                "g = (G(c2 z - y), H(c2 z - y), g2/c2 - c1/c2)".to_string(),
                vec![
                    report("g1", (0..n).map(|k| comp(0, k) - g1.values()[k]).collect()),
                    report("g2", (0..n).map(|k| comp(1, k) - (g2.values()[k] - a0)).collect()),
                    report(
                        "u3 - u2/c2 + c1/c2",
                        (0..n)
                            .map(|k| comp(2, k) - comp(1, k) / spec.c2 + spec.c1 / spec.c2)
                            .collect(),
                    ),
                ],
            )
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "no initial-value form is stated for {}",
                other.name()
            )))
        }
    };
    let ok = mismatch.iter().all(|r| r.within(IC_TOL));
    Ok(InitialFormCheck { form, mismatch, ok })
}

fn random_profile(rng: &mut ChaCha8Rng) -> ClosedForm {
    let x = ClosedForm::var(0);
    let amp = rng.gen_range(0.3..1.5);
    let freq = rng.gen_range(0.3..1.5);
    let shift = rng.gen_range(-1.0..1.0);
    let arg = freq * x + shift;
    match rng.gen_range(0..4) {
        0 => amp * arg.sin(),
        1 => amp * arg.cos(),
        2 => amp * arg.tanh(),
        _ => amp * (-(arg.pow(2.0))).exp(),
    }
}

fn random_time_function(rng: &mut ChaCha8Rng) -> ClosedForm {
    let t = ClosedForm::var(0);
    let c = rng.gen_range(-1.0..1.0);
    match rng.gen_range(0..4) {
        0 => ClosedForm::zero(),
        1 => ClosedForm::constant(c),
        2 => c * (rng.gen_range(0.5..2.0) * t).cos(),
        _ => c * t,
    }
}

fn away_from_zero(rng: &mut ChaCha8Rng) -> f64 {
    let m = rng.gen_range(0.5..2.0);
    if rng.gen_bool(0.5) {
        m
    } else {
        -m
    }
}

/// A random valid instance. Constraints hold by construction.
pub fn random_instance(family: EulerFamily, rng: &mut ChaCha8Rng) -> EulerFamilySpec {
    use EulerFamily::*;
    let mut s = EulerFamilySpec::new(family);
    s.ct1 = rng.gen_range(-2.0..2.0);
    s.ct2 = rng.gen_range(-2.0..2.0);
    match family {
        E2D_ISOBARIC | E2D_LINEAR_P => {
            s.beta = rng.gen_range(-2.0..2.0);
            s.gamma = rng.gen_range(-2.0..2.0);
            let r = rng.gen_range(-2.0..2.0);
            s.c1 = r * s.gamma;
            s.c2 = -r * s.beta;
            let q = rng.gen_range(-2.0..2.0);
            s.lambda = q * s.gamma;
            s.xi = -q * s.beta;
            s = s.with_profile("g", random_profile(rng));
        }
        E3D_SOL1 | E3D_SOL2 | E3D_SOL3 => {
            s.c1 = rng.gen_range(-2.0..2.0);
            s.c2 = away_from_zero(rng);
            let (g, h) = (random_profile(rng), random_profile(rng));
            s = s.with_profile("G", g).with_profile("H", h);
        }
        E3D_SOL4 | E3D_SOL5 => {
            s.c1 = rng.gen_range(-1.0..1.0);
            s.c2 = rng.gen_range(-1.0..1.0);
            s.k = rng.gen_range(-1.0..1.0);
            s.l = rng.gen_range(-1.0..1.0);
            s = s.with_profile("G", random_profile(rng));
        }
    }
    if family != E2D_ISOBARIC {
        s.a = random_time_function(rng);
    }
    s.b = random_time_function(rng);
    s
}

/// `count` random instances from a seeded stream.
pub fn random_instances(family: EulerFamily, seed: u64, count: usize) -> Vec<EulerFamilySpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(family, &mut rng)).collect()
}
