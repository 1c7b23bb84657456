use serde::Serialize;

use crate::{Error, Result};

/// A runnable target with its checks.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogItem {
    pub id: &'static str,
    pub description: &'static str,
    /// Parameter block summary.
    pub params: &'static str,
    pub checks: &'static [&'static str],
    pub default_checks: &'static [&'static str],
    /// Required grid dimension, if fixed.
    pub dims: Option<usize>,
}

const EULER_2D: &[&str] = &["constraints", "euler"];
const EULER_3D_IC: &[&str] = &["constraints", "euler", "initial_form"];
const SYSTEM: &[&str] = &["system", "equipartition", "detgrad", "dependence", "cross_identity"];
const SYSTEM_LIMITS: &[&str] = &[
    "system",
    "equipartition",
    "detgrad",
    "dependence",
    "cross_identity",
    "limits",
];
const SYSTEM_NO_H: &[&str] = &["system", "equipartition", "detgrad", "cross_identity"];

const EULER_PARAMS: &str = "EulerFamilySpec fields without `family` (c1, c2, ct1, ct2, beta, gamma, lambda, xi, k, l, C, profiles, a, b); null draws a seeded random instance";
const SYSTEM_PARAMS: &str =
    "optional terms [[c, a, b], ...], phase, radial_w, slopes, witness h(s, t), fixed offsets for limits";

macro_rules! item {
    ($id:expr, $desc:expr, $params:expr, $checks:expr, $defaults:expr, $dims:expr) => {
        CatalogItem {
            id: $id,
            description: $desc,
            params: $params,
            checks: $checks,
            default_checks: $defaults,
            dims: $dims,
        }
    };
}

static CATALOG: &[CatalogItem] = &[
    item!("E2D_ISOBARIC", "planar Euler, travelling profile, constant pressure", EULER_PARAMS, EULER_2D, EULER_2D, Some(2)),
    item!("E2D_LINEAR_P", "planar Euler, travelling profile, pressure linear in space", EULER_PARAMS, EULER_2D, EULER_2D, Some(2)),
    item!("E3D_SOL1", "3D Euler, two profiles of the phase c1 t - y + c2 z", EULER_PARAMS, EULER_3D_IC, EULER_3D_IC, Some(3)),
    item!("E3D_SOL2", "3D Euler, two profiles of the phase c1 t - z + c2 x", EULER_PARAMS, EULER_2D, EULER_2D, Some(3)),
    item!("E3D_SOL3", "3D Euler, two profiles of the phase c1 t - x + c2 y", EULER_PARAMS, EULER_2D, EULER_2D, Some(3)),
    item!("E3D_SOL4", "3D Euler, linearly dependent components, quadratic phase weights", EULER_PARAMS, EULER_3D_IC, EULER_3D_IC, Some(3)),
    item!("E3D_SOL5", "3D Euler, linearly dependent components, free phase weights k, l", EULER_PARAMS, EULER_3D_IC, EULER_3D_IC, Some(3)),
    item!(
        "NS2D",
        "planar Navier-Stokes from an advected heat profile g(x - c1 y, t)",
        "NsFamilySpec fields without `family` (mu, c1, c2, profiles g or H, a, b)",
        &["constraints", "preflight", "navier_stokes", "divergence"],
        &["constraints", "preflight", "navier_stokes", "divergence"],
        Some(2)
    ),
    item!(
        "NS3D",
        "3D Navier-Stokes from a two-variable profile g(s, eta, t)",
        "NsFamilySpec fields without `family` (mu, c1, c2, ct1, ct2, profile g, a, b)",
        &["constraints", "preflight", "navier_stokes", "divergence"],
        &["constraints", "preflight", "navier_stokes", "divergence"],
        Some(3)
    ),
    item!(
        "NS3D_IVP",
        "3D Navier-Stokes initial-value family through the heat kernel",
        "NsFamilySpec fields without `family` (mu, c1, c2, ct1, ct2 with ct1 c2 + c1 ct2 = 0, profile H); optional times",
        &["constraints", "navier_stokes", "divergence", "ivp_limit"],
        &["constraints", "navier_stokes", "divergence", "ivp_limit"],
        Some(3)
    ),
    item!("product-cosh-sin", "W = u1 u2: cosh/sin gradient-form solution with equipartition", SYSTEM_PARAMS, SYSTEM, SYSTEM, Some(2)),
    item!("product-exp-trig", "W = u1 u2: exponential/trigonometric family, a_i^2 + b_i^2 = 1", SYSTEM_PARAMS, SYSTEM_NO_H, &["system", "cross_identity"], Some(2)),
    item!("fourwell-four-phase", "four-well potential: solution connecting all four wells", SYSTEM_PARAMS, SYSTEM_LIMITS, SYSTEM_LIMITS, Some(2)),
    item!("fourwell-four-phase-printed", "four-phase field with the tanh scaling as printed (reference only)", SYSTEM_PARAMS, SYSTEM, &["system"], Some(2)),
    item!("fourwell-tilted", "four-well potential: heteroclinic sum along x and the diagonal", SYSTEM_PARAMS, SYSTEM_LIMITS, &["system", "dependence", "limits"], Some(2)),
    item!("fourwell-tilted-printed", "tilted field with the tanh scaling as printed (reference only)", SYSTEM_PARAMS, SYSTEM, &["system"], Some(2)),
    item!("circle-exp", "W = u1^2 + u2^2 - 1: exponential family, a_i^2 + b_i^2 = 2", SYSTEM_PARAMS, SYSTEM_NO_H, &["system"], Some(2)),
    item!("radial-rotation", "radial W(u1^2 + u2^2) with W' < 0: (cos, sin) of a plane phase", SYSTEM_PARAMS, SYSTEM_NO_H, &["system", "equipartition"], Some(2)),
    item!("separable-planar", "decoupled double wells: planar pair U1(c1 x + y), U2(c2 x + y)", SYSTEM_PARAMS, SYSTEM, &["system", "detgrad", "dependence"], Some(2)),
    item!(
        "gradient-form",
        "u = (f(x+y) + g(x-y), f(x+y) - g(x-y)) with a fitted first-integral constant",
        "f, g: one-variable closed forms; potential: PRODUCT | FOURWELL | CIRCLE | RADIAL or W as a closed form",
        &["first_integral", "system", "cross_identity"],
        &["first_integral", "system", "cross_identity"],
        Some(2)
    ),
    item!(
        "scalar-tanh",
        "scalar Allen-Cahn planar tanh front for the double well",
        "direction: unit vector (default e1)",
        &["ac", "equipartition", "mean_curvature", "profile"],
        &["ac", "equipartition", "mean_curvature", "profile"],
        None
    ),
    item!(
        "radial-candidate",
        "negative control: radial tanh((|x| + c)/sqrt 2) is equipartitioned but not a solution",
        "center: point, c: offset",
        &["ac", "equipartition"],
        &["ac", "equipartition"],
        None
    ),
    item!(
        "eikonal-euler",
        "pressureless Euler flow built from an Eikonal solution",
        "v: closed form, g: right-hand side G as a one-variable closed form, time_axis",
        &["eikonal", "euler"],
        &["eikonal", "euler"],
        None
    ),
    item!(
        "sigma-family",
        "stream functions F(cx + y) + G(x - cy) (or A(x) + B(y)) of projected solutions",
        "c1, c2, F, G",
        &["sigma_linear", "sigma_full", "projected_form"],
        &["sigma_linear", "sigma_full", "projected_form"],
        Some(2)
    ),
    item!(
        "leray-random",
        "spectral Helmholtz-Leray decomposition of seeded band-limited periodic fields",
        "count (default 20), kmax (default 6); grid must be periodic with power-of-two sides",
        &["recombination", "orthogonality", "idempotence", "divergence"],
        &["recombination", "orthogonality", "idempotence", "divergence"],
        Some(2)
    ),
];

pub fn catalog() -> &'static [CatalogItem] {
    CATALOG
}

pub(crate) fn lookup(id: &str) -> Result<&'static CatalogItem> {
    CATALOG.iter().find(|i| i.id == id).ok_or_else(|| {
        Error::config(
            "target",
            format!("unknown target `{id}`; run `acflow list` for the catalog"),
        )
    })
}
