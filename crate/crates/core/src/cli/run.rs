use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::{CheckResult, ConvergenceEntry, Level, RunConfig, RunReport, DEFAULT_TOL, SCHEMA};
use crate::ac_system::{
    catalog_example, dependence_check, equipartition_residual_vec_of, four_phase_limits, gradient_form_builder,
    ratio_and_detgrad, system_residual_of, tilted_limits, CatalogEntry, CatalogParams, Potential2D, SystemSolution,
};
use crate::allen_cahn::{ac_residual, equipartition_residual, radial_candidate, solve_profile, Potential1D};
use crate::eikonal_euler::{eikonal_to_euler, euler_residual, euler_residual_sampled, mean_curvature, EikonalSolution};
use crate::euler_family::{
    euler_residual_with_pressure, random_instances, theorem2_ic_check, ConstraintLog, EulerFamily, EulerFamilySpec,
    IC_TOL,
};
use crate::expr::ClosedForm;
use crate::fields::{convergence_order, Analytic, ConvergenceOutcome, Differentiable, Grid, ResidualReport, Sampled};
use crate::flow::EvalPath;
use crate::leray::{
    cross_identity_residual, helmholtz_decompose, leray_project, sigma_family, spectral_divergence, PeriodicField2D,
    SigmaFamilySpec,
};
use crate::ns_family::{ivp_limit_check, Ns3dProfileCoefficients, NsFamily, NsFamilySpec, KERNEL_NORMALIZATION};
use crate::{Error, Result};

/// Tolerance for far-field limits.
const LIMIT_TOL: f64 = 1e-6;
/// Tolerance for the heat-kernel Navier–Stokes residual.
const HEAT_TOL: f64 = 1e-8;
/// Tolerance for the spectral identities.
const SPECTRAL_TOL: f64 = 1e-12;
/// Tolerance for the numerical profile against the exact front.
const PROFILE_TOL: f64 = 1e-8;

enum Prepared {
    Euler(EulerFamilySpec),
    Ns {
        spec: NsFamilySpec,
        times: Vec<f64>,
    },
    System {
        entry: CatalogEntry,
        h: Option<ClosedForm>,
        fixed: Vec<f64>,
    },
    GradientForm {
        f: ClosedForm,
        g: ClosedForm,
        w: Potential2D,
    },
    ScalarTanh {
        direction: Vec<f64>,
    },
    Radial {
        u: ClosedForm,
    },
    Eikonal(EikonalSolution),
    Sigma(SigmaFamilySpec),
    Leray {
        count: usize,
        kmax: i32,
    },
}

fn params<T: DeserializeOwned>(v: serde_json::Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::config("params", e.to_string()))
}

fn object(cfg: &RunConfig) -> Result<serde_json::Map<String, serde_json::Value>> {
    match &cfg.params {
        serde_json::Value::Null => Ok(serde_json::Map::new()),
        serde_json::Value::Object(m) => Ok(m.clone()),
        _ => Err(Error::config("params", "expected an object or null")),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemParams {
    #[serde(flatten)]
    catalog: CatalogParams,
    #[serde(default)]
    h: Option<ClosedForm>,
    #[serde(default)]
    fixed: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GradientFormParams {
    f: ClosedForm,
    g: ClosedForm,
    potential: serde_json::Value,
}

fn default_ns(family: NsFamily) -> NsFamilySpec {
    let mut s;
    match family {
        NsFamily::NS2D => {
            s = NsFamilySpec::new(family, 0.5);
            (s.c1, s.c2) = (0.7, 1.2);
            let t = ClosedForm::var(1);
            let g = (-0.5 * (0.7f64 * 0.7 + 1.0) * &t).exp() * ClosedForm::affine(&[1.0, -1.2], 0.0).sin();
            s = s.with_profile("g", g);
        }
        NsFamily::NS3D => {
            s = NsFamilySpec::new(family, 0.5);
            (s.c1, s.c2, s.ct1, s.ct2) = (1.0, 2.0, 0.5, 0.3);
            let co = Ns3dProfileCoefficients::new(1.0, 2.0, 0.5, 0.3);
            s = s.with_profile("g", co.fourier_mode(0.5, 1.0, 1.0));
        }
        NsFamily::NS3D_IVP => {
            s = NsFamilySpec::new(family, 1.0);
            (s.c1, s.c2, s.ct1, s.ct2) = (1.0, 1.0, 1.0, -1.0);
            s = s.with_profile("H", ClosedForm::var(0).sin());
        }
    }
    s
}

fn default_witness(id: &str, params: &CatalogParams) -> Option<ClosedForm> {
    let (s, t) = (ClosedForm::var(0), ClosedForm::var(1));
    match id {
        "product-cosh-sin" | "fourwell-four-phase" | "fourwell-four-phase-printed" => Some(s * t - 1.0),
        "fourwell-tilted" | "fourwell-tilted-printed" => Some(s + t - 2.0),
        "separable-planar" => Some(s - params.slopes.map(|c| c[0]).unwrap_or(0.5)),
        _ => None,
    }
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let id = cfg.target.as_str();
    if let Some(f) = EulerFamily::from_name(id) {
        if cfg.params.is_null() {
            return Ok(Prepared::Euler(random_instances(f, cfg.seed, 1).remove(0)));
        }
        let mut m = object(cfg)?;
        m.insert("family".into(), id.into());
        return Ok(Prepared::Euler(params(m.into())?));
    }
    if let Some(f) = NsFamily::from_name(id) {
        let mut m = object(cfg)?;
        let times = match m.remove("times") {
            Some(v) => params(v)?,
            None => vec![0.1, 0.01, 0.001],
        };
        let spec = if m.is_empty() {
            default_ns(f)
        } else {
            m.insert("family".into(), id.into());
            params(m.into())?
        };
        return Ok(Prepared::Ns { spec, times });
    }
    Ok(match id {
        "gradient-form" => {
            let p: GradientFormParams = params(cfg.params.clone())?;
            let w = match &p.potential {
                serde_json::Value::String(name) => Potential2D::by_name(name)
                    .ok_or_else(|| Error::config("params.potential", format!("unknown potential `{name}`")))?,
                other => Potential2D::custom(params(other.clone())?),
            };
            Prepared::GradientForm { f: p.f, g: p.g, w }
        }
        "scalar-tanh" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct P {
                direction: Option<Vec<f64>>,
            }
            let p: P = if cfg.params.is_null() {
                P { direction: None }
            } else {
                params(cfg.params.clone())?
            };
            let mut direction = p.direction.unwrap_or_else(|| {
                let mut d = vec![0.0; cfg.grid.dims()];
                d[0] = 1.0;
                d
            });
            let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            if direction.len() != cfg.grid.dims() || norm == 0.0 {
                return Err(Error::config(
                    "params.direction",
                    "need a nonzero vector matching the grid dimension",
                ));
            }
            direction.iter_mut().for_each(|v| *v /= norm);
            Prepared::ScalarTanh { direction }
        }
        "radial-candidate" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct P {
                center: Option<Vec<f64>>,
                c: Option<f64>,
            }
            let p: P = if cfg.params.is_null() {
                P { center: None, c: None }
            } else {
                params(cfg.params.clone())?
            };
            let center = p.center.unwrap_or_else(|| vec![0.0; cfg.grid.dims()]);
            Prepared::Radial {
                u: radial_candidate(&center, p.c.unwrap_or(1.0)),
            }
        }
        "eikonal-euler" => Prepared::Eikonal(params(cfg.params.clone())?),
        "sigma-family" => Prepared::Sigma(params(cfg.params.clone())?),
        "leray-random" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct P {
                count: Option<usize>,
                kmax: Option<i32>,
            }
            let p: P = if cfg.params.is_null() {
                P {
                    count: None,
                    kmax: None,
                }
            } else {
                params(cfg.params.clone())?
            };
            Prepared::Leray {
                count: p.count.unwrap_or(20),
                kmax: p.kmax.unwrap_or(6),
            }
        }
        _ => {
            let p: SystemParams = if cfg.params.is_null() {
                SystemParams {
                    catalog: CatalogParams::default(),
                    h: None,
                    fixed: None,
                }
            } else {
                params(cfg.params.clone())?
            };
            let entry = catalog_example(id, &p.catalog)?;
            let h = p.h.or_else(|| default_witness(id, &p.catalog));
            Prepared::System {
                entry,
                h,
                fixed: p.fixed.unwrap_or_else(|| vec![-1.0, 0.0, 1.0]),
            }
        }
    })
}

fn pair(u: &SystemSolution, grid: &Grid, path: EvalPath) -> Result<[Box<dyn Differentiable>; 2]> {
    let mk = |e: &ClosedForm| -> Result<Box<dyn Differentiable>> {
        let a = Analytic::new(e.clone(), grid.clone());
        Ok(match path {
            EvalPath::Analytic => Box::new(a),
            EvalPath::Sampled { accuracy, .. } => Box::new(Sampled::new(a.values()?, accuracy)),
        })
    };
    Ok([mk(&u.u[0])?, mk(&u.u[1])?])
}

fn scalar(e: &ClosedForm, grid: &Grid, path: EvalPath) -> Result<Box<dyn Differentiable>> {
    let a = Analytic::new(e.clone(), grid.clone());
    Ok(match path {
        EvalPath::Analytic => Box::new(a),
        EvalPath::Sampled { accuracy, .. } => Box::new(Sampled::new(a.values()?, accuracy)),
    })
}

fn tanh_front(direction: &[f64]) -> ClosedForm {
    ClosedForm::affine(&direction.iter().map(|d| d / SQRT_2).collect::<Vec<_>>(), 0.0).tanh()
}

/// Residual reports for checks that have both an exact and a finite-difference
/// path; `None` when `check` is not refinable for the target.
fn residual_reports(
    p: &Prepared,
    check: &str,
    grid: &Grid,
    t: f64,
    path: EvalPath,
) -> Option<Result<Vec<ResidualReport>>> {
    let out = match (p, check) {
        (Prepared::Euler(spec), "euler") => euler_residual_with_pressure(spec, grid, t, path).map(|r| r.reports()),
        (Prepared::Ns { spec, .. }, "navier_stokes") => spec.residual(grid, t, path).map(|r| r.residual.momentum),
        (Prepared::System { entry, .. }, "system") => pair(&entry.solution, grid, path)
            .and_then(|[a, b]| system_residual_of([a.as_ref(), b.as_ref()], &entry.potential))
            .map(|r| vec![r]),
        (Prepared::System { entry, .. }, "cross_identity") => pair(&entry.solution, grid, path)
            .and_then(|[a, b]| cross_identity_residual(a.as_ref(), b.as_ref()))
            .map(|r| vec![r]),
        (Prepared::GradientForm { f, g, w }, "system") => {
            let u = crate::ac_system::gradient_form(f, g);
            pair(&u, grid, path)
                .and_then(|[a, b]| system_residual_of([a.as_ref(), b.as_ref()], w))
                .map(|r| vec![r])
        }
        (Prepared::GradientForm { f, g, .. }, "cross_identity") => {
            let u = crate::ac_system::gradient_form(f, g);
            pair(&u, grid, path)
                .and_then(|[a, b]| cross_identity_residual(a.as_ref(), b.as_ref()))
                .map(|r| vec![r])
        }
        (Prepared::ScalarTanh { direction }, "ac") => scalar(&tanh_front(direction), grid, path)
            .and_then(|u| ac_residual(u.as_ref(), &Potential1D::double_well()))
            .map(|r| vec![r]),
        (Prepared::Radial { u }, "ac") => scalar(u, grid, path)
            .and_then(|u| ac_residual(u.as_ref(), &Potential1D::double_well()))
            .map(|r| vec![r]),
        (Prepared::Eikonal(sol), "euler") => eikonal_to_euler(sol, grid).and_then(|f| match path {
            EvalPath::Analytic => euler_residual(&f, grid).map(|r| vec![r]),
            EvalPath::Sampled { accuracy, .. } => euler_residual_sampled(&f, grid, accuracy).map(|r| vec![r]),
        }),
        _ => return None,
    };
    Some(out)
}

struct Outcome {
    checks: Vec<CheckResult>,
    constraints: Option<ConstraintLog>,
    flags: BTreeMap<String, String>,
}

fn constraint_result(log: &ConstraintLog) -> CheckResult {
    let violations = log.violations();
    let value = violations.iter().fold(0.0f64, |m, c| m.max(c.value.abs()));
    CheckResult {
        name: "constraints".into(),
        pass: log.ok(),
        tol: 0.0,
        value: if log.ok() { 0.0 } else { value },
        reports: Vec::new(),
        error: None,
        details: (!log.ok())
            .then(|| serde_json::json!(violations.iter().map(|c| c.constraint.clone()).collect::<Vec<_>>())),
    }
}

fn one_check(p: &Prepared, cfg: &RunConfig, check: &str, path: EvalPath, out: &mut Outcome) -> Result<CheckResult> {
    let grid = &cfg.grid;
    if let Some(reports) = residual_reports(p, check, grid, cfg.t, path) {
        let default = match p {
            Prepared::Ns { spec, .. } if !spec.profiles.contains_key("g") => HEAT_TOL,
            _ => DEFAULT_TOL,
        };
        return Ok(CheckResult::from_reports(check, cfg.tol(check, default), reports?));
    }
    let tol = |d: f64| cfg.tol(check, d);
    Ok(match (p, check) {
        (Prepared::Euler(spec), "constraints") => {
            let log = spec.validate_params();
            out.constraints = Some(log.clone());
            constraint_result(&log)
        }
        (Prepared::Euler(spec), "initial_form") => {
            let r = theorem2_ic_check(spec, grid)?;
            CheckResult::from_reports(check, tol(IC_TOL), r.mismatch)
                .with_details(serde_json::json!({ "form": r.form }))
        }
        (Prepared::Ns { spec, .. }, "constraints") => {
            let log = spec.validate_params();
            out.constraints = Some(log.clone());
            constraint_result(&log)
        }
        (Prepared::Ns { spec, .. }, "preflight") => match spec.preflight(grid, cfg.t)? {
            Some(r) => CheckResult::from_reports(check, tol(DEFAULT_TOL), vec![r]),
            None => CheckResult::from_reports(check, tol(DEFAULT_TOL), Vec::new()).with_details(serde_json::json!(
                "heat-kernel profile; no closed-form profile equation"
            )),
        },
        (Prepared::Ns { spec, .. }, "divergence") => {
            let r = spec.residual(grid, cfg.t, path)?;
            if let Some(k) = &r.kernel_normalization {
                out.flags.insert("heat_kernel".into(), k.clone());
            }
            CheckResult::from_reports(check, tol(DEFAULT_TOL), vec![r.residual.divergence])
        }
        (Prepared::Ns { spec, times }, "ivp_limit") => {
            let r = ivp_limit_check(spec, grid, times)?;
            out.flags.insert("heat_kernel".into(), KERNEL_NORMALIZATION.into());
            let t = tol(HEAT_TOL);
            let worst = r.entries.iter().fold(0.0f64, |m, e| m.max(e.residual.linf()));
            CheckResult {
                name: check.into(),
                pass: r.monotone && worst <= t,
                tol: t,
                value: worst,
                reports: Vec::new(),
                error: None,
                details: Some(serde_json::to_value(&r)?),
            }
        }
        (Prepared::System { entry, .. }, "equipartition") => {
            let [a, b] = pair(&entry.solution, grid, path)?;
            CheckResult::from_reports(
                check,
                tol(DEFAULT_TOL),
                vec![equipartition_residual_vec_of(
                    [a.as_ref(), b.as_ref()],
                    &entry.potential,
                )?],
            )
        }
        (Prepared::System { entry, .. }, "detgrad") => {
            let r = ratio_and_detgrad(&entry.solution, grid)?;
            let [c1, c2] = r.proof_chain;
            CheckResult::from_reports(check, tol(DEFAULT_TOL), vec![r.det, c1, c2])
                .with_details(serde_json::json!({ "min_denominator": r.ratio.min_denominator }))
        }
        (Prepared::System { entry, h, .. }, "dependence") => {
            let h = h
                .as_ref()
                .ok_or_else(|| Error::config("params.h", "no witness h(s, t) known for this target"))?;
            let r = dependence_check(&entry.solution, h, grid)?;
            let mut reports = vec![r.witness];
            // the weight condition is only implied when both ratios are genuinely coupled
            if entry.solution.source != "separable-planar" {
                reports.push(r.weights);
            }
            CheckResult::from_reports(check, tol(DEFAULT_TOL), reports)
        }
        (Prepared::System { entry, fixed, .. }, "limits") => {
            let r = if entry.solution.source.starts_with("fourwell-tilted") {
                let k = if entry.solution.source.ends_with("-printed") {
                    1.0
                } else {
                    1.0 / (2.0 * SQRT_2)
                };
                tilted_limits(&entry.solution, &(k * ClosedForm::var(0)).tanh(), fixed)?
            } else {
                four_phase_limits(&entry.solution, fixed)?
            };
            let t = tol(LIMIT_TOL);
            CheckResult {
                name: check.into(),
                pass: r.max_error <= t,
                tol: t,
                value: r.max_error,
                reports: Vec::new(),
                error: None,
                details: Some(serde_json::to_value(&r)?),
            }
        }
        (Prepared::GradientForm { f, g, w }, "first_integral") => {
            let (_, r) = gradient_form_builder(f, g, w, grid)?;
            CheckResult::from_reports(check, tol(DEFAULT_TOL), vec![r.first_integral])
                .with_details(serde_json::json!({ "c": r.c }))
        }
        (Prepared::ScalarTanh { direction }, "equipartition") => {
            let u = scalar(&tanh_front(direction), grid, path)?;
            CheckResult::from_reports(
                check,
                tol(DEFAULT_TOL),
                vec![equipartition_residual(u.as_ref(), &Potential1D::double_well())?],
            )
        }
        (Prepared::Radial { u }, "equipartition") => {
            let u = scalar(u, grid, path)?;
            CheckResult::from_reports(
                check,
                tol(DEFAULT_TOL),
                vec![equipartition_residual(u.as_ref(), &Potential1D::double_well())?],
            )
        }
        (Prepared::ScalarTanh { direction }, "mean_curvature") => {
            let k = mean_curvature(&tanh_front(direction), grid)?;
            CheckResult::from_reports(
                check,
                tol(DEFAULT_TOL),
                vec![ResidualReport::from_field("mean_curvature", &k)],
            )
        }
        (Prepared::ScalarTanh { direction }, "profile") => {
            let prof = solve_profile(
                &Potential1D::double_well(),
                direction,
                0.0,
                1.0 / SQRT_2,
                (-5.0, 5.0),
                201,
            )?;
            let err = prof.max_error(&(ClosedForm::var(0) / SQRT_2).tanh())?;
            let t = tol(PROFILE_TOL);
            let value = err.max(prof.energy_drift);
            CheckResult {
                name: check.into(),
                pass: value <= t,
                tol: t,
                value,
                reports: Vec::new(),
                error: None,
                details: Some(serde_json::json!({ "max_error": err, "energy_drift": prof.energy_drift })),
            }
        }
        (Prepared::Eikonal(sol), "eikonal") => {
            CheckResult::from_reports(check, tol(DEFAULT_TOL), vec![sol.check(grid)?])
        }
        (Prepared::Sigma(spec), _) => {
            let r = sigma_family(spec, grid)?;
            let rep = match check {
                "sigma_linear" => r.linear,
                "sigma_full" => r.full,
                _ => r.printed_form,
            };
            CheckResult::from_reports(check, tol(DEFAULT_TOL), vec![rep]).with_details(serde_json::json!({ "c": r.c }))
        }
        (Prepared::Leray { count, kmax }, _) => leray_check(check, grid, cfg.seed, *count, *kmax, cfg)?,
        _ => {
            return Err(Error::config(
                "checks",
                format!("check `{check}` is not available for target {}", cfg.target),
            ))
        }
    })
}

fn band_limited(rng: &mut ChaCha8Rng, grid: &Grid, kmax: i32) -> Result<PeriodicField2D> {
    use rand::Rng;
    let (lx, ly) = (grid.hi(0) - grid.lo(0), grid.hi(1) - grid.lo(1));
    let tau = 2.0 * std::f64::consts::PI;
    let mut comps = Vec::new();
    for _ in 0..2 {
        let mut terms = Vec::new();
        for kx in -kmax..=kmax {
            for ky in 0..=kmax {
                terms.push((
                    tau * kx as f64 / lx,
                    tau * ky as f64 / ly,
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.0..tau),
                ));
            }
        }
        comps.push(crate::fields::ScalarField::from_fn(grid, |p| {
            terms
                .iter()
                .map(|(a, b, c, ph)| c * (a * p[0] + b * p[1] + ph).cos())
                .sum()
        })?);
    }
    PeriodicField2D::new(comps)
}

fn leray_check(check: &str, grid: &Grid, seed: u64, count: usize, kmax: i32, cfg: &RunConfig) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let u = band_limited(&mut rng, grid, kmax)?;
        let v = match check {
            "recombination" => helmholtz_decompose(&u)?.recombination_error(&u)?,
            "orthogonality" => helmholtz_decompose(&u)?.orthogonality()?.abs(),
            "idempotence" => {
                let p = leray_project(&u)?;
                leray_project(&p)?.sub(&p)?.linf()
            }
            _ => spectral_divergence(&leray_project(&u)?)?.linf(),
        };
        worst = worst.max(v);
    }
    let t = cfg.tol(
        check,
        if check == "divergence" {
            DEFAULT_TOL
        } else {
            SPECTRAL_TOL
        },
    );
    Ok(CheckResult {
        name: check.into(),
        pass: worst <= t,
        tol: t,
        value: worst,
        reports: Vec::new(),
        error: None,
        details: Some(serde_json::json!({ "fields": count, "kmax": kmax })),
    })
}

fn finish(
    cfg: &RunConfig,
    command: &str,
    out: Outcome,
    convergence: Vec<ConvergenceEntry>,
    start: Instant,
) -> RunReport {
    let pass = out.checks.iter().all(|c| c.pass) && convergence.iter().all(|c| c.pass);
    RunReport {
        schema: SCHEMA,
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config: cfg.clone(),
        constraints: out.constraints,
        checks: out.checks,
        convergence,
        flags: out.flags,
        pass,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// Runs every configured check. Check failures, including errors raised by
/// a check, become failing entries; only config problems return `Err`.
pub fn run_verify(cfg: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    cfg.validate()?;
    let prepared = prepare(cfg)?;
    let path = cfg.path.unwrap_or(EvalPath::Analytic);
    let mut out = Outcome {
        checks: Vec::new(),
        constraints: None,
        flags: BTreeMap::new(),
    };
    for check in cfg.checks() {
        let r = match one_check(&prepared, cfg, &check, path, &mut out) {
            Ok(r) => r,
            Err(e @ Error::Config { .. }) => return Err(e),
            Err(e) => CheckResult::failed(&check, cfg.tol(&check, DEFAULT_TOL), &e),
        };
        out.checks.push(r);
    }
    Ok(finish(cfg, "verify", out, Vec::new(), start))
}

/// Residuals of every refinable check on each refinement level, with the
/// observed order. Finite differences use `cfg.accuracy` unless the config
/// asks for the exact path, in which case every level should saturate.
pub fn run_converge(cfg: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    cfg.validate()?;
    if cfg.refinement.len() < 3 {
        return Err(Error::config(
            "refinement",
            "a convergence study needs at least 3 levels",
        ));
    }
    let prepared = prepare(cfg)?;
    let path = match cfg.path {
        Some(EvalPath::Analytic) => EvalPath::Analytic,
        Some(p @ EvalPath::Sampled { .. }) => p,
        None => EvalPath::Sampled {
            accuracy: cfg.accuracy,
            delta: 1e-4,
        },
    };
    let grids: Vec<Grid> = cfg
        .refinement
        .iter()
        .map(|&n| {
            let g = &cfg.grid;
            let d = g.dims();
            Grid::new(
                &vec![n; d],
                &(0..d).map(|a| g.lo(a)).collect::<Vec<_>>(),
                &(0..d).map(|a| g.hi(a)).collect::<Vec<_>>(),
                &(0..d).map(|a| g.periodic(a)).collect::<Vec<_>>(),
            )
        })
        .collect::<Result<_>>()?;
    let mut entries = Vec::new();
    for check in cfg.checks() {
        if residual_reports(&prepared, &check, &grids[0], cfg.t, path).is_none() {
            continue;
        }
        let mut levels = Vec::new();
        for (g, &n) in grids.iter().zip(&cfg.refinement) {
            let reports = residual_reports(&prepared, &check, g, cfg.t, path).expect("refinable")?;
            let linf = reports.iter().fold(0.0f64, |m, r| m.max(r.linf));
            levels.push(Level { n, h: g.h_max(), linf });
        }
        let outcome = convergence_order(&levels.iter().map(|l| (l.h, l.linf)).collect::<Vec<_>>())?;
        let (expected, order_tol, pass) = match path {
            EvalPath::Analytic => (
                None,
                0.0,
                outcome == ConvergenceOutcome::Saturated || levels.iter().all(|l| l.linf <= DEFAULT_TOL),
            ),
            EvalPath::Sampled { accuracy, .. } => {
                let p = accuracy as f64;
                let expected = cfg.tol("order", p);
                let band = cfg.tol("order_tol", 0.075 * p);
                let pass = match outcome {
                    ConvergenceOutcome::Slope(s) => (s - expected).abs() <= band,
                    ConvergenceOutcome::Saturated => true,
                };
                (Some(expected), band, pass)
            }
        };
        entries.push(ConvergenceEntry {
            check,
            levels,
            outcome,
            expected_order: expected,
            order_tol,
            pass,
        });
    }
    if entries.is_empty() {
        return Err(Error::config(
            "checks",
            format!("target {} has no refinable checks among those requested", cfg.target),
        ));
    }
    let out = Outcome {
        checks: Vec::new(),
        constraints: None,
        flags: BTreeMap::new(),
    };
    Ok(finish(cfg, "converge", out, entries, start))
}
