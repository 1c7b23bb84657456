//! Acceptance suite. Prints one line per criterion (with indented sub-checks)
//! and exits nonzero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use acflow::ac_system::{
    catalog_example, dependence_check, equipartition_residual_vec, four_phase_limits, ratio_and_detgrad,
    system_residual, tilted_limits, CatalogParams,
};
use acflow::allen_cahn::{
    ac_residual, equipartition_residual, normalize, radial_candidate, solve_profile, Potential1D,
};
use acflow::eikonal_euler::{
    divergence_equivalence_check, eikonal_to_euler, euler_residual, level_set_divergence_of, mean_curvature,
    EikonalSolution,
};
use acflow::euler_family::{euler_residual_with_pressure, random_instances, EulerFamily};
use acflow::fields::{convergence_order, Analytic, ConvergenceOutcome, Grid, ScalarField, ANALYTIC_ZERO};
use acflow::flow::EvalPath;
use acflow::leray::{helmholtz_decompose, leray_project, sigma_family, PeriodicField2D, SigmaFamilySpec};
use acflow::ns_family::{heat_solve_1d, ivp_limit_check, Ns3dProfileCoefficients, NsFamily, NsFamilySpec};
use acflow::{ClosedForm, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn x() -> ClosedForm {
    ClosedForm::var(0)
}
fn y() -> ClosedForm {
    ClosedForm::var(1)
}
fn z() -> ClosedForm {
    ClosedForm::var(2)
}

/// Collects sub-check outcomes for one criterion.
struct Criterion {
    lines: Vec<(bool, String)>,
}

impl Criterion {
    fn new() -> Criterion {
        Criterion { lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, msg: impl Into<String>) {
        self.lines.push((ok, msg.into()));
    }

    /// `value <= tol`
    fn at_most(&mut self, what: &str, value: f64, tol: f64) {
        self.check(value <= tol, format!("{what}: {value:.3e} <= {tol:.0e}"));
    }

    /// `value > floor`
    fn above(&mut self, what: &str, value: f64, floor: f64) {
        self.check(value > floor, format!("{what}: {value:.3e} > {floor:.0e}"));
    }

    fn pass(&self) -> bool {
        !self.lines.is_empty() && self.lines.iter().all(|(ok, _)| *ok)
    }
}

fn eikonal_cases() -> Vec<(&'static str, EikonalSolution, Grid)> {
    let g2 = Grid::cube(2, 17, -1.0, 1.0).unwrap();
    let upper = Grid::new(&[9, 9, 9], &[-1.0, -1.0, 0.5], &[1.0, 1.0, 2.0], &[false; 3]).unwrap();
    let r3 = (x().pow(2.0) + y().pow(2.0) + z().pow(2.0)).sqrt();
    let w = Potential1D::double_well();
    let tanh_front = ((x() + y()) / 2.0).tanh();
    let normalized = normalize(&tanh_front, &w, &g2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let theta: f64 = rng.gen_range(0.1..PI - 0.1);
    let phi: f64 = rng.gen_range(0.0..2.0 * PI);
    let d = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    let g3 = Grid::cube(3, 9, -1.0, 1.0).unwrap();
    vec![
        (
            "linear",
            EikonalSolution::new(0.6 * x() + 0.8 * y(), ClosedForm::one(), 1),
            g2.clone(),
        ),
        ("sphere distance", EikonalSolution::new(r3, ClosedForm::one(), 2), upper),
        (
            "exponential, G = 2v^2",
            EikonalSolution::new((x() + y()).exp(), 2.0 * x().pow(2.0), 1),
            g2.clone(),
        ),
        (
            "normalized tanh front",
            EikonalSolution::new(normalized, ClosedForm::one(), 1),
            g2,
        ),
        (
            "random-direction linear",
            EikonalSolution::new(ClosedForm::affine(&d, 0.3), ClosedForm::one(), 2),
            g3,
        ),
    ]
}

fn eikonal_to_euler_criterion(c: &mut Criterion) -> Result<()> {
    let start = Instant::now();
    for (name, sol, grid) in eikonal_cases() {
        c.at_most(&format!("{name}: eikonal defect"), sol.check(&grid)?.linf, 1e-10);
        let f = eikonal_to_euler(&sol, &grid)?;
        c.at_most(
            &format!("{name}: Euler residual"),
            euler_residual(&f, &grid)?.linf,
            1e-10,
        );
    }
    let secs = start.elapsed().as_secs_f64();
    c.check(secs < 1.0, format!("runtime {secs:.3} s < 1 s"));
    Ok(())
}

fn divergence_equivalence(c: &mut Criterion) -> Result<()> {
    let mut fields: Vec<(String, ClosedForm, usize, Grid)> = eikonal_cases()
        .into_iter()
        .map(|(name, sol, grid)| (name.to_string(), sol.v, sol.time_axis, grid))
        .collect();
    let g2 = Grid::cube(2, 17, -1.0, 1.0).unwrap();
    let g3 = Grid::cube(3, 9, -1.0, 1.0).unwrap();
    fields.push(("control x^2 + y".into(), x().pow(2.0) + y(), 1, g2.clone()));
    fields.push(("control y + sin x".into(), y() + x().sin(), 1, g2));
    fields.push(("control z + x^2 + y^2".into(), z() + x().pow(2.0) + y().pow(2.0), 2, g3));
    for (i, (name, v, axis, grid)) in fields.iter().enumerate() {
        let e = divergence_equivalence_check(&Analytic::new(v.clone(), grid.clone()), *axis, ANALYTIC_ZERO)?;
        let both_zero = e.div_y.within(ANALYTIC_ZERO) && e.curvature.within(ANALYTIC_ZERO);
        let detail = format!(
            "{name}: consistent={} div_y {:.3e}, curvature {:.3e}",
            e.consistent, e.div_y.linf, e.curvature.linf
        );
        c.check(e.consistent, detail);
        if i >= 5 {
            c.check(!both_zero, format!("{name}: control is curved"));
        }
    }
    Ok(())
}

fn scalar_allen_cahn(c: &mut Criterion) -> Result<()> {
    let g = Grid::cube(2, 33, -3.0, 3.0)?;
    let w = Potential1D::double_well();
    let u = ((x() + y()) / 2.0).tanh();
    let a = Analytic::new(u.clone(), g.clone());
    c.at_most("Allen-Cahn residual", ac_residual(&a, &w)?.linf, 1e-10);
    c.at_most("equipartition", equipartition_residual(&a, &w)?.linf, 1e-10);
    c.at_most("mean curvature", mean_curvature(&u, &g)?.linf(), 1e-10);
    c.at_most("div_y F", level_set_divergence_of(&a, 1)?.linf(), 1e-10);
    let prof = solve_profile(&w, &[1.0], 0.0, 1.0 / SQRT_2, (-5.0, 5.0), 201)?;
    c.at_most(
        "profile vs tanh(t/sqrt 2)",
        prof.max_error(&(x() / SQRT_2).tanh())?,
        1e-8,
    );
    c.at_most("first-integral drift", prof.energy_drift, 1e-8);
    Ok(())
}

fn euler_families(c: &mut Criterion) -> Result<()> {
    let start = Instant::now();
    let t = 0.5;
    for (k, family) in EulerFamily::ALL.iter().enumerate() {
        let d = family.dims();
        let grid = Grid::cube(d, 9, -1.0, 1.0)?;
        let specs = random_instances(*family, 100 + k as u64, 10);
        let mut worst = 0.0f64;
        for s in &specs {
            worst = worst.max(euler_residual_with_pressure(s, &grid, t, EvalPath::Analytic)?.linf());
        }
        c.at_most(
            &format!("{}: 10 instances, exact residual", family.name()),
            worst,
            1e-10,
        );
        let levels: &[usize] = if d == 2 { &[21, 41, 81] } else { &[11, 21, 41] };
        let mut pts = Vec::new();
        for &n in levels {
            let g = Grid::cube(d, n, -1.0, 1.0)?;
            let r = euler_residual_with_pressure(&specs[0], &g, t, EvalPath::sampled(2))?;
            pts.push((g.h_max(), r.linf()));
        }
        match convergence_order(&pts)? {
            ConvergenceOutcome::Slope(s) => c.check(
                (s - 2.0).abs() <= 0.15,
                format!("{}: FD slope {s:.3} in 2.0 +- 0.15", family.name()),
            ),
            ConvergenceOutcome::Saturated => c.check(true, format!("{}: FD residual saturated", family.name())),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    c.check(secs < 30.0, format!("runtime {secs:.2} s < 30 s"));
    Ok(())
}

fn heat_kernel_ns(c: &mut Criterion) -> Result<()> {
    let s: Vec<f64> = (0..41).map(|i| -4.0 + 0.2 * i as f64).collect();
    let mt = 6.0;
    for t in [0.1, 0.01, 0.001] {
        let p = heat_solve_1d(&x().sin(), mt, t, &s)?;
        let err = s
            .iter()
            .zip(&p.g)
            .fold(0.0f64, |m, (sv, g)| m.max((g - (-mt * t).exp() * sv.sin()).abs()));
        c.at_most(&format!("heat solve vs Fourier mode, t = {t}"), err, 1e-8);
    }

    let ivp_grid = Grid::new(&[9, 9, 9], &[0.0, -1.0, -1.0], &[FRAC_PI_2, 1.0, 1.0], &[false; 3])?;
    let mut ivp = NsFamilySpec::new(NsFamily::NS3D_IVP, 1.0).with_profile("H", x().sin());
    (ivp.c1, ivp.c2, ivp.ct1, ivp.ct2) = (1.0, 1.0, 1.0, -1.0);
    c.check(ivp.mu_tilde() == 6.0, format!("effective viscosity {}", ivp.mu_tilde()));
    let rep = ivp_limit_check(&ivp, &ivp_grid, &[0.1, 0.01, 0.001])?;
    let limit_err = rep
        .entries
        .iter()
        .fold(0.0f64, |m, e| m.max((e.distance - (1.0 - (-6.0 * e.t).exp())).abs()));
    c.at_most("initial-value limit vs 1 - exp(-6t)", limit_err, 1e-8);
    c.check(rep.monotone, "distance to initial data decreases with t");

    let g2 = Grid::cube(2, 9, -1.0, 1.0)?;
    let g3 = Grid::cube(3, 9, -1.0, 1.0)?;
    let (mu, c1, c2) = (0.5, 0.7, 1.2);
    let mode2 = (-mu * (c1 * c1 + 1.0) * y()).exp() * ClosedForm::affine(&[1.0, -c2], 0.0).sin();
    let mut ns2 = NsFamilySpec::new(NsFamily::NS2D, mu).with_profile("g", mode2);
    (ns2.c1, ns2.c2) = (c1, c2);
    ns2.a = x().cos();
    let mut ns2h = ns2.clone();
    ns2h.profiles.clear();
    ns2h.profiles.insert("H".into(), x().sin());
    let co = Ns3dProfileCoefficients::new(1.0, 2.0, 0.5, 0.3);
    let mut ns3 = NsFamilySpec::new(NsFamily::NS3D, 0.5).with_profile("g", co.fourier_mode(0.5, 1.0, 1.0));
    (ns3.c1, ns3.c2, ns3.ct1, ns3.ct2) = (1.0, 2.0, 0.5, 0.3);
    for (name, spec, grid) in [
        ("planar, closed-form profile", &ns2, &g2),
        ("planar, heat-kernel profile", &ns2h, &g2),
        ("3D, Fourier-mode profile", &ns3, &g3),
        ("3D initial-value, H = sin", &ivp, &ivp_grid),
    ] {
        for t in [0.1, 0.5] {
            let r = spec.residual(grid, t, EvalPath::Analytic)?;
            let mom = r.residual.momentum.iter().fold(0.0f64, |m, r| m.max(r.linf));
            c.at_most(&format!("{name}, t = {t}: momentum"), mom, 1e-8);
            c.at_most(
                &format!("{name}, t = {t}: divergence"),
                r.residual.divergence.linf,
                1e-10,
            );
        }
    }
    Ok(())
}

fn band_limited(rng: &mut ChaCha8Rng, grid: &Grid, kmax: i32) -> Result<PeriodicField2D> {
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
        comps.push(ScalarField::from_fn(grid, |p| {
            terms
                .iter()
                .map(|(a, b, c, ph)| c * (a * p[0] + b * p[1] + ph).cos())
                .sum()
        })?);
    }
    PeriodicField2D::new(comps)
}

fn leray_and_sigma(c: &mut Criterion) -> Result<()> {
    let start = Instant::now();
    let grid = Grid::new(&[128, 128], &[0.0, 0.0], &[2.0 * PI, 2.0 * PI], &[true, true])?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut rec, mut idem, mut orth) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let u = band_limited(&mut rng, &grid, 8)?;
        let d = helmholtz_decompose(&u)?;
        rec = rec.max(d.recombination_error(&u)?);
        orth = orth.max(d.orthogonality()?.abs());
        let p = leray_project(&u)?;
        idem = idem.max(leray_project(&p)?.sub(&p)?.linf());
    }
    c.at_most("recombination, 20 fields at 128^2", rec, 1e-12);
    c.at_most("idempotence", idem, 1e-12);
    c.at_most("orthogonality", orth, 1e-12);
    let g = Grid::cube(2, 33, -2.0, 2.0)?;
    let spec = SigmaFamilySpec::rotated(0.0, 1.0, x().tanh(), x().sin())?;
    let fam = sigma_family(&spec, &g)?;
    c.at_most("sigma family, linear equation", fam.linear.linf, 1e-10);
    c.at_most("sigma family, full equation", fam.full.linf, 1e-10);
    let secs = start.elapsed().as_secs_f64();
    c.check(secs < 10.0, format!("runtime {secs:.2} s < 10 s"));
    Ok(())
}

fn system_structure(c: &mut Criterion) -> Result<()> {
    let p = CatalogParams::default();
    let st = x() * y() - 1.0;
    let whole = Grid::cube(2, 33, -3.0, 3.0)?;
    let cases = [
        (
            "cosh/sin product field",
            "product-cosh-sin",
            Grid::new(&[33, 33], &[1.0, 1.0], &[3.0, 3.0], &[false; 2])?,
        ),
        (
            "four-phase field",
            "fourwell-four-phase",
            Grid::new(&[33, 33], &[0.2, -2.0], &[2.0, -0.2], &[false; 2])?,
        ),
    ];
    for (name, id, sub) in &cases {
        let e = catalog_example(id, &p)?;
        c.at_most(
            &format!("{name}: system"),
            system_residual(&e.solution, &e.potential, &whole)?.linf,
            1e-10,
        );
        c.at_most(
            &format!("{name}: equipartition"),
            equipartition_residual_vec(&e.solution, &e.potential, &whole)?.linf,
            1e-10,
        );
        c.at_most(
            &format!("{name}: det grad v on subdomain"),
            ratio_and_detgrad(&e.solution, sub)?.det.linf,
            1e-10,
        );
        let d = dependence_check(&e.solution, &st, sub)?;
        c.at_most(&format!("{name}: dependence, witness st - 1"), d.witness.linf, 1e-10);
        c.at_most(&format!("{name}: dependence, weights"), d.weights.linf, 1e-10);
    }
    let tilted = catalog_example("fourwell-tilted", &p)?;
    c.at_most(
        "tilted field: system",
        system_residual(&tilted.solution, &tilted.potential, &whole)?.linf,
        1e-10,
    );
    let d = dependence_check(&tilted.solution, &(x() + y() - 2.0), &whole)?;
    c.at_most("tilted field: dependence, witness s + t - 2", d.witness.linf, 1e-10);
    let eq = equipartition_residual_vec(&tilted.solution, &tilted.potential, &whole)?.linf;
    c.above("tilted field: equipartition fails somewhere", eq, 1e-3);
    Ok(())
}

fn four_phase(c: &mut Criterion) -> Result<()> {
    let p = CatalogParams::default();
    let four = catalog_example("fourwell-four-phase", &p)?;
    let r = four_phase_limits(&four.solution, &[-1.0, 0.0, 1.0])?;
    c.at_most("ray limits at (+-2 sqrt 2, 0), (0, +-2 sqrt 2)", r.max_error, 1e-6);
    let tilted = catalog_example("fourwell-tilted", &p)?;
    let r = tilted_limits(&tilted.solution, &(x() / (2.0 * SQRT_2)).tanh(), &[-2.0, 0.0, 0.7, 3.0])?;
    c.at_most("tilted field vs heteroclinic profile", r.max_error, 1e-6);
    Ok(())
}

fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_acflow"))
}

fn configs() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    v.sort();
    v
}

fn negative_controls(c: &mut Criterion) -> Result<()> {
    let w = Potential1D::double_well();
    let g = Grid::new(&[17, 17], &[0.5, 0.5], &[2.5, 2.5], &[false; 2])?;
    let u = Analytic::new(radial_candidate(&[0.0, 0.0], 0.3), g);
    let ac = ac_residual(&u, &w)?.linf;
    let eq = equipartition_residual(&u, &w)?.linf;
    c.at_most("radial candidate: equipartition holds", eq, 1e-10);
    c.above("radial candidate: Allen-Cahn residual", ac, 1e-3);

    let dir = tempfile::tempdir()?;
    let ns = dir.path().join("ns_violated.json");
    std::fs::write(
        &ns,
        r#"{"target": "NS3D_IVP", "params": {"mu": 1, "c1": 1, "c2": 1, "ct1": 1, "ct2": 1,
            "profiles": {"H": {"op": "sin", "args": ["x"]}}},
            "grid": {"n": [5, 5, 5], "lo": [0, -1, -1], "hi": [1, 1, 1]}}"#,
    )?;
    let e2d = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/e2d_violated.json");
    for cfg in [e2d, ns] {
        let out = Command::new(bin()).arg("verify").arg(&cfg).output()?;
        let code = out.status.code();
        let name = cfg.file_name().unwrap().to_string_lossy().to_string();
        c.check(code == Some(1), format!("{name}: exit code {code:?}, expected 1"));
    }
    Ok(())
}

fn suite_run(dir: &Path) -> Result<Vec<serde_json::Value>> {
    let mut reports = Vec::new();
    for cfg in configs() {
        let text = std::fs::read_to_string(&cfg)?;
        let converge = serde_json::from_str::<serde_json::Value>(&text)?["refinement"].is_array();
        let out = Command::new(bin())
            .current_dir(dir)
            .arg(if converge { "converge" } else { "verify" })
            .arg(&cfg)
            .args(["--output", "report.json", "--seed", "5"])
            .output()?;
        assert!(
            out.status.code().is_some_and(|c| c <= 1),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json"))?)?;
        v.as_object_mut().unwrap().remove("wall_time_s");
        reports.push(v);
    }
    Ok(reports)
}

fn determinism(c: &mut Criterion) -> Result<()> {
    let start = Instant::now();
    let (a, b) = (tempfile::tempdir()?, tempfile::tempdir()?);
    let ra = suite_run(a.path())?;
    let secs = start.elapsed().as_secs_f64();
    let rb = suite_run(b.path())?;
    let same = ra
        .iter()
        .zip(&rb)
        .all(|(x, y)| serde_json::to_string(x).unwrap() == serde_json::to_string(y).unwrap());
    c.check(
        ra.len() == rb.len() && !ra.is_empty(),
        format!("{} configs run twice", ra.len()),
    );
    c.check(same, "reports identical apart from wall time");
    c.check(secs < 60.0, format!("suite wall time {secs:.2} s < 60 s"));
    Ok(())
}

type Body = fn(&mut Criterion) -> Result<()>;

fn main() {
    let criteria: [(&str, Body); 10] = [
        (
            "eikonal solutions give pressureless Euler flows",
            eikonal_to_euler_criterion,
        ),
        ("div_y F and mean curvature vanish together", divergence_equivalence),
        ("scalar Allen-Cahn planar front", scalar_allen_cahn),
        ("Euler families: exact residuals and FD order", euler_families),
        ("heat-kernel Navier-Stokes families", heat_kernel_ns),
        ("Leray decomposition and sigma family", leray_and_sigma),
        ("Allen-Cahn system structure", system_structure),
        ("four-phase far-field limits", four_phase),
        ("negative controls", negative_controls),
        ("determinism of the CLI suite", determinism),
    ];
    let mut failed = 0;
    for (i, (name, body)) in criteria.iter().enumerate() {
        let mut c = Criterion::new();
        if let Err(e) = body(&mut c) {
            c.check(false, format!("error: {e}"));
        }
        let ok = c.pass();
        failed += usize::from(!ok);
        println!("{} {:>2} {name}", if ok { "PASS" } else { "FAIL" }, i + 1);
        for (sub_ok, msg) in &c.lines {
            println!("        {} {msg}", if *sub_ok { "ok  " } else { "FAIL" });
        }
    }
    println!("\n{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
