//! Property tests for the identities the library certifies.

use std::f64::consts::PI;

use acflow::ac_system::{gradient_form, Potential2D};
use acflow::allen_cahn::{ac_residual, equipartition_residual, normalize, Potential1D};
use acflow::eikonal_euler::{
    divergence_equivalence_check, eikonal_to_euler, euler_residual, level_set_divergence_of, mean_curvature,
    EikonalSolution,
};
use acflow::euler_family::{euler_residual_with_pressure, random_instances, EulerFamily};
use acflow::fields::{
    eval_closed_form, fd_derivative, fd_partial, mixed, unit, Analytic, Differentiable, Grid, Sampled, ScalarField,
    ANALYTIC_ZERO,
};
use acflow::flow::EvalPath;
use acflow::leray::{
    cross_identity_residual, helmholtz_decompose, leray_project, sigma_family, PeriodicField2D, SigmaFamilySpec,
};
use acflow::ns_family::{heat_solve_1d, NsFamily, NsFamilySpec};
use acflow::ClosedForm;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn x() -> ClosedForm {
    ClosedForm::var(0)
}
fn y() -> ClosedForm {
    ClosedForm::var(1)
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

/// Sum of `c_ij x^i y^j` over `i + j <= deg`.
fn polynomial(coef: &[f64], deg: usize) -> ClosedForm {
    let mut e = ClosedForm::zero();
    let mut k = 0;
    for i in 0..=deg {
        for j in 0..=deg - i {
            e = e + coef[k] * x().pow(i as f64) * y().pow(j as f64);
            k += 1;
        }
    }
    e
}

/// One-variable profile built from a few tame terms.
fn profile(c: [f64; 4]) -> ClosedForm {
    c[0] * (c[1] * x()).sin() + c[2] * (c[3] * x()).tanh() + 0.1 * c[0] * x().pow(2.0)
}

fn small() -> impl Strategy<Value = f64> {
    -1.5..1.5f64
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn stencils_are_exact_on_low_degree_polynomials(coef in prop::collection::vec(-2.0..2.0f64, 15), acc in prop::sample::select(vec![2usize, 4])) {
        let deg = acc;
        let e = polynomial(&coef, deg);
        let g = Grid::new(&[11, 13], &[-1.0, -0.5], &[1.2, 1.0], &[false; 2]).unwrap();
        let f = eval_closed_form(&e, &g, &[]).unwrap();
        for axis in 0..2 {
            for order in 1..=2 {
                let fd = fd_derivative(&f, axis, order, acc).unwrap();
                let exact = eval_closed_form(&e, &g, &unit(axis, order)).unwrap();
                let scale = 1.0 + exact.linf();
                prop_assert!(fd.sub(&exact).unwrap().linf() <= 1e-9 * scale, "axis {axis} order {order}");
            }
        }
    }

    #[test]
    fn sampled_mixed_partials_commute(c in [small(), small(), small(), small()]) {
        let e = (c[0] * x() + c[1] * y()).sin() * (c[2] * x() * y() + c[3]).cos();
        let g = Grid::cube(2, 17, -1.0, 1.0).unwrap();
        let f = eval_closed_form(&e, &g, &[]).unwrap();
        let s = Sampled::new(f.clone(), 2);
        let p = s.partials(&[mixed(0, 1), mixed(1, 0)]).unwrap();
        prop_assert_eq!(p[0].values(), p[1].values());
        let xy = fd_derivative(&fd_derivative(&f, 0, 1, 2).unwrap(), 1, 1, 2).unwrap();
        let yx = fd_derivative(&fd_derivative(&f, 1, 1, 2).unwrap(), 0, 1, 2).unwrap();
        prop_assert!(xy.sub(&yx).unwrap().linf() <= 1e-12 * (1.0 + xy.linf()));
        let fp = fd_partial(&f, &[1, 1], 2).unwrap();
        prop_assert_eq!(fp.values(), xy.values());
    }

    #[test]
    fn linear_eikonal_gives_euler_and_scale_invariance(theta in 0.1..(PI - 0.1), c in small()) {
        let d = [theta.cos(), theta.sin()];
        let v = ClosedForm::affine(&d, c);
        let g = Grid::cube(2, 9, -1.0, 1.0).unwrap();
        let sol = EikonalSolution::new(v.clone(), ClosedForm::one(), 1);
        prop_assert!(sol.check(&g).unwrap().linf <= 1e-10);
        let f = eikonal_to_euler(&sol, &g).unwrap();
        prop_assert!(euler_residual(&f, &g).unwrap().linf <= 1e-10);
        // P(v) = v³ + v + e^v has P′ > 0
        let pv = v.pow(3.0) + &v + v.exp();
        let fp = eikonal_to_euler(&EikonalSolution::new(pv, ClosedForm::one(), 1), &g).unwrap();
        let (a, b) = (f.sample(&g).unwrap(), fp.sample(&g).unwrap());
        prop_assert!(a.component(0).sub(b.component(0)).unwrap().linf() <= 1e-12);
    }

    #[test]
    fn planar_front_is_minimal_and_normalization_keeps_f(theta in 0.2..(PI - 0.2), shift in small()) {
        let (a, b) = (theta.cos(), theta.sin());
        let u = ClosedForm::affine(&[a / 2f64.sqrt(), b / 2f64.sqrt()], shift).tanh();
        let g = Grid::cube(2, 17, -2.0, 2.0).unwrap();
        let w = Potential1D::double_well();
        let an = Analytic::new(u.clone(), g.clone());
        let ac = ac_residual(&an, &w).unwrap().linf;
        let eq = equipartition_residual(&an, &w).unwrap().linf;
        prop_assert!(ac <= 1e-10 && eq <= 1e-10);
        prop_assert!(mean_curvature(&u, &g).unwrap().linf() <= 1e-10);
        prop_assert!(level_set_divergence_of(&an, 1).unwrap().linf() <= 1e-10);
        let e = divergence_equivalence_check(&an, 1, ANALYTIC_ZERO).unwrap();
        prop_assert!(e.consistent);

        let v = normalize(&u, &w, &g).unwrap();
        let raw = eikonal_to_euler(&EikonalSolution::new(u, ClosedForm::one(), 1), &g).unwrap();
        let nv = eikonal_to_euler(&EikonalSolution::new(v, ClosedForm::one(), 1), &g).unwrap();
        let diff = raw.sample(&g).unwrap().component(0).sub(nv.sample(&g).unwrap().component(0)).unwrap().linf();
        prop_assert!(diff <= 1e-12, "{diff}");
    }

    #[test]
    fn curved_level_sets_are_flagged_consistently(c in 0.3..2.0f64, k in 0.5..2.0f64) {
        let u = y() + c * (k * x()).sin();
        let g = Grid::cube(2, 17, -1.0, 1.0).unwrap();
        let e = divergence_equivalence_check(&Analytic::new(u, g), 1, ANALYTIC_ZERO).unwrap();
        prop_assert!(e.consistent && !e.div_y.within(ANALYTIC_ZERO));
    }

    #[test]
    fn gradient_form_fields_satisfy_cross_identity(f in [small(), small(), small(), small()], h in [small(), small(), small(), small()]) {
        let u = gradient_form(&profile(f), &profile(h));
        let g = Grid::cube(2, 9, -1.0, 1.0).unwrap();
        let [a, b] = u.analytic(&g);
        prop_assert!(cross_identity_residual(&a, &b).unwrap().linf <= 1e-10);
    }

    #[test]
    fn fourwell_is_symmetric(u1 in -4.0..4.0f64, u2 in -4.0..4.0f64) {
        let w = Potential2D::fourwell().w;
        let d = w.eval(&[u1, u2]).unwrap() - w.eval(&[-u1, u2]).unwrap();
        prop_assert!(d.abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn euler_families_solve_for_any_seed(seed in any::<u64>()) {
        for family in EulerFamily::ALL {
            let grid = Grid::cube(family.dims(), 7, -1.0, 1.0).unwrap();
            for spec in random_instances(family, seed, 10) {
                prop_assert!(spec.validate_params().ok());
                for t in [0.0, 0.5, 1.0] {
                    let r = euler_residual_with_pressure(&spec, &grid, t, EvalPath::Analytic).unwrap();
                    prop_assert!(r.linf() <= 1e-10, "{} t={t}: {}", family.name(), r.linf());
                }
            }
        }
    }

    #[test]
    fn heat_profile_solves_heat_equation(a in small(), k in 0.5..3.0f64, b in small(), mt in 0.2..2.0f64, t in 0.05..1.0f64) {
        let h = a * (k * x()).sin() + b * (-x().pow(2.0)).exp();
        let s: Vec<f64> = (0..11).map(|i| -1.0 + 0.2 * i as f64).collect();
        let delta = (t / 100.0).max(1e-5);
        let p = heat_solve_1d(&h, mt, t, &s).unwrap();
        let up = heat_solve_1d(&h, mt, t + delta, &s).unwrap();
        let dn = heat_solve_1d(&h, mt, t - delta, &s).unwrap();
        // centered difference error δ²/6 |g_ttt| with |g_ttt| = μ̃³ |∂⁶g| ≤ μ̃³ (|a| k⁶ + 120 |b|)
        let truncation = delta * delta / 6.0 * mt.powi(3) * (a.abs() * k.powi(6) + 120.0 * b.abs());
        for i in 0..s.len() {
            prop_assert!((p.g_t[i] - mt * p.g_ss[i]).abs() <= 1e-8);
            let fd = (up.g[i] - dn.g[i]) / (2.0 * delta);
            prop_assert!((fd - mt * p.g_ss[i]).abs() <= 1e-8 + truncation);
        }
    }

    #[test]
    fn ivp_fields_are_linearly_dependent_and_solenoidal(c1 in 0.5..1.5f64, c2 in 0.5..1.5f64, ct1 in small(), t in 0.05..0.5f64) {
        let mut s = NsFamilySpec::new(NsFamily::NS3D_IVP, 0.7).with_profile("H", x().cos());
        (s.c1, s.c2, s.ct1, s.ct2) = (c1, c2, ct1, -ct1 * c2 / c1);
        let g = Grid::cube(3, 5, -1.0, 1.0).unwrap();
        let (u, _) = s.generate(&g, t).unwrap();
        let d2 = u.component(1).zip_map(u.component(0), |b, a| b - c1 * a - s.ct1).unwrap();
        let d3 = u.component(2).zip_map(u.component(0), |c, a| c - c2 * a - s.ct2).unwrap();
        prop_assert!(d2.linf() <= 1e-14 && d3.linf() <= 1e-14);
        let r = s.residual(&g, t, EvalPath::Analytic).unwrap();
        prop_assert!(r.residual.divergence.linf <= 1e-10);
    }

    #[test]
    fn leray_decomposition_is_exact(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Grid::new(&[16, 32], &[0.0, 0.0], &[2.0 * PI, 2.0 * PI], &[true, true]).unwrap();
        let comps = (0..2)
            .map(|_| {
                let terms: Vec<(f64, f64, f64, f64)> = (0..12)
                    .map(|_| (rng.gen_range(-5..=5) as f64, rng.gen_range(0..=5) as f64, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI)))
                    .collect();
                ScalarField::from_fn(&g, |p| terms.iter().map(|(a, b, c, ph)| c * (a * p[0] + b * p[1] + ph).cos()).sum()).unwrap()
            })
            .collect();
        let u = PeriodicField2D::new(comps).unwrap();
        let d = helmholtz_decompose(&u).unwrap();
        prop_assert!(d.recombination_error(&u).unwrap() <= 1e-12);
        prop_assert!(d.orthogonality().unwrap().abs() <= 1e-12);
        let p = leray_project(&u).unwrap();
        prop_assert!(leray_project(&p).unwrap().sub(&p).unwrap().linf() <= 1e-12);
    }

    #[test]
    fn sigma_linear_implies_full(c1 in -2.0..2.0f64, c2 in prop::sample::select(vec![-1.5, -0.5, 0.7, 1.0, 2.0]), f in [small(), small(), small(), small()], h in [small(), small(), small(), small()]) {
        let s = SigmaFamilySpec::rotated(c1, c2, profile(f), profile(h)).unwrap();
        let g = Grid::cube(2, 9, -1.0, 1.0).unwrap();
        let r = sigma_family(&s, &g).unwrap();
        let scale = 1.0 + r.sigma.linf();
        prop_assert!(r.linear.linf <= 1e-10 * scale);
        prop_assert!(r.full.linf <= 1e-10 * scale, "{}", r.full.linf);
    }
}
