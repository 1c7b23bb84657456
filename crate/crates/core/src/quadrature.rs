//! One-dimensional quadrature rules.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::{Error, Result};

const MAX_DEPTH: u32 = 48;
const INITIAL_PANELS: usize = 8;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Reversed limits give the negated integral.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite limits [{a}, {b}]")));
    }
    let width = (b - a) / INITIAL_PANELS as f64;
    let panel_tol = tol / INITIAL_PANELS as f64;
    let mut total = 0.0;
    for k in 0..INITIAL_PANELS {
        let lo = a + width * k as f64;
        let hi = if k + 1 == INITIAL_PANELS { b } else { lo + width };
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total += simpson_step(&mut f, lo, hi, flo, fmid, fhi, whole, panel_tol, MAX_DEPTH);
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::Quadrature(format!("integrand not finite on [{a}, {b}]")))
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || !delta.is_finite() {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Running integral `∫_{x_0}^{x_i} f` of uniformly sampled values with spacing `h`.
///
/// Even nodes use composite Simpson; odd nodes add the last interval with the
/// three-point rule, so the result is fourth-order at even and third-order
/// locally at odd nodes.
pub fn cumulative_simpson(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * h * (values[0] + values[1]);
        return out;
    }
    out[1] = h / 12.0 * (5.0 * values[0] + 8.0 * values[1] - values[2]);
    for i in 2..n {
        out[i] = if i % 2 == 0 {
            out[i - 2] + h / 3.0 * (values[i - 2] + 4.0 * values[i - 1] + values[i])
        } else {
            out[i - 1] + h / 12.0 * (-values[i - 2] + 8.0 * values[i - 1] + 5.0 * values[i])
        };
    }
    out
}

/// Gauss–Hermite nodes and weights for `∫ e^{-x²} f(x) dx`, nodes descending.
///
/// Nodes are the eigenvalues of the Jacobi matrix (implicit QL), polished by
/// one Newton step on the orthonormal Hermite recurrence. Weights come from the
/// same recurrence, rescaled on the fly so large orders do not overflow; the
/// weights of far-out nodes underflow to zero, which is their value in double
/// precision. Results are cached per order.
pub fn gauss_hermite(n: usize) -> Result<Arc<(Vec<f64>, Vec<f64>)>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().expect("cache poisoned").get(&n) {
        return Ok(hit.clone());
    }
    let rule = Arc::new(gauss_hermite_uncached(n)?);
    cache.lock().expect("cache poisoned").insert(n, rule.clone());
    Ok(rule)
}

fn gauss_hermite_uncached(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Quadrature("Gauss-Hermite order must be positive".into()));
    }
    let mut d = vec![0.0; n];
    let mut e: Vec<f64> = (1..=n)
        .map(|k| if k < n { (k as f64 / 2.0).sqrt() } else { 0.0 })
        .collect();
    tridiagonal_eigenvalues(&mut d, &mut e)?;
    d.sort_by(|a, b| b.total_cmp(a));
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let z0 = 0.5 * (d[i] - d[n - 1 - i]);
        let (p1, pp, _) = hermite_recurrence(n, z0);
        let z = if n % 2 == 1 && i == n / 2 { 0.0 } else { z0 - p1 / pp };
        let (_, _, log_pp) = hermite_recurrence(n, z);
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = (2f64.ln() - 2.0 * log_pp).exp();
        w[n - 1 - i] = w[i];
    }
    Ok((x, w))
}

/// Orthonormal Hermite value `p_n(z)`, derivative factor and `ln|p_n'(z)|`,
/// with `p_n` and the derivative sharing one (dropped) scale factor.
fn hermite_recurrence(n: usize, z: f64) -> (f64, f64, f64) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    const RESCALE: f64 = 1e150;
    let mut p1 = PIM4;
    let mut p2 = 0.0;
    let mut log_scale = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
        if p1.abs() > RESCALE {
            p1 /= RESCALE;
            p2 /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    let pp = (2.0 * n as f64).sqrt() * p2;
    (p1, pp, pp.abs().ln() + log_scale)
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL.
/// `d` is the diagonal, `e[i]` couples `i` and `i + 1`; `d` is overwritten.
fn tridiagonal_eigenvalues(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Quadrature("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(|x| x.cos(), 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 2f64.sin()).abs() < 1e-12);
        let r = adaptive_simpson(|x| x.cos(), 2.0, 0.0, 1e-12).unwrap();
        assert_eq!(r, -v);
    }

    #[test]
    fn simpson_flags_nan() {
        assert!(adaptive_simpson(|x| 1.0 / x, -1.0, 1.0, 1e-10).is_err());
    }

    #[test]
    fn cumulative_simpson_is_exact_on_cubics() {
        let h = 0.1;
        let f: Vec<f64> = (0..11).map(|i| (i as f64 * h).powi(3)).collect();
        let c = cumulative_simpson(&f, h);
        for (i, v) in c.iter().enumerate() {
            let x = i as f64 * h;
            let tol = if i % 2 == 0 { 1e-14 } else { 1e-4 };
            assert!((v - x.powi(4) / 4.0).abs() < tol, "i={i}");
        }
    }

    #[test]
    fn gauss_hermite_moments() {
        for n in [8, 64, 128, 1024] {
            let rule = gauss_hermite(n).unwrap();
            let (x, w) = (&rule.0, &rule.1);
            let m0: f64 = w.iter().sum();
            let m2: f64 = x.iter().zip(w).map(|(x, w)| w * x * x).sum();
            let m4: f64 = x.iter().zip(w).map(|(x, w)| w * x.powi(4)).sum();
            assert!((m0 - PI.sqrt()).abs() < 1e-12, "n={n} m0={m0}");
            assert!((m2 - PI.sqrt() / 2.0).abs() < 1e-12, "n={n}");
            assert!((m4 - 0.75 * PI.sqrt()).abs() < 1e-11, "n={n}");
            assert!(x.windows(2).all(|p| p[0] > p[1]), "n={n} nodes not strictly ordered");
        }
    }
}
