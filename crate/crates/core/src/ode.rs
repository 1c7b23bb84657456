//! Dormand–Prince 5(4) integrator with dense output at requested times.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
    /// Any state component beyond this magnitude is treated as blow-up.
    pub blowup: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            atol: 1e-10,
            rtol: 1e-8,
            max_steps: 1_000_000,
            blowup: 1e12,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0`, returning the state at each time in
/// `t_out`. The output times must be monotone and lie on one side of `t0`;
/// steps are shortened to land on them exactly.
pub fn dopri5<F>(mut f: F, t0: f64, y0: &[f64], t_out: &[f64], opts: &OdeOptions) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let dir = match t_out.iter().find(|&&t| t != t0) {
        Some(&t) if t > t0 => 1.0,
        Some(_) => -1.0,
        None => return Ok(vec![y0.to_vec(); t_out.len()]),
    };
    if t_out.windows(2).any(|w| (w[1] - w[0]) * dir < 0.0) || t_out.iter().any(|&t| (t - t0) * dir < 0.0) {
        return Err(Error::InvalidParameter(
            "ODE output times must be monotone away from t0".into(),
        ));
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; dim]; 7];
    let mut stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    f(t, &y, &mut k[0]);
    let span = (t_out.last().unwrap() - t0).abs();
    let mut h = dir * (span * 1e-3).clamp(1e-6, 1e-2);
    let mut out = Vec::with_capacity(t_out.len());
    let mut steps = 0usize;

    for &target in t_out {
        while (target - t) * dir > 0.0 {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::StepUnderflow { t });
            }
            let clipped = (target - t) * dir <= h.abs();
            let step = if clipped { target - t } else { h };
            if step.abs() < 1e-14 * t.abs().max(1.0) && !clipped {
                return Err(Error::StepUnderflow { t });
            }
            for s in 1..7 {
                for i in 0..dim {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += step * A[s][j] * kj[i];
                    }
                    stage[i] = acc;
                }
                f(t + C[s] * step, &stage, &mut k[s]);
            }
            let mut err = 0.0;
            for i in 0..dim {
                let mut hi = y[i];
                let mut e = 0.0;
                for s in 0..7 {
                    hi += step * B5[s] * k[s][i];
                    e += step * (B5[s] - B4[s]) * k[s][i];
                }
                y_new[i] = hi;
                let sc = opts.atol + opts.rtol * y[i].abs().max(hi.abs());
                err += (e / sc).powi(2);
            }
            let err = (err / dim.max(1) as f64).sqrt();
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                if step.abs() < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::BlowUp { t });
                }
                h = 0.25 * step;
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t = if clipped { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                // FSAL: the last stage is f at the accepted point
                let last = k[6].clone();
                k[0].copy_from_slice(&last);
                if y.iter().any(|v| v.abs() > opts.blowup) {
                    return Err(Error::BlowUp { t });
                }
                if !clipped {
                    h = step * factor;
                }
            } else {
                h = step * factor.min(1.0);
                if h.abs() < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { t });
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}
