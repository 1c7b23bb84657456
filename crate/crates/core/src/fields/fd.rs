//! Finite-difference stencils built from Fornberg's recursion.
//!
//! Interior points use a centered stencil; near a non-periodic boundary the
//! stencil slides into a one-sided window of `order + accuracy` points, which
//! keeps the truncation order at `accuracy` everywhere.

use rayon::prelude::*;

use super::{Grid, ScalarField};
use crate::{Error, Result};

pub const MAX_FD_ORDER: usize = 4;

/// Weights approximating the `m`-th derivative at `x0` from values at `xs`.
pub fn fornberg_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c.swap_remove(m)
}

/// Centered stencil width for derivative order `m` at accuracy `p`.
pub fn central_width(m: usize, p: usize) -> usize {
    2 * m.div_ceil(2) - 1 + p
}

/// Minimum number of points an axis needs for `(order, accuracy)`.
pub fn min_points(order: usize, accuracy: usize) -> usize {
    (order + accuracy + 1).max(central_width(order, accuracy))
}

/// Per-axis stencil table: for each node, the first neighbour offset and weights
/// (already divided by `h^order`).
struct AxisStencil {
    periodic: bool,
    rows: Vec<(isize, Vec<f64>)>,
}

impl AxisStencil {
    fn build(grid: &Grid, axis: usize, order: usize, accuracy: usize) -> Result<AxisStencil> {
        grid.check_axis(axis)?;
        if !(1..=MAX_FD_ORDER).contains(&order) {
            return Err(Error::DerivativeOrder {
                order,
                max: MAX_FD_ORDER,
            });
        }
        if accuracy != 2 && accuracy != 4 {
            return Err(Error::InvalidParameter(format!(
                "accuracy must be 2 or 4, got {accuracy}"
            )));
        }
        let n = grid.n(axis);
        let required = min_points(order, accuracy);
        if n < required {
            return Err(Error::GridTooSmall {
                axis,
                points: n,
                required,
            });
        }
        let scale = grid.h(axis).powi(order as i32);
        let width = central_width(order, accuracy);
        let r = (width / 2) as isize;
        let weights = |offsets: Vec<f64>| -> Vec<f64> {
            fornberg_weights(0.0, &offsets, order)
                .into_iter()
                .map(|w| w / scale)
                .collect()
        };
        let central = weights((-r..=r).map(|k| k as f64).collect());
        if grid.periodic(axis) {
            return Ok(AxisStencil {
                periodic: true,
                rows: vec![(-r, central)],
            });
        }
        let side = order + accuracy;
        let mut rows = Vec::with_capacity(n);
        for i in 0..n as isize {
            if i - r >= 0 && i + r < n as isize {
                rows.push((-r, central.clone()));
            } else {
                let start = if i - r < 0 { 0 } else { n as isize - side as isize };
                let offsets: Vec<f64> = (0..side as isize).map(|k| (start + k - i) as f64).collect();
                rows.push((start - i, weights(offsets)));
            }
        }
        Ok(AxisStencil { periodic: false, rows })
    }

    fn row(&self, i: usize) -> &(isize, Vec<f64>) {
        if self.periodic {
            &self.rows[0]
        } else {
            &self.rows[i]
        }
    }
}

/// `∂^order f / ∂x_axis^order` with truncation error `O(h^accuracy)`.
pub fn fd_derivative(f: &ScalarField, axis: usize, order: usize, accuracy: usize) -> Result<ScalarField> {
    let grid = f.grid();
    let st = AxisStencil::build(grid, axis, order, accuracy)?;
    let n = grid.n(axis) as isize;
    let stride = grid.stride(axis);
    let vals = f.values();
    let out: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let i = (idx / stride) % n as usize;
            let base = idx - i * stride;
            let (off, w) = st.row(i);
            let mut acc = 0.0;
            for (k, wk) in w.iter().enumerate() {
                let mut j = i as isize + off + k as isize;
                if st.periodic {
                    j = j.rem_euclid(n);
                }
                acc += wk * vals[base + j as usize * stride];
            }
            acc
        })
        .collect();
    ScalarField::new(grid.clone(), out)
}

/// Mixed partial for a multi-index, one axis at a time in ascending order.
/// Same-axis orders use a direct stencil of that order.
pub fn fd_partial(f: &ScalarField, deriv: &[usize], accuracy: usize) -> Result<ScalarField> {
    if deriv.len() > f.grid().dims() {
        return Err(Error::AxisOutOfRange {
            axis: deriv.len() - 1,
            dims: f.grid().dims(),
        });
    }
    let mut out = f.clone();
    for (axis, &order) in deriv.iter().enumerate() {
        if order > 0 {
            out = fd_derivative(&out, axis, order, accuracy)?;
        }
    }
    Ok(out)
}
