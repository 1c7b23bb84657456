//! Grids, sampled fields, finite differences, residual norms and convergence
//! estimation.

mod diff;
mod fd;
mod field;
mod grid;
mod ops;
mod report;

pub use diff::{eval_closed_form, mixed, unit, Analytic, Differentiable, Sampled, MAX_DERIV_ORDER};
pub use fd::{central_width, fd_derivative, fd_partial, fornberg_weights, min_points, MAX_FD_ORDER};
pub use field::{ScalarField, VectorField};
pub use grid::{Grid, GridSpec};
pub use ops::{divergence, divergence_of, grad, grad_of, laplacian, laplacian_of};
pub use report::{convergence_order, ConvergenceOutcome, ResidualReport, ANALYTIC_ZERO, SATURATION_FLOOR};
