//! Exact solution families linking the Allen–Cahn, Eikonal, Euler and
//! Navier–Stokes equations, with residual-based certification.

pub mod ac_system;
pub mod allen_cahn;
pub mod cli;
pub mod eikonal_euler;
pub mod error;
pub mod euler_family;
pub mod expr;
pub mod fields;
pub mod flow;
pub mod leray;
pub mod ns_family;
pub mod ode;
pub mod quadrature;

pub use error::{Error, Result};
pub use expr::ClosedForm;
