use serde::{Deserialize, Serialize};

use super::ScalarField;
use crate::{Error, Result};

/// Residuals at or below this are machine zero on the analytic path.
pub const ANALYTIC_ZERO: f64 = 1e-10;

/// Values at or below this count as saturated in a convergence study.
pub const SATURATION_FLOOR: f64 = 1e-14;

/// Named residual norms on one grid.
///
/// `l2` is the unscaled Euclidean norm `√Σ r²`, so `l2 ≤ linf · √points`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub name: String,
    pub linf: f64,
    pub l2: f64,
    pub grid_h: f64,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub order_estimate: Option<f64>,
}

impl ResidualReport {
    pub fn from_values(name: impl Into<String>, values: &[f64], grid_h: f64) -> ResidualReport {
        let linf = values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let l2 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        ResidualReport {
            name: name.into(),
            linf,
            l2,
            grid_h,
            points: values.len(),
            order_estimate: None,
        }
    }

    pub fn from_field(name: impl Into<String>, f: &ScalarField) -> ResidualReport {
        Self::from_values(name, f.values(), f.grid().h_max())
    }

    /// Worst case over several reports: max `linf`, combined `l2`.
    pub fn combine(name: impl Into<String>, parts: &[ResidualReport]) -> ResidualReport {
        ResidualReport {
            name: name.into(),
            linf: parts.iter().fold(0.0, |m, r| m.max(r.linf)),
            l2: parts.iter().map(|r| r.l2 * r.l2).sum::<f64>().sqrt(),
            grid_h: parts.iter().fold(0.0, |m, r| m.max(r.grid_h)),
            points: parts.iter().map(|r| r.points).sum(),
            order_estimate: None,
        }
    }

    pub fn within(&self, tol: f64) -> bool {
        self.linf <= tol
    }

    pub fn is_analytic_zero(&self) -> bool {
        self.within(ANALYTIC_ZERO)
    }
}

/// Result of a refinement study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ConvergenceOutcome {
    Slope(f64),
    /// Some level already sits at the rounding floor; no slope is meaningful.
    Saturated,
}

impl ConvergenceOutcome {
    pub fn slope(&self) -> Option<f64> {
        match self {
            ConvergenceOutcome::Slope(s) => Some(*s),
            ConvergenceOutcome::Saturated => None,
        }
    }
}

/// Least-squares slope of `log(value)` against `log(h)`.
pub fn convergence_order(levels: &[(f64, f64)]) -> Result<ConvergenceOutcome> {
    if levels.len() < 3 {
        return Err(Error::TooFewLevels(levels.len()));
    }
    if levels.windows(2).any(|w| w[1].0 >= w[0].0) || levels.iter().any(|l| l.0 <= 0.0) {
        return Err(Error::SpacingNotDecreasing);
    }
    if levels.iter().any(|l| !l.1.is_finite() || l.1 < 0.0) {
        return Err(Error::InvalidParameter(
            "residual values must be finite and non-negative".into(),
        ));
    }
    if levels.iter().any(|l| l.1 <= SATURATION_FLOOR) {
        return Ok(ConvergenceOutcome::Saturated);
    }
    let n = levels.len() as f64;
    let xs: Vec<f64> = levels.iter().map(|l| l.0.ln()).collect();
    let ys: Vec<f64> = levels.iter().map(|l| l.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(ConvergenceOutcome::Slope(sxy / sxx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_sequence_has_exact_slope() {
        let s = convergence_order(&[(0.1, 1e-2), (0.05, 2.5e-3), (0.025, 6.25e-4)]).unwrap();
        assert!((s.slope().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn saturation() {
        let s = convergence_order(&[(0.1, 1e-15), (0.05, 1e-15), (0.025, 2e-15)]).unwrap();
        assert_eq!(s, ConvergenceOutcome::Saturated);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            convergence_order(&[(0.1, 1.0), (0.05, 0.5)]),
            Err(Error::TooFewLevels(2))
        ));
        assert!(matches!(
            convergence_order(&[(0.1, 1.0), (0.1, 0.5), (0.05, 0.2)]),
            Err(Error::SpacingNotDecreasing)
        ));
    }

    #[test]
    fn combine_takes_worst() {
        let a = ResidualReport::from_values("a", &[1.0, -2.0], 0.1);
        let b = ResidualReport::from_values("b", &[3.0], 0.2);
        let c = ResidualReport::combine("c", &[a, b]);
        assert_eq!(c.linf, 3.0);
        assert_eq!(c.points, 3);
        assert!((c.l2 - 14f64.sqrt()).abs() < 1e-15);
    }
}
