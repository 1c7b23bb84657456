use pyo3::prelude::*;

#[pymodule]
mod acflow {
    use ::acflow::cli::{catalog as items, run_converge, run_verify, RunConfig};
    use ::acflow::ClosedForm;
    use pyo3::exceptions::PyValueError;
    use pyo3::prelude::*;

    fn err(e: ::acflow::Error) -> PyErr {
        PyValueError::new_err(e.to_string())
    }

    /// Target ids known to `verify` and `converge`.
    #[pyfunction]
    fn catalog() -> Vec<&'static str> {
        items().iter().map(|i| i.id).collect()
    }

    /// Runs the checks of a JSON config and returns the JSON report.
    #[pyfunction]
    fn verify(py: Python<'_>, config: &str) -> PyResult<String> {
        let cfg = RunConfig::from_json(config).map_err(err)?;
        py.detach(|| run_verify(&cfg).and_then(|r| r.to_json())).map_err(err)
    }

    /// Runs a convergence study and returns the JSON report.
    #[pyfunction]
    fn converge(py: Python<'_>, config: &str) -> PyResult<String> {
        let cfg = RunConfig::from_json(config).map_err(err)?;
        py.detach(|| run_converge(&cfg).and_then(|r| r.to_json())).map_err(err)
    }

    /// Evaluates a JSON closed form at one point.
    #[pyfunction]
    fn evaluate(expr: &str, point: Vec<f64>) -> PyResult<f64> {
        let e = ClosedForm::from_json_str(expr).map_err(err)?;
        e.eval(&point).map_err(err)
    }

    /// Partial derivative of a JSON closed form, as JSON.
    #[pyfunction]
    fn partial(expr: &str, orders: Vec<usize>) -> PyResult<String> {
        let e = ClosedForm::from_json_str(expr).map_err(err)?;
        Ok(e.partial(&orders).to_json().to_string())
    }
}
