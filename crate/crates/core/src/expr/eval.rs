use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::{ClosedForm, Func, Node};
use crate::quadrature::adaptive_simpson;
use crate::{Error, Result};

const INTEGRAL_TOL: f64 = 1e-12;
const CHUNK: usize = 256;

#[derive(Debug, Clone)]
enum Instr {
    Const(f64),
    Var(usize),
    Affine(Vec<f64>, f64),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Neg(usize),
    Pow(usize, f64),
    Apply(Func, usize),
    Integral {
        integrand: Arc<Program>,
        lower: f64,
        upper: usize,
    },
}

/// A set of expressions flattened into one straight-line program.
///
/// Nodes shared between the expressions (or inside one of them) are evaluated
/// once per point.
#[derive(Debug, Clone)]
pub struct Program {
    instrs: Vec<Instr>,
    outputs: Vec<usize>,
    arity: usize,
}

impl Program {
    pub fn compile(exprs: &[&ClosedForm]) -> Program {
        let mut prog = Program {
            instrs: Vec::new(),
            outputs: Vec::new(),
            arity: 0,
        };
        let mut slots = HashMap::new();
        for e in exprs {
            let slot = prog.emit(e, &mut slots);
            prog.outputs.push(slot);
            prog.arity = prog.arity.max(e.arity());
        }
        prog
    }

    fn emit(&mut self, e: &ClosedForm, slots: &mut HashMap<usize, usize>) -> usize {
        if let Some(&s) = slots.get(&e.key()) {
            return s;
        }
        let instr = match e.node() {
            Node::Const(c) => Instr::Const(*c),
            Node::Var(i) => Instr::Var(*i),
            Node::Affine { coef, constant } => Instr::Affine(coef.clone(), *constant),
            Node::Add(a, b) => Instr::Add(self.emit(a, slots), self.emit(b, slots)),
            Node::Sub(a, b) => Instr::Sub(self.emit(a, slots), self.emit(b, slots)),
            Node::Mul(a, b) => Instr::Mul(self.emit(a, slots), self.emit(b, slots)),
            Node::Div(a, b) => Instr::Div(self.emit(a, slots), self.emit(b, slots)),
            Node::Neg(a) => Instr::Neg(self.emit(a, slots)),
            Node::Pow(a, p) => Instr::Pow(self.emit(a, slots), *p),
            Node::Apply(f, a) => Instr::Apply(*f, self.emit(a, slots)),
            Node::Integral {
                integrand,
                lower,
                upper,
            } => Instr::Integral {
                integrand: Arc::new(Program::compile(&[integrand])),
                lower: *lower,
                upper: self.emit(upper, slots),
            },
        };
        self.instrs.push(instr);
        let slot = self.instrs.len() - 1;
        slots.insert(e.key(), slot);
        slot
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Number of coordinates a point must supply.
    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Evaluates every output at `point`, writing them to `out`.
    pub fn eval_into(&self, point: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) -> Result<()> {
        if point.len() < self.arity {
            return Err(Error::UnboundVariable {
                index: self.arity - 1,
                available: point.len(),
            });
        }
        scratch.clear();
        scratch.reserve(self.instrs.len());
        for instr in &self.instrs {
            let v = match instr {
                Instr::Const(c) => *c,
                Instr::Var(i) => point[*i],
                Instr::Affine(coef, k) => coef.iter().zip(point).map(|(c, x)| c * x).sum::<f64>() + k,
                Instr::Add(a, b) => scratch[*a] + scratch[*b],
                Instr::Sub(a, b) => scratch[*a] - scratch[*b],
                Instr::Mul(a, b) => scratch[*a] * scratch[*b],
                Instr::Div(a, b) => {
                    let d = scratch[*b];
                    if d == 0.0 {
                        return Err(Error::DivisionByZero { point: point.to_vec() });
                    }
                    scratch[*a] / d
                }
                Instr::Neg(a) => -scratch[*a],
                Instr::Pow(a, p) => {
                    let base = scratch[*a];
                    if base == 0.0 && *p < 0.0 {
                        return Err(Error::DivisionByZero { point: point.to_vec() });
                    }
                    if p.fract() == 0.0 && p.abs() <= 64.0 {
                        base.powi(*p as i32)
                    } else {
                        base.powf(*p)
                    }
                }
                Instr::Apply(f, a) => f.apply(scratch[*a]),
                Instr::Integral {
                    integrand,
                    lower,
                    upper,
                } => {
                    let hi = scratch[*upper];
                    let mut inner = Vec::new();
                    let f = |s: f64| {
                        let mut o = [0.0];
                        match integrand.eval_into(&[s], &mut inner, &mut o) {
                            Ok(()) => o[0],
                            Err(_) => f64::NAN,
                        }
                    };
                    adaptive_simpson(f, *lower, hi, INTEGRAL_TOL)
                        .map_err(|_| Error::NonFinite { point: point.to_vec() })?
                }
            };
            scratch.push(v);
        }
        for (o, &slot) in out.iter_mut().zip(&self.outputs) {
            let v = scratch[slot];
            if !v.is_finite() {
                return Err(Error::NonFinite { point: point.to_vec() });
            }
            *o = v;
        }
        Ok(())
    }
}

/// Evaluates `prog` at `npts` points in parallel.
///
/// `coords(i, buf)` fills the coordinates of point `i`. The result is laid out
/// point-major (`out[i * n_outputs + k]`). On failure the error for the lowest
/// failing index is returned, so the outcome does not depend on scheduling.
pub fn eval_points<F>(prog: &Program, npts: usize, ncoord: usize, coords: F) -> Result<Vec<f64>>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let nout = prog.n_outputs();
    if nout == 0 || npts == 0 {
        return Ok(Vec::new());
    }
    let mut out = vec![0.0; npts * nout];
    let failures: Vec<Option<Error>> = out
        .par_chunks_mut(nout * CHUNK)
        .enumerate()
        .map(|(c, block)| {
            let mut scratch = Vec::new();
            let mut pt = vec![0.0; ncoord];
            for (k, o) in block.chunks_mut(nout).enumerate() {
                coords(c * CHUNK + k, &mut pt);
                if let Err(e) = prog.eval_into(&pt, &mut scratch, o) {
                    return Some(e);
                }
            }
            None
        })
        .collect();
    match failures.into_iter().flatten().next() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_nodes_evaluated_once() {
        let x = ClosedForm::var(0);
        let s = x.sin();
        let e = &s * &s + &s;
        let prog = Program::compile(&[&e, &s]);
        // var, sin, mul, add
        assert_eq!(prog.instrs.len(), 4);
        let mut out = [0.0; 2];
        prog.eval_into(&[0.5], &mut Vec::new(), &mut out).unwrap();
        let sv = 0.5f64.sin();
        assert!((out[0] - (sv * sv + sv)).abs() < 1e-16);
        assert_eq!(out[1], sv);
    }

    #[test]
    fn division_by_zero_reports_point() {
        let e = ClosedForm::one() / ClosedForm::var(1);
        match e.eval(&[3.0, 0.0]) {
            Err(Error::DivisionByZero { point }) => assert_eq!(point, vec![3.0, 0.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unbound_variable() {
        let e = ClosedForm::var(2);
        assert!(matches!(e.eval(&[1.0]), Err(Error::UnboundVariable { .. })));
    }

    #[test]
    fn first_failure_is_deterministic() {
        let e = ClosedForm::one() / ClosedForm::var(0);
        let prog = Program::compile(&[&e]);
        let err = eval_points(&prog, 5000, 1, |i, p| {
            p[0] = if i % 1000 == 999 { 0.0 } else { 1.0 + i as f64 }
        })
        .unwrap_err();
        assert!(matches!(err, Error::DivisionByZero { .. }));
    }
}
